#include "pedsplat/depthfilter.hpp"
#include "pedsplat/localization.hpp"
#include "pedsplat/matching.hpp"
#include "pedsplat/optimizer.hpp"
#include "pedsplat/renderer.hpp"
#include "pedsplat/simulator.hpp"

#include "gradients.hpp"
#include "scenes.hpp"

#include <benchmark/benchmark.h>

#include <random>

using namespace pedsplat;

namespace {

// Full-size reference scene, built once.
const SimulatedScene& scene() {
    static const SimulatedScene s = generate_scene(SceneConfig{});
    return s;
}

const std::vector<Gaussian3D>& cloud() {
    static const std::vector<Gaussian3D> c = fixtures::truth_cloud(scene());
    return c;
}

} // namespace

static void BM_Render(benchmark::State& state) {
    std::mt19937_64 rng(1);
    const auto gs = fixtures::random_gaussians(rng, static_cast<int>(state.range(0)), Eigen::Vector3d(0, 0, 0.8), 2.0,
                                               0.02, 0.1, 0.1, 0.9);
    const Camera cam = fixtures::ring_camera(0, 6, 9.0, 4.0, 256, 222.0);
    for (auto _ : state) benchmark::DoNotOptimize(render(gs, cam));
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_Render)->Arg(1000)->Arg(10000)->Unit(benchmark::kMillisecond);

static void BM_LossAndGradient(benchmark::State& state) {
    std::mt19937_64 rng(2);
    const auto views = fixtures::random_training_views(rng, 64, 60.0);
    const auto gs = fixtures::random_gaussians(rng, static_cast<int>(state.range(0)), Eigen::Vector3d(0, 0, 0.8), 0.4,
                                               0.03, 0.1, 0.1, 0.9);
    std::vector<GaussianGradient> grad;
    for (auto _ : state) benchmark::DoNotOptimize(loss_and_gradient(gs, views, LossWeights{}, grad));
}
BENCHMARK(BM_LossAndGradient)->Arg(200)->Arg(2000)->Unit(benchmark::kMillisecond);

static void BM_FilterDepths(benchmark::State& state) {
    const auto& s = scene();
    for (auto _ : state) benchmark::DoNotOptimize(filter_depths(s.views, s.truth.depth, FilterParams{}));
}
BENCHMARK(BM_FilterDepths)->Unit(benchmark::kMillisecond);

static void BM_MatchLabels(benchmark::State& state) {
    const auto& s = scene();
    for (auto _ : state) benchmark::DoNotOptimize(match_labels(cloud(), s.views));
}
BENCHMARK(BM_MatchLabels)->Unit(benchmark::kMillisecond);

static void BM_Localize(benchmark::State& state) {
    auto scene_ids = match_labels(cloud(), scene().views);
    for (auto _ : state) benchmark::DoNotOptimize(localize(scene_ids.gaussians));
}
BENCHMARK(BM_Localize)->Unit(benchmark::kMillisecond);
BENCHMARK_MAIN();
