#include "scenes.hpp"

#include <algorithm>
#include <cmath>
#include <map>

namespace pedsplat::fixtures {

Intrinsics square_intrinsics(int size, double focal) {
    Intrinsics k;
    k.fx = k.fy = focal;
    k.cx = k.cy = 0.5 * (size - 1);
    k.width = k.height = size;
    return k;
}

Camera ring_camera(int i, int n, double radius, double height, int size, double focal,
                   const Eigen::Vector3d& target) {
    const double a = 2.0 * M_PI * i / n + 0.3;
    const Eigen::Vector3d eye(radius * std::cos(a), radius * std::sin(a), height);
    return Camera::look_at("cam" + std::to_string(i), square_intrinsics(size, focal), eye, target);
}

Eigen::Quaterniond random_rotation(std::mt19937_64& rng) {
    std::normal_distribution<double> n(0.0, 1.0);
    Eigen::Quaterniond q(n(rng), n(rng), n(rng), n(rng));
    q.normalize();
    return q;
}

std::vector<Gaussian3D> random_gaussians(std::mt19937_64& rng, int n, const Eigen::Vector3d& center, double spread,
                                         double min_scale, double max_scale, double min_opacity,
                                         double max_opacity) {
    std::uniform_real_distribution<double> u(-1.0, 1.0), u01(0.0, 1.0);
    std::vector<Gaussian3D> out;
    for (int i = 0; i < n; ++i) {
        Gaussian3D g;
        g.mean = center + spread * Eigen::Vector3d(u(rng), u(rng), u(rng));
        for (int k = 0; k < 3; ++k)
            g.log_scales[k] = std::log(min_scale + (max_scale - min_scale) * u01(rng));
        g.orientation = random_rotation(rng);
        g.opacity_logit = logit(min_opacity + (max_opacity - min_opacity) * u01(rng));
        g.color = Rgb(u01(rng), u01(rng), u01(rng));
        out.push_back(g);
    }
    return out;
}

SceneConfig small_scene(std::uint64_t seed, int pedestrians, int cameras) {
    SceneConfig cfg;
    cfg.seed = seed;
    cfg.pedestrians = pedestrians;
    cfg.cameras = cameras;
    cfg.area_half_extent = 2.5;
    cfg.image_size = 96;
    cfg.focal = 83.0;
    return cfg;
}

std::vector<Gaussian3D> truth_cloud(const SimulatedScene& scene) {
    std::vector<Eigen::Vector3d> points;
    std::vector<Rgb> colors;
    std::vector<PointSource> sources;
    const auto& truth = scene.truth;
    for (std::size_t v = 0; v < scene.views.size(); ++v) {
        const auto& view = scene.views[v];
        for (int y = 0; y < view.instances.height(); ++y)
            for (int x = 0; x < view.instances.width(); ++x) {
                if (!view.instances(x, y)) continue;
                const double d = truth.depth[v](x, y);
                const Eigen::Vector2d px(x, y);
                points.push_back(unproject(px, d, truth.cameras[v]));
                colors.push_back(view.image(x, y));
                sources.push_back({static_cast<int>(v), px, d});
            }
    }
    return from_point_cloud(points, colors, sources, truth.cameras);
}

std::vector<MaskPair> covisible_mask_pairs(const SimulatedScene& scene) {
    const auto& truth = scene.truth;
    const int n = static_cast<int>(scene.views.size());
    std::vector<MaskPair> out;
    for (int a = 0; a < n; ++a) {
        const auto& inst = scene.views[a].instances;
        for (int b = a + 1; b < n; ++b) {
            std::map<std::uint16_t, std::uint16_t> pair_of; // label in a -> label in b
            const auto& cam_b = truth.cameras[b];
            for (int y = 0; y < inst.height(); ++y)
                for (int x = 0; x < inst.width(); ++x) {
                    const auto la = inst(x, y);
                    if (!la || pair_of.contains(la)) continue;
                    const int ped = truth.label_to_pedestrian[a].at(la);
                    const auto lb_it = std::find_if(truth.label_to_pedestrian[b].begin(),
                                                    truth.label_to_pedestrian[b].end(),
                                                    [&](const auto& kv) { return kv.second == ped; });
                    if (lb_it == truth.label_to_pedestrian[b].end()) continue;
                    const Eigen::Vector3d p = unproject(Eigen::Vector2d(x, y), truth.depth[a](x, y), truth.cameras[a]);
                    const auto pr = project(p, cam_b);
                    if (!(pr.depth > 0) || !cam_b.in_frame(pr.pixel)) continue;
                    const auto hit = truth.raycast(cam_b.center(), cam_b.ray_direction(pr.pixel));
                    if (hit && hit->pedestrian == ped && std::abs(hit->t - pr.depth) < 1e-6) pair_of[la] = lb_it->first;
                }
            for (const auto& [la, lb] : pair_of) out.push_back({a, la, b, lb});
        }
    }
    return out;
}

std::vector<DepthLookup> analytic_lookups(const GroundTruthBundle& truth) {
    std::vector<DepthLookup> out;
    for (std::size_t v = 0; v < truth.cameras.size(); ++v)
        out.push_back([&truth, v](const Eigen::Vector2d& px) { return truth.depth_at(static_cast<int>(v), px); });
    return out;
}

bool covisible_pixel(const GroundTruthBundle& truth, int s, int x, int y) {
    const Eigen::Vector3d p = unproject(Eigen::Vector2d(x, y), truth.depth[s](x, y), truth.cameras[s]);
    for (std::size_t r = 0; r < truth.cameras.size(); ++r) {
        if (static_cast<int>(r) == s) continue;
        const auto pr = project(p, truth.cameras[r]);
        if (!(pr.depth > 0) || !truth.cameras[r].in_frame(pr.pixel)) continue;
        if (std::abs(truth.depth_at(static_cast<int>(r), pr.pixel) - pr.depth) < 1e-6) return true;
    }
    return false;
}

} // namespace pedsplat::fixtures
