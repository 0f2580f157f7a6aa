#include "pedsplat/error.hpp"
#include "pedsplat/simulator.hpp"

#include "oracles.hpp"
#include "scenes.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <set>

using namespace pedsplat;
using pedsplat::fixtures::small_scene;
using pedsplat::fixtures::sphere_trace_capsule;

TEST(Capsule, AgreesWithSphereTracing) {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    Capsule c;
    c.position = Eigen::Vector2d(0.3, -0.2);
    const Eigen::Vector3d a(0.3, -0.2, c.radius), b(0.3, -0.2, c.height - c.radius);
    int hits = 0;
    for (int i = 0; i < 2000; ++i) {
        const Eigen::Vector3d origin(4.0 * u(rng), 4.0 * u(rng), 1.0 + 2.0 * u(rng));
        if ((origin - Eigen::Vector3d(0.3, -0.2, std::clamp(origin.z(), a.z(), b.z()))).norm() < 1.2 * c.radius) continue;
        const Eigen::Vector3d target(0.3 + 0.4 * u(rng), -0.2 + 0.4 * u(rng), 0.85 + 0.9 * u(rng));
        const Eigen::Vector3d dir = (target - origin) * (0.5 + std::abs(u(rng)));
        const auto t = c.intersect(origin, dir);
        const double ref = sphere_trace_capsule(a, b, c.radius, origin, dir, 100.0);
        ASSERT_EQ(t.has_value(), ref >= 0.0) << i;
        if (t) {
            ++hits;
            EXPECT_NEAR(*t, ref, 1e-7);
        }
    }
    EXPECT_GT(hits, 500);
}

TEST(Capsule, RayFromBehindMisses) {
    Capsule c;
    EXPECT_FALSE(c.intersect(Eigen::Vector3d(3, 0, 1), Eigen::Vector3d(1, 0, 0)));
    const auto t = c.intersect(Eigen::Vector3d(3, 0, 1), Eigen::Vector3d(-2, 0, 0));
    ASSERT_TRUE(t);
    EXPECT_NEAR(*t, (3.0 - c.radius) / 2.0, 1e-12);
}

TEST(Simulator, DeterministicPerSeed) {
    const auto a = generate_scene(small_scene(5));
    const auto b = generate_scene(small_scene(5));
    const auto c = generate_scene(small_scene(6));
    ASSERT_EQ(a.views.size(), b.views.size());
    for (std::size_t v = 0; v < a.views.size(); ++v) {
        EXPECT_EQ(a.views[v].image, b.views[v].image);
        EXPECT_EQ(a.views[v].instances, b.views[v].instances);
    }
    EXPECT_NE(a.truth.locations(), c.truth.locations());
}

TEST(Simulator, PlacementRespectsAreaAndSeparation) {
    for (int seed = 1; seed <= 10; ++seed) {
        auto cfg = small_scene(seed, 8);
        cfg.min_separation = 0.8;
        const auto sim = generate_scene(cfg);
        const auto loc = sim.truth.locations();
        ASSERT_EQ(loc.size(), 8u);
        for (std::size_t i = 0; i < loc.size(); ++i) {
            EXPECT_LE(loc[i].cwiseAbs().maxCoeff(), cfg.area_half_extent);
            for (std::size_t j = 0; j < i; ++j) EXPECT_GE((loc[i] - loc[j]).norm(), 0.8);
        }
    }
}

TEST(Simulator, DepthLiesOnTheSurfaceAndMatchesRaycast) {
    const auto sim = generate_scene(small_scene(2));
    const auto& t = sim.truth;
    for (std::size_t v = 0; v < sim.views.size(); ++v) {
        int checked = 0;
        for (int y = 0; y < 96; y += 3)
            for (int x = 0; x < 96; x += 3) {
                const auto id = t.id_masks[v](x, y);
                const double d = t.depth[v](x, y);
                ASSERT_EQ(id != 0, std::isfinite(d));
                if (!id) continue;
                const Capsule& c = t.pedestrians[id - 1];
                const Eigen::Vector3d p = unproject(Eigen::Vector2d(x, y), d, t.cameras[v]);
                const double z = std::clamp(p.z(), c.radius, c.height - c.radius);
                EXPECT_NEAR((p - Eigen::Vector3d(c.position.x(), c.position.y(), z)).norm(), c.radius, 1e-9);
                EXPECT_NEAR(t.depth_at(static_cast<int>(v), Eigen::Vector2d(x, y)), d, 1e-9);
                ++checked;
            }
        EXPECT_GT(checked, 0);
    }
}

TEST(Simulator, LabelsMapToThePedestrianUnderThem) {
    const auto sim = generate_scene(small_scene(3));
    for (std::size_t v = 0; v < sim.views.size(); ++v) {
        const auto& inst = sim.views[v].instances;
        std::set<int> peds;
        for (std::size_t i = 0; i < inst.size(); ++i) {
            if (!inst[i]) continue;
            const int p = sim.truth.label_to_pedestrian[v].at(inst[i]);
            EXPECT_EQ(sim.truth.id_masks[v][i], p + 1);
            peds.insert(p);
        }
        for (std::size_t p = 0; p < sim.truth.pedestrians.size(); ++p)
            EXPECT_EQ(peds.contains(static_cast<int>(p)), sim.truth.visible[p][v]);
        EXPECT_EQ(sim.views[v].id, sim.truth.view_ids[v]);
        EXPECT_EQ(sim.truth.view_index(sim.views[v].id), static_cast<int>(v));
    }
    EXPECT_EQ(sim.truth.view_index("nope"), -1);
}

TEST(Simulator, MissedMasksAreRecordedAndLeaveTruthIntact) {
    auto cfg = small_scene(4);
    cfg.missed_mask_rate = 1.0;
    const auto sim = generate_scene(cfg);
    std::size_t visible = 0;
    for (const auto& row : sim.truth.visible)
        for (bool b : row) visible += b;
    EXPECT_EQ(sim.truth.missed.size(), visible);
    for (std::size_t v = 0; v < sim.views.size(); ++v) {
        EXPECT_EQ(count_nonzero(sim.views[v].foreground()), 0u);
        EXPECT_GT(count_nonzero(foreground_of(sim.truth.id_masks[v])), 0u);
    }
}

TEST(Simulator, RejectsBadConfigs) {
    auto cfg = small_scene(1);
    cfg.height = 0.4;
    EXPECT_THROW(generate_scene(cfg), ConfigError);
    cfg = small_scene(1);
    cfg.brightness_jitter = 1.0;
    EXPECT_THROW(generate_scene(cfg), ConfigError);
    cfg = small_scene(1, 40);
    cfg.area_half_extent = 0.5;
    cfg.max_placement_attempts = 100;
    EXPECT_THROW(generate_scene(cfg), ConfigError);
}

TEST(GroundTruthOracle, ReturnsTheSilhouetteUnderThePrompts) {
    const auto sim = generate_scene(small_scene(2));
    auto oracle = gt_oracle(sim.truth);
    const auto& ids = sim.truth.id_masks[0];
    const auto label = instance_labels(ids).front();
    const Mask truth = binary_of(ids, label);
    const PixelBox box = bounding_box(truth);
    std::vector<Eigen::Vector2d> points;
    for (int y = 0; y < 96 && points.size() < 3; ++y)
        for (int x = 0; x < 96 && points.size() < 3; ++x)
            if (truth(x, y)) points.emplace_back(x, y);

    SegmentationRequest req{sim.views[0].id, &sim.views[0].image, points, box};
    EXPECT_EQ(oracle->segment(req), truth);

    req.box = {box.x1 + 2, box.y0, box.x1 + 6, box.y1}; // beside the silhouette
    EXPECT_EQ(count_nonzero(oracle->segment(req)), 0u);

    req.view_id = "x/unknown";
    EXPECT_THROW(oracle->segment(req), DataError);
}
