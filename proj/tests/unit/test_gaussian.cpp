#include "pedsplat/error.hpp"
#include "pedsplat/gaussian.hpp"

#include "oracles.hpp"
#include "scenes.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

using namespace pedsplat;

TEST(InitScale, WorkedValue) {
    const Eigen::Vector3d o(0, 0, 0), c(1, 0, 1); // |c - o| = sqrt(2), f = 1
    const double s = init_scale(2.0, 1.0, 0.1, c, o);
    // Hand substitution: 2 * 0.1 / (sqrt(2) * sqrt(0.9^2 + 1)).
    EXPECT_NEAR(s, 0.2 / (std::sqrt(2.0) * std::sqrt(1.81)), 1e-15);
    // Six-digit value 0.105117 (truncated; the next digit is 7).
    EXPECT_EQ(std::floor(s * 1e6), 105117.0);
}

TEST(InitScale, MatchesTangencyOracle) {
    std::mt19937_64 rng(21);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int i = 0; i < 100; ++i) {
        const double f = 0.5 + 1.5 * u(rng);
        const double lateral = 0.05 + 2.0 * u(rng);
        const double r = lateral * (0.01 + 0.9 * u(rng));
        const double t = 0.5 + 20.0 * u(rng);
        const Eigen::Vector3d o(0, 0, 0), c(lateral, 0, f);
        const double s = init_scale(t, f, r, c, o);
        const double oracle = fixtures::tangent_sphere_radius(t, f, r, lateral);
        EXPECT_LT(std::abs(s - oracle) / oracle, 1e-6);
    }
}

TEST(InitScale, PrincipalPointAndLinearity) {
    const Eigen::Vector3d o(0, 0, 0), c(0, 0, 1);
    // On the optical axis the circle edge subtends atan(r / f).
    EXPECT_NEAR(init_scale(3.0, 1.0, 0.2, c, o), 3.0 * std::sin(std::atan(0.2)), 1e-12);
    const Eigen::Vector3d c2(0.7, 0.2, 1.0);
    EXPECT_NEAR(init_scale(4.0, 1.0, 0.1, c2, o), 2.0 * init_scale(2.0, 1.0, 0.1, c2, o), 1e-12);
}

TEST(InitScale, DegenerateConesRejected) {
    const Eigen::Vector3d o(0, 0, 0);
    EXPECT_THROW(init_scale(1.0, 1.0, 0.1, Eigen::Vector3d(0, 0, 0.5), o), GeometryError);
    EXPECT_THROW(init_scale(0.0, 1.0, 0.1, Eigen::Vector3d(0, 0, 1), o), GeometryError);
}

TEST(InitFromSuperpixels, SamplesInsideSceneBounds) {
    const Camera cam = fixtures::ring_camera(0, 6, 9.0, 4.0, 64, 60.0);
    CameraView view{"0/cam0", cam, RgbImage(64, 64, Rgb(0.2, 0.3, 0.4)), LabelImage(64, 64, 0), std::nullopt};
    for (int y = 20; y < 40; ++y)
        for (int x = 28; x < 36; ++x) view.instances(x, y) = 1;
    const auto map = segment_pedestrians(view.image, view.instances, 4);
    RaySamplingConfig cfg;
    cfg.samples_per_ray = 16;
    const std::vector<CameraView> views{view};
    const std::vector<SuperpixelMap> maps{map};
    const auto gs = init_from_superpixels(views, maps, cfg);
    EXPECT_EQ(gs.size(), 4u * 16u);
    for (const auto& g : gs) {
        EXPECT_LT(cfg.scene_bounds.exteriorDistance(g.mean), 1e-9);
        EXPECT_TRUE(g.valid());
        EXPECT_NEAR(g.opacity(), 0.01, 1e-12);
    }
}

TEST(InitFromSuperpixels, ScaleGrowsWithDistance) {
    const Camera cam = fixtures::ring_camera(0, 6, 9.0, 4.0, 64, 60.0);
    const double near = superpixel_scale(cam, {30, 30}, 20, 2.0);
    const double far = superpixel_scale(cam, {30, 30}, 20, 8.0);
    EXPECT_NEAR(far / near, 4.0, 1e-9);
}

TEST(CullBackground, DropsGaussiansOverBackground) {
    const Camera cam = fixtures::ring_camera(0, 6, 9.0, 4.0, 64, 60.0);
    CameraView view{"0/cam0", cam, RgbImage(64, 64), LabelImage(64, 64, 0), std::nullopt};
    const auto target = project(Eigen::Vector3d(0, 0, 0.8), cam);
    const auto px = Camera::nearest_pixel(target.pixel);
    view.instances(px.x(), px.y()) = 1;
    Gaussian3D inside, outside;
    inside.mean = Eigen::Vector3d(0, 0, 0.8);
    outside.mean = Eigen::Vector3d(3, 3, 0.8);
    const std::vector<CameraView> views{view};
    const auto kept = cull_background(std::vector{inside, outside}, views);
    ASSERT_EQ(kept.size(), 1u);
    EXPECT_EQ(kept[0].mean, inside.mean);
}

TEST(FromPointCloud, OrientsAlongRayAndIsOpaque) {
    const Camera cam = fixtures::ring_camera(1, 6, 9.0, 4.0, 64, 60.0);
    const Eigen::Vector3d p = unproject({20, 30}, 7.0, cam);
    const std::vector<Eigen::Vector3d> pts{p};
    const std::vector<Rgb> colors{Rgb(1, 0, 0)};
    const std::vector<PointSource> src{{0, {20, 30}, 7.0}};
    const std::vector<Camera> cams{cam};
    const auto gs = from_point_cloud(pts, colors, src, cams);
    ASSERT_EQ(gs.size(), 1u);
    EXPECT_NEAR(gs[0].opacity(), 0.99, 1e-12);
    const Eigen::Vector3d axis = gs[0].orientation.toRotationMatrix().col(2);
    EXPECT_NEAR(std::abs(axis.dot((p - cam.center()).normalized())), 1.0, 1e-12);
    EXPECT_TRUE(gs[0].valid());
    EXPECT_THROW(from_point_cloud(pts, std::vector<Rgb>{}, src, cams), DataError);
}
