#include "pedsplat/camera.hpp"
#include "pedsplat/error.hpp"

#include "scenes.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace pedsplat;

namespace {

Camera test_camera() { return fixtures::ring_camera(0, 6, 9.0, 4.0, 256, 222.0); }

} // namespace

TEST(Camera, ProjectUnprojectRoundTrip) {
    const Camera cam = test_camera();
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> px(0.0, 255.0), depth(0.5, 30.0);
    for (int i = 0; i < 1000; ++i) {
        const Eigen::Vector2d pixel(px(rng), px(rng));
        const Eigen::Vector3d p = unproject(pixel, depth(rng), cam);
        const auto proj = project(p, cam);
        EXPECT_LT((unproject(proj.pixel, proj.depth, cam) - p).norm(), 1e-6);
    }
}

TEST(Camera, PrincipalPointProjectsOnAxis) {
    const Camera cam = test_camera();
    const Eigen::Vector3d forward = cam.extrinsics.rotation.col(2);
    const auto proj = project(cam.center() + 5.0 * forward, cam);
    EXPECT_NEAR(proj.pixel.x(), cam.intrinsics.cx, 1e-9);
    EXPECT_NEAR(proj.pixel.y(), cam.intrinsics.cy, 1e-9);
    EXPECT_NEAR(proj.depth, 5.0, 1e-12);
}

TEST(Camera, BehindAndDegenerate) {
    const Camera cam = test_camera();
    const Eigen::Vector3d forward = cam.extrinsics.rotation.col(2);
    EXPECT_TRUE(project(cam.center() - 2.0 * forward, cam).behind_camera());
    EXPECT_THROW(project(cam.center() + cam.extrinsics.rotation.col(0), cam), GeometryError);
    EXPECT_THROW(unproject({10, 10}, 0.0, cam), GeometryError);
}

TEST(Camera, ReprojectIdentity) {
    const Camera cam = test_camera();
    std::mt19937_64 rng(12);
    std::uniform_real_distribution<double> px(0.0, 255.0), depth(0.5, 30.0);
    for (int i = 0; i < 100; ++i) {
        const Eigen::Vector2d pixel(px(rng), px(rng));
        const double d = depth(rng);
        const auto r = reproject(pixel, d, cam, cam);
        EXPECT_LT((r.pixel - pixel).norm(), 1e-9);
        EXPECT_NEAR(r.depth, d, 1e-9);
        EXPECT_TRUE(r.in_frame);
    }
}

TEST(Camera, LookAtIsRightHandedAndUpright) {
    const Camera cam = test_camera();
    EXPECT_NO_THROW(cam.validate());
    // World up maps to image up (negative y).
    const auto a = project(Eigen::Vector3d(0, 0, 0), cam);
    const auto b = project(Eigen::Vector3d(0, 0, 1.7), cam);
    EXPECT_LT(b.pixel.y(), a.pixel.y());
}

TEST(Camera, InvalidCalibrationRejected) {
    Camera cam = test_camera();
    cam.intrinsics.fx = -1;
    EXPECT_THROW(cam.validate(), ConfigError);
    cam = test_camera();
    cam.extrinsics.rotation(0, 0) += 1e-3;
    EXPECT_THROW(cam.validate(), ConfigError);
}

TEST(Camera, GroundDepthMatchesRayIntersection) {
    const Camera cam = test_camera();
    const DepthImage map = ground_depth_map(cam, {-6, 6, -6, 6}, 0.01);
    int checked = 0;
    for (int y = 0; y < 256; y += 7)
        for (int x = 0; x < 256; x += 7) {
            if (std::isnan(map(x, y))) continue;
            const auto exact = ground_intersection_depth(cam, {x, y});
            ASSERT_TRUE(exact.has_value());
            // Nearest-pixel splatting: within one pixel's worth of depth change.
            EXPECT_NEAR(map(x, y), *exact, 0.05 * *exact);
            ++checked;
        }
    EXPECT_GT(checked, 50);
}

TEST(Camera, GroundDepthRejectsBadRange) {
    const Camera cam = test_camera();
    EXPECT_THROW(ground_depth_map(cam, {1, -1, 0, 1}, 0.1), ConfigError);
    EXPECT_THROW(ground_depth_map(cam, {-1, 1, -1, 1}, 0.0), ConfigError);
}
