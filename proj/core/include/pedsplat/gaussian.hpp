#pragma once

#include "pedsplat/camera.hpp"
#include "pedsplat/superpixel.hpp"
#include "pedsplat/view.hpp"

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <optional>
#include <span>
#include <vector>

namespace pedsplat {

/// One splat: Sigma = R diag(exp(log_scales))^2 R^T, opacity = sigmoid(opacity_logit).
struct Gaussian3D {
    Eigen::Vector3d mean = Eigen::Vector3d::Zero();
    Eigen::Vector3d log_scales = Eigen::Vector3d::Constant(-3.0);
    Eigen::Quaterniond orientation = Eigen::Quaterniond::Identity();
    double opacity_logit = 0.0;
    Rgb color = Rgb::Zero();
    std::optional<int> ped_id;

    double opacity() const;
    Eigen::Vector3d scales() const { return log_scales.array().exp(); }
    Eigen::Matrix3d covariance() const;
    /// Checks scale range, unit quaternion and finite parameters.
    bool valid() const;
};

double sigmoid(double x);
double logit(double p);

struct RaySamplingConfig {
    int samples_per_ray = 64;
    /// Ray segment; when unset the segment is the ray's intersection with `scene_bounds`.
    std::optional<double> t_near;
    std::optional<double> t_far;
    Eigen::AlignedBox3d scene_bounds{Eigen::Vector3d(-10, -10, 0), Eigen::Vector3d(10, 10, 2)};
    double initial_opacity = 0.01;

    void validate() const;
};

/// Circle radius approximating a superpixel of `pixel_count` pixels whose pixels
/// measure dx by dy in world units.
double superpixel_radius(double pixel_count, double dx, double dy);

/// Radius of the sphere at distance `t` along the ray through the circle center
/// `c` that is tangent to the cone through the circle's edge. `f` is the focal
/// distance of the image plane in the same units as `r`, `c` and `o`.
double init_scale(double t, double f, double r, const Eigen::Vector3d& c, const Eigen::Vector3d& o);

/// Gaussian scale for a superpixel of `pixel_count` pixels centered at `pixel`,
/// placed at distance `t` from the camera center. Works on the unit-depth image
/// plane (f = 1, pixel pitch 1/fx by 1/fy).
double superpixel_scale(const Camera& camera, const Eigen::Vector2d& pixel, double pixel_count, double t);

/// Casts a ray through every superpixel centroid and drops `samples_per_ray`
/// spheres uniformly on the ray segment.
std::vector<Gaussian3D> init_from_superpixels(std::span<const CameraView> views,
                                              std::span<const SuperpixelMap> maps,
                                              const RaySamplingConfig& cfg);

/// Like init_from_superpixels but samples t in [d - half_width, d + half_width]
/// around a per-superpixel depth `depths[view][segment]` (NaN skips the segment).
std::vector<Gaussian3D> init_from_depth(std::span<const CameraView> views, std::span<const SuperpixelMap> maps,
                                        const std::vector<std::vector<double>>& depths, int samples,
                                        double half_width, double initial_opacity);

/// Removes Gaussians whose mean projects onto background in any view that sees it.
std::vector<Gaussian3D> cull_background(std::span<const Gaussian3D> gaussians, std::span<const CameraView> views);

/// Origin of a fused point: which camera and pixel it was unprojected from.
struct PointSource {
    int view = 0;
    Eigen::Vector2d pixel = Eigen::Vector2d::Zero();
    double depth = 0.0;
};

/// One Gaussian per point: color from the pixel, one axis along the viewing
/// ray, single-pixel footprint scale, opacity 0.99.
std::vector<Gaussian3D> from_point_cloud(std::span<const Eigen::Vector3d> points, std::span<const Rgb> colors,
                                         std::span<const PointSource> sources, std::span<const Camera> cameras);

} // namespace pedsplat
