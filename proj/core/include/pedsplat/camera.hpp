#pragma once

#include "pedsplat/image.hpp"

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <optional>
#include <string>
#include <vector>

namespace pedsplat {

struct Intrinsics {
    double fx = 1.0;
    double fy = 1.0;
    double cx = 0.0;
    double cy = 0.0;
    int width = 1;
    int height = 1;

    /// Throws ConfigError unless fx, fy > 0 and the principal point lies in the frame.
    void validate() const;
    Eigen::Matrix3d matrix() const;
};

/// Camera-to-world pose: p_world = rotation * p_cam + translation.
struct Extrinsics {
    Eigen::Matrix3d rotation = Eigen::Matrix3d::Identity();
    Eigen::Vector3d translation = Eigen::Vector3d::Zero();

    /// Throws ConfigError unless rotation is orthonormal with det +1 (1e-9).
    void validate() const;
};

struct Camera {
    std::string name;
    Intrinsics intrinsics;
    Extrinsics extrinsics;

    void validate() const;
    const Eigen::Vector3d& center() const { return extrinsics.translation; }
    Eigen::Vector3d world_to_camera(const Eigen::Vector3d& p) const;
    Eigen::Vector3d camera_to_world(const Eigen::Vector3d& p) const;
    /// World-space direction of the ray through `pixel`, scaled so its camera z is 1.
    Eigen::Vector3d ray_direction(const Eigen::Vector2d& pixel) const;
    bool in_frame(const Eigen::Vector2d& pixel) const;
    /// Nearest pixel to a continuous coordinate (pixel centers are integers).
    static Eigen::Vector2i nearest_pixel(const Eigen::Vector2d& pixel);

    /// Camera looking from `eye` at `target`, with world +z up.
    static Camera look_at(std::string name, const Intrinsics& k, const Eigen::Vector3d& eye,
                          const Eigen::Vector3d& target);
};

struct Projection {
    Eigen::Vector2d pixel;
    double depth = 0.0;
    bool behind_camera() const { return depth <= 0.0; }
};

struct Reprojection {
    Eigen::Vector2d pixel;
    double depth = 0.0;
    bool in_frame = false;
    bool behind_camera() const { return depth <= 0.0; }
};

/// Ground-plane rectangle at z = 0, in meters.
struct GroundRange {
    double x_min = 0.0;
    double x_max = 0.0;
    double y_min = 0.0;
    double y_max = 0.0;

    void validate() const;
};

/// Pinhole projection. Points behind the camera are reported with depth <= 0.
/// Throws GeometryError when |depth| < 1e-12.
Projection project(const Eigen::Vector3d& point_world, const Camera& camera);

/// Inverse of project. Throws GeometryError for depth <= 0.
Eigen::Vector3d unproject(const Eigen::Vector2d& pixel, double depth, const Camera& camera);

Reprojection reproject(const Eigen::Vector2d& pixel, double depth, const Camera& src,
                       const Camera& ref);

/// Metric depth of the z = 0 plane, sampled on a regular grid with spacing `step`
/// and splatted to the nearest pixel; the smallest depth wins, unhit pixels are NaN.
DepthImage ground_depth_map(const Camera& camera, const GroundRange& range, double step);

/// Exact ray/ground-plane intersection depth for one pixel, if the ray descends.
std::optional<double> ground_intersection_depth(const Camera& camera, const Eigen::Vector2d& pixel);

} // namespace pedsplat
