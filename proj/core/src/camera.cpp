#include "pedsplat/camera.hpp"

#include "pedsplat/error.hpp"

#include <cmath>
#include <limits>

namespace pedsplat {

void Intrinsics::validate() const {
    if (!(fx > 0.0) || !(fy > 0.0)) throw ConfigError("intrinsics: focal lengths must be positive");
    if (width <= 0 || height <= 0) throw ConfigError("intrinsics: image size must be positive");
    if (!(cx >= 0.0 && cx < width && cy >= 0.0 && cy < height))
        throw ConfigError("intrinsics: principal point outside the image");
}

Eigen::Matrix3d Intrinsics::matrix() const {
    Eigen::Matrix3d k;
    k << fx, 0.0, cx, 0.0, fy, cy, 0.0, 0.0, 1.0;
    return k;
}

void Extrinsics::validate() const {
    const Eigen::Matrix3d gram = rotation.transpose() * rotation;
    if ((gram - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff() > 1e-9)
        throw ConfigError("extrinsics: rotation is not orthonormal");
    if (std::abs(rotation.determinant() - 1.0) > 1e-9)
        throw ConfigError("extrinsics: rotation determinant is not +1");
    if (!translation.allFinite()) throw ConfigError("extrinsics: translation is not finite");
}

void Camera::validate() const {
    intrinsics.validate();
    extrinsics.validate();
}

Eigen::Vector3d Camera::world_to_camera(const Eigen::Vector3d& p) const {
    return extrinsics.rotation.transpose() * (p - extrinsics.translation);
}

Eigen::Vector3d Camera::camera_to_world(const Eigen::Vector3d& p) const {
    return extrinsics.rotation * p + extrinsics.translation;
}

Eigen::Vector3d Camera::ray_direction(const Eigen::Vector2d& pixel) const {
    const auto& k = intrinsics;
    const Eigen::Vector3d cam((pixel.x() - k.cx) / k.fx, (pixel.y() - k.cy) / k.fy, 1.0);
    return extrinsics.rotation * cam;
}

bool Camera::in_frame(const Eigen::Vector2d& pixel) const {
    const Eigen::Vector2i p = nearest_pixel(pixel);
    return p.x() >= 0 && p.y() >= 0 && p.x() < intrinsics.width && p.y() < intrinsics.height;
}

Eigen::Vector2i Camera::nearest_pixel(const Eigen::Vector2d& pixel) {
    return {static_cast<int>(std::floor(pixel.x() + 0.5)), static_cast<int>(std::floor(pixel.y() + 0.5))};
}

Camera Camera::look_at(std::string name, const Intrinsics& k, const Eigen::Vector3d& eye,
                       const Eigen::Vector3d& target) {
    const Eigen::Vector3d forward = (target - eye).normalized();
    Eigen::Vector3d right = forward.cross(Eigen::Vector3d::UnitZ());
    if (right.norm() < 1e-9) right = Eigen::Vector3d::UnitX();
    right.normalize();
    const Eigen::Vector3d down = forward.cross(right);
    Camera cam;
    cam.name = std::move(name);
    cam.intrinsics = k;
    cam.extrinsics.rotation.col(0) = right;
    cam.extrinsics.rotation.col(1) = down;
    cam.extrinsics.rotation.col(2) = forward;
    cam.extrinsics.translation = eye;
    return cam;
}

void GroundRange::validate() const {
    if (!(x_min < x_max) || !(y_min < y_max)) throw ConfigError("ground range is empty");
}

Projection project(const Eigen::Vector3d& point_world, const Camera& camera) {
    const Eigen::Vector3d pc = camera.world_to_camera(point_world);
    if (std::abs(pc.z()) < 1e-12) throw GeometryError("degenerate projection: point on the camera plane");
    const auto& k = camera.intrinsics;
    return {{k.fx * pc.x() / pc.z() + k.cx, k.fy * pc.y() / pc.z() + k.cy}, pc.z()};
}

Eigen::Vector3d unproject(const Eigen::Vector2d& pixel, double depth, const Camera& camera) {
    if (!(depth > 0.0)) throw GeometryError("unproject: depth must be positive");
    return camera.extrinsics.rotation * (depth * camera.intrinsics.matrix().inverse() *
                                         Eigen::Vector3d(pixel.x(), pixel.y(), 1.0)) +
           camera.extrinsics.translation;
}

Reprojection reproject(const Eigen::Vector2d& pixel, double depth, const Camera& src, const Camera& ref) {
    const Projection p = project(unproject(pixel, depth, src), ref);
    Reprojection out;
    out.pixel = p.pixel;
    out.depth = p.depth;
    out.in_frame = p.depth > 0.0 && ref.in_frame(p.pixel);
    return out;
}

DepthImage ground_depth_map(const Camera& camera, const GroundRange& range, double step) {
    if (!(step > 0.0)) throw ConfigError("ground_depth_map: step must be positive");
    range.validate();
    const auto& k = camera.intrinsics;
    DepthImage depth(k.width, k.height, kInvalidDepth);
    const auto nx = static_cast<long>(std::floor((range.x_max - range.x_min) / step)) + 1;
    const auto ny = static_cast<long>(std::floor((range.y_max - range.y_min) / step)) + 1;
    const Eigen::Matrix3d rt = camera.extrinsics.rotation.transpose();
    for (long j = 0; j < ny; ++j) {
        for (long i = 0; i < nx; ++i) {
            const Eigen::Vector3d pw(range.x_min + i * step, range.y_min + j * step, 0.0);
            const Eigen::Vector3d pc = rt * (pw - camera.extrinsics.translation);
            if (pc.z() <= 1e-12) continue;
            const Eigen::Vector2d px(k.fx * pc.x() / pc.z() + k.cx, k.fy * pc.y() / pc.z() + k.cy);
            const Eigen::Vector2i q = Camera::nearest_pixel(px);
            if (!depth.contains(q.x(), q.y())) continue;
            double& d = depth(q.x(), q.y());
            if (std::isnan(d) || pc.z() < d) d = pc.z();
        }
    }
    return depth;
}

std::optional<double> ground_intersection_depth(const Camera& camera, const Eigen::Vector2d& pixel) {
    const Eigen::Vector3d dir = camera.ray_direction(pixel);
    if (dir.z() >= -1e-12) return std::nullopt;
    const double depth = -camera.center().z() / dir.z();
    if (!(depth > 0.0)) return std::nullopt;
    return depth;
}

} // namespace pedsplat
