#pragma once

#include "pedsplat/gaussian.hpp"

#include <Eigen/Core>

#include <span>
#include <vector>

namespace pedsplat {

struct Detection {
    double x = 0.0;
    double y = 0.0;
    double confidence = 0.0;
    int id = 0; // pedestrian id the detection came from

    bool operator==(const Detection&) const = default;
};

using DetectionSet = std::vector<Detection>;

inline constexpr int kNoise = -1;

/// Density-based clustering. A point is core when at least `min_pts` points
/// (itself included) lie within `eps`. Core points that are density-connected
/// share a cluster; a border point joins the cluster of its lowest-index core
/// neighbor; the rest are kNoise. Cluster ids are 0, 1, ... in order of their
/// lowest-index core point.
std::vector<int> dbscan(std::span<const Eigen::Vector2d> points, double eps, int min_pts);
std::vector<int> dbscan(std::span<const Eigen::Vector3d> points, double eps, int min_pts);

struct LocalizationParams {
    int min_gaussians = 20; // ids and clusters need more Gaussians than this
    double eps = 0.2;
    int min_pts = 5;
    double nms_radius = 0.5;

    void validate() const;
};

/// Clusters each pedestrian id's Gaussians on the ground plane and emits one
/// detection per sufficiently large cluster at its mean with confidence =
/// member count, then applies greedy non-maximum suppression.
DetectionSet localize(std::span<const Gaussian3D> gaussians, const LocalizationParams& params = {});

/// Greedy NMS: keeps detections by descending confidence, dropping any within
/// `radius` of one already kept.
DetectionSet non_maximum_suppression(DetectionSet detections, double radius);

} // namespace pedsplat
