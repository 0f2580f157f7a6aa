#pragma once

#include "pedsplat/compensation.hpp"
#include "pedsplat/view.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace pedsplat {

/// Vertical capsule standing on the ground plane: a segment from z = radius to
/// z = height - radius swept by `radius`.
struct Capsule {
    Eigen::Vector2d position = Eigen::Vector2d::Zero();
    double radius = 0.25;
    double height = 1.7;
    Rgb upper_color = Rgb(0.8, 0.2, 0.2);
    Rgb lower_color = Rgb(0.2, 0.2, 0.4);

    /// Ray parameter of the first hit along origin + t * dir (dir need not be
    /// unit length), if any hit lies at t > 0.
    std::optional<double> intersect(const Eigen::Vector3d& origin, const Eigen::Vector3d& dir) const;
};

struct SceneConfig {
    int pedestrians = 10;
    double area_half_extent = 4.0; // pedestrians stand in [-a, a]^2
    double radius = 0.25;
    double height = 1.7;
    double min_separation = 0.0; // center distance; values below 2 * radius are raised to it
    int cameras = 6;
    double ring_radius = 9.0;
    double camera_height = 4.0;
    int image_size = 256;
    double focal = 222.0;
    Eigen::Vector3d look_at = Eigen::Vector3d(0.0, 0.0, 0.5);
    double brightness_jitter = 0.1; // per-view multiplicative, uniform in [1 - j, 1 + j]
    double missed_mask_rate = 0.0;  // probability of deleting a visible pedestrian's mask in a view
    bool permute_labels = true;     // per-view random instance labels, as an independent detector would give
    std::uint64_t seed = 1;
    std::string frame = "0";
    int max_placement_attempts = 20000;

    void validate() const;
};

struct RayHit {
    int pedestrian = -1;
    double t = 0.0;
};

struct GroundTruthBundle {
    std::vector<Capsule> pedestrians;
    std::vector<Camera> cameras;
    std::vector<std::string> view_ids;
    /// Per view: camera depth of the visible pedestrian surface, NaN elsewhere.
    std::vector<DepthImage> depth;
    /// Per view: pedestrian index + 1 of the visible surface, 0 elsewhere.
    /// Unaffected by mask deletion.
    std::vector<LabelImage> id_masks;
    /// Per view: instance label in the view's mask image -> pedestrian index.
    std::vector<std::map<std::uint16_t, int>> label_to_pedestrian;
    /// visible[p][v]: pedestrian p has at least one pixel in view v.
    std::vector<std::vector<bool>> visible;
    /// Deleted masks as (view, pedestrian).
    std::vector<std::pair<int, int>> missed;

    std::vector<Eigen::Vector2d> locations() const;
    /// Nearest pedestrian hit along origin + t * dir.
    std::optional<RayHit> raycast(const Eigen::Vector3d& origin, const Eigen::Vector3d& dir) const;
    /// Analytic pedestrian depth at a continuous pixel of view v (NaN on a miss).
    double depth_at(int view, const Eigen::Vector2d& pixel) const;
    int view_index(const std::string& view_id) const; // -1 if unknown
};

struct SimulatedScene {
    std::vector<CameraView> views;
    GroundTruthBundle truth;
};

SimulatedScene generate_scene(const SceneConfig& cfg);

/// Segmentation oracle answering from ground truth: returns the visible
/// silhouette that contains the most point prompts (ties to the lower index)
/// provided it intersects the box prompt, else an empty mask. The bundle must
/// outlive the oracle.
std::unique_ptr<SegmentationOracle> gt_oracle(const GroundTruthBundle& truth);

} // namespace pedsplat
