#pragma once

#include "pedsplat/camera.hpp"
#include "pedsplat/gaussian.hpp"
#include "pedsplat/image.hpp"
#include "pedsplat/view.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

namespace pedsplat {

struct LossWeights {
    double sp = 1.0;
    double mask = 0.5;
    double depth = 0.1;
    double opacity = 0.01;

    void validate() const;
};

struct LossBreakdown {
    double total = 0.0;
    double sp = 0.0;      // L1 photometric error on foreground pixels
    double mask = 0.0;    // squared soft-mask error over all pixels
    double depth = 0.0;   // within-instance depth variance (sum form)
    double opacity = 0.0; // pushes opacities away from 0.5
};

/// Supervision for one view.
struct TrainingView {
    Camera camera;
    RgbImage target;   // superpixel mean-color image
    Mask mask;         // pedestrian foreground
    LabelImage instances; // per-pedestrian labels; may be empty when the depth weight is 0
};

/// Builds training views from camera views and their superpixel images.
std::vector<TrainingView> make_training_views(std::span<const CameraView> views,
                                              std::span<const RgbImage> sp_images);

struct GaussianGradient {
    Eigen::Vector3d mean = Eigen::Vector3d::Zero();
    Eigen::Vector3d log_scales = Eigen::Vector3d::Zero();
    Eigen::Vector4d quaternion = Eigen::Vector4d::Zero(); // (w, x, y, z), tangent to the unit sphere
    double opacity_logit = 0.0;
    Rgb color = Rgb::Zero();
};

struct LossOptions {
    /// Frozen occluders (typically ground Gaussians).
    std::span<const Gaussian3D> backdrop;
    Rgb background = Rgb::Zero();
};

LossBreakdown compute_losses(std::span<const Gaussian3D> gaussians, std::span<const TrainingView> views,
                             const LossWeights& weights, const LossOptions& options = {});

/// Loss and its analytic gradient with respect to every Gaussian parameter.
LossBreakdown loss_and_gradient(std::span<const Gaussian3D> gaussians, std::span<const TrainingView> views,
                                const LossWeights& weights, std::vector<GaussianGradient>& gradient,
                                const LossOptions& options = {});

struct StepSizes {
    double mean = 2e-3;
    double log_scales = 5e-3;
    double quaternion = 1e-3;
    double opacity_logit = 5e-2;
    double color = 1e-2;
};

struct OptimConfig {
    int iterations = 300;
    StepSizes steps;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    double prune_opacity = 0.005;
    /// Threshold on the mean screen-space position gradient per covered pixel.
    double grow_gradient = 2e-4;
    int densify_interval = 100;
    /// At most this fraction of the set is split at one densification step.
    double max_split_fraction = 0.05;
    std::size_t max_gaussians = 200000;
    std::uint64_t seed = 7;
    std::optional<std::filesystem::path> log_path;

    void validate() const;
};

struct OptimResult {
    std::vector<Gaussian3D> gaussians;
    std::vector<LossBreakdown> history; // one entry per iteration, before the step
    LossBreakdown initial;
    LossBreakdown final;
};

/// Adam on all Gaussian parameters with periodic pruning and splitting. If the
/// final loss ends above the initial one the input set is returned unchanged.
OptimResult optimize(std::vector<Gaussian3D> gaussians, std::span<const TrainingView> views,
                     const LossWeights& weights, const OptimConfig& cfg, const LossOptions& options = {});

/// Frozen ground Gaussians sampled from the ground-plane depth map at a pixel
/// stride, keeping only pixels within `band` pixels of the foreground.
std::vector<Gaussian3D> ground_gaussians(const Camera& camera, const DepthImage& ground_depth, const RgbImage& image,
                                         const Mask& foreground, int stride, int band);

} // namespace pedsplat
