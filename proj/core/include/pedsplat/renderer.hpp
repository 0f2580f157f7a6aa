#pragma once

#include "pedsplat/camera.hpp"
#include "pedsplat/gaussian.hpp"
#include "pedsplat/image.hpp"

#include <Eigen/Core>

#include <optional>
#include <span>
#include <vector>

namespace pedsplat {

/// A Gaussian projected to the image plane.
struct Splat2D {
    Eigen::Vector2d center = Eigen::Vector2d::Zero();
    Eigen::Matrix2d covariance = Eigen::Matrix2d::Identity(); // includes the 0.3 px^2 low-pass
    double depth = 0.0;
    std::size_t source = 0;
};

inline constexpr double kLowPassVariance = 0.3;
inline constexpr double kMaxAlpha = 0.99;
inline constexpr double kMinTransmittance = 1e-4;
inline constexpr double kDefaultNearPlane = 0.01;

/// Projects one Gaussian (EWA linearization). Returns nullopt when the mean is
/// not beyond `near_plane` or the 3-sigma ellipse misses the frame.
std::optional<Splat2D> project_gaussian(const Gaussian3D& g, const Camera& camera, std::size_t source = 0,
                                        double near_plane = kDefaultNearPlane);

struct RenderOptions {
    /// Frozen Gaussians composited as occluders. They contribute color but not
    /// the mask or depth channels.
    std::span<const Gaussian3D> backdrop;
    Rgb background = Rgb::Zero();
    double near_plane = kDefaultNearPlane;
};

struct RenderOutput {
    RgbImage rgb;
    /// Alpha-composited mean depth, sum_i T_i alpha_i z_i (not normalized).
    ScalarImage depth;
    /// depth / mask where mask > 1e-3, NaN elsewhere.
    DepthImage surface_depth;
    /// Soft foreground mask, sum_i T_i alpha_i.
    ScalarImage mask;
};

/// Front-to-back alpha compositing of depth-sorted splats.
RenderOutput render(std::span<const Gaussian3D> gaussians, const Camera& camera, const RenderOptions& options = {});

/// Visibility of each Gaussian inside `query`: the alpha-weighted mean
/// transmittance sum(T_i alpha_i) / sum(alpha_i) over the pixels of its
/// footprint that lie in the mask. 0 for Gaussians with no such pixel.
/// Splats less than `occlusion_tolerance` nearer than a Gaussian do not
/// occlude it, so coincident samples of one surface all count as visible.
std::vector<double> accumulate_weights(std::span<const Gaussian3D> gaussians, const Camera& camera,
                                       const Mask& query, const RenderOptions& options = {},
                                       double occlusion_tolerance = 0.0);

/// Same measure with a per-Gaussian query region: Gaussian i only counts pixels
/// where labels == target[i]. A target of 0 yields weight 0.
std::vector<double> accumulate_weights(std::span<const Gaussian3D> gaussians, const Camera& camera,
                                       const LabelImage& labels, std::span<const std::uint16_t> target,
                                       const RenderOptions& options = {}, double occlusion_tolerance = 0.0);

} // namespace pedsplat
