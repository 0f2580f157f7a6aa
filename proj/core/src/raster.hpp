#pragma once

// Shared rasterization core for the renderer and the optimizer's reverse pass.

#include "pedsplat/camera.hpp"
#include "pedsplat/gaussian.hpp"
#include "pedsplat/image.hpp"
#include "pedsplat/renderer.hpp"

#include <Eigen/Core>

#include <span>
#include <vector>

namespace pedsplat::detail {

struct RasterSplat {
    std::size_t source = 0; // index into the foreground or backdrop span
    bool foreground = true;
    Eigen::Vector2d center;
    Eigen::Matrix2d cov2d;
    double conic_a = 0.0, conic_b = 0.0, conic_c = 0.0;
    double opacity = 0.0;
    Rgb color;
    double depth = 0.0;
    int x0 = 0, x1 = -1, y0 = 0, y1 = -1;

    // Kept for the reverse pass.
    Eigen::Vector3d p_cam;
    Eigen::Matrix<double, 2, 3> jacobian;
    Eigen::Matrix3d cov3d;
};

/// Projects and depth-sorts splats. Order depends only on splat content, so it is
/// invariant to input permutation.
std::vector<RasterSplat> prepare(std::span<const Gaussian3D> foreground, std::span<const Gaussian3D> backdrop,
                                 const Camera& camera, double near_plane);

struct RasterBuffers {
    RgbImage rgb;
    ScalarImage depth;
    ScalarImage mask;
    ScalarImage transmittance; // final T per pixel
    Image<int> last;           // rank of the splat after which accumulation stopped
};

RasterBuffers rasterize(std::span<const RasterSplat> splats, int width, int height, const Rgb& background);

struct SplatGrad {
    Eigen::Vector2d center = Eigen::Vector2d::Zero();
    double conic_a = 0.0, conic_b = 0.0, conic_c = 0.0;
    double opacity = 0.0;
    Rgb color = Rgb::Zero();
    double depth = 0.0;
    int pixels = 0;
};

/// Reverse pass through the compositing recurrence given per-pixel output
/// gradients. Returns one entry per splat (backdrop entries stay zero).
std::vector<SplatGrad> backward(std::span<const RasterSplat> splats, const RasterBuffers& buffers,
                                const RgbImage& d_rgb, const ScalarImage& d_depth, const ScalarImage& d_mask,
                                const Rgb& background);

struct GaussianGrad {
    Eigen::Vector3d mean = Eigen::Vector3d::Zero();
    Eigen::Vector3d log_scales = Eigen::Vector3d::Zero();
    Eigen::Vector4d quaternion = Eigen::Vector4d::Zero(); // (w, x, y, z)
    double opacity_logit = 0.0;
    Rgb color = Rgb::Zero();
    double screen = 0.0; // |dL/d center| / covered pixels, for densification
    int views = 0;

    GaussianGrad& operator+=(const GaussianGrad& o);
};

/// Chains splat-space gradients back to Gaussian parameters and adds them into
/// `grads` (indexed like the foreground span).
void accumulate_gaussian_grads(std::span<const RasterSplat> splats, std::span<const SplatGrad> splat_grads,
                               std::span<const Gaussian3D> foreground, const Camera& camera,
                               std::span<GaussianGrad> grads);

} // namespace pedsplat::detail
