#pragma once

#include "pedsplat/camera.hpp"
#include "pedsplat/gaussian.hpp"
#include "pedsplat/image.hpp"
#include "pedsplat/view.hpp"

#include <Eigen/Core>

#include <functional>
#include <span>
#include <string>
#include <vector>

namespace pedsplat {

/// Filtered rendered depth for one view. valid implies positive depth and own
/// foreground.
struct PseudoDepthMap {
    std::string view_id;
    DepthImage depth;
    Mask valid;

    std::size_t valid_count() const { return count_nonzero(valid); }
};

/// Depth of a reference view at a continuous pixel; NaN when unknown.
using DepthLookup = std::function<double(const Eigen::Vector2d&)>;

/// Nearest-pixel lookup into a depth image (the image is copied).
DepthLookup nearest_lookup(DepthImage depth);

struct ReferenceView {
    Camera camera;
    Mask mask;          // foreground
    DepthLookup depth;  // only needed by the consistency filter
};

struct FilterParams {
    double tau = 0.1; // meters
    /// Reference masks are dilated by this many pixels before the foreground
    /// veto, so reprojections grazing a silhouette are not rejected by aliasing.
    int guard = 1;

    void validate() const;
};

/// Keeps foreground pixels of the source with positive depth whose
/// reprojection lands on foreground in every reference where it is in frame
/// and in front of the camera. References that cannot see it do not veto.
Mask foreground_filter(const Camera& src, const DepthImage& depth, const Mask& src_mask,
                       std::span<const ReferenceView> refs, int guard = 1);

/// Keeps foreground pixels whose reprojected depth agrees with some
/// reference's depth at the nearest reprojected pixel within tau.
Mask consistency_filter(const Camera& src, const DepthImage& depth, const Mask& src_mask,
                        std::span<const ReferenceView> refs, double tau);

/// Both filters with each view as source and every other view as reference.
/// `lookups[i]` answers depth queries in view i; empty means nearest-pixel
/// lookup into `depths[i]`.
std::vector<PseudoDepthMap> filter_depths(std::span<const CameraView> views, std::span<const DepthImage> depths,
                                          const FilterParams& params, std::span<const DepthLookup> lookups = {});

/// Renders the alpha-normalized depth of `gaussians` in every view and filters it.
std::vector<PseudoDepthMap> generate_pseudo_depth(std::span<const Gaussian3D> gaussians,
                                                  std::span<const CameraView> views, const FilterParams& params);

} // namespace pedsplat
