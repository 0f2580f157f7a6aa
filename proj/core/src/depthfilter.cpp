#include "pedsplat/depthfilter.hpp"

#include "pedsplat/error.hpp"
#include "pedsplat/renderer.hpp"

#include <cmath>
#include <memory>

namespace pedsplat {

namespace {

void require_refs(std::span<const ReferenceView> refs) {
    if (refs.empty()) throw ConfigError("depth filtering needs at least one reference view");
}

bool has_depth(const DepthImage& depth, const Mask& mask, int x, int y) {
    const double d = depth(x, y);
    return mask(x, y) != 0 && std::isfinite(d) && d > 0.0;
}

void check_sizes(const DepthImage& depth, const Mask& mask) {
    if (depth.width() != mask.width() || depth.height() != mask.height())
        throw DataError("depth filter: depth and mask sizes differ");
}

} // namespace

void FilterParams::validate() const {
    if (!(tau > 0.0)) throw ConfigError("depth filter: tau must be positive");
    if (guard < 0) throw ConfigError("depth filter: guard must be >= 0");
}

DepthLookup nearest_lookup(DepthImage depth) {
    auto img = std::make_shared<const DepthImage>(std::move(depth));
    return [img](const Eigen::Vector2d& pixel) {
        const Eigen::Vector2i q = Camera::nearest_pixel(pixel);
        return img->contains(q.x(), q.y()) ? (*img)(q.x(), q.y()) : kInvalidDepth;
    };
}

Mask foreground_filter(const Camera& src, const DepthImage& depth, const Mask& src_mask,
                       std::span<const ReferenceView> refs, int guard) {
    require_refs(refs);
    check_sizes(depth, src_mask);
    std::vector<Mask> grown;
    for (const auto& r : refs) grown.push_back(guard > 0 ? dilate(r.mask, guard) : r.mask);

    Mask out(depth.width(), depth.height(), 0);
    for (int y = 0; y < depth.height(); ++y)
        for (int x = 0; x < depth.width(); ++x) {
            if (!has_depth(depth, src_mask, x, y)) continue;
            bool keep = true;
            for (std::size_t i = 0; i < refs.size() && keep; ++i) {
                const auto rp = reproject(Eigen::Vector2d(x, y), depth(x, y), src, refs[i].camera);
                if (!rp.in_frame || rp.behind_camera()) continue;
                const Eigen::Vector2i q = Camera::nearest_pixel(rp.pixel);
                if (!grown[i].contains(q.x(), q.y()) || grown[i](q.x(), q.y()) == 0) keep = false;
            }
            out(x, y) = keep;
        }
    return out;
}

Mask consistency_filter(const Camera& src, const DepthImage& depth, const Mask& src_mask,
                        std::span<const ReferenceView> refs, double tau) {
    require_refs(refs);
    check_sizes(depth, src_mask);
    if (!(tau > 0.0)) throw ConfigError("consistency filter: tau must be positive");
    for (const auto& r : refs)
        if (!r.depth) throw ConfigError("consistency filter: reference " + r.camera.name + " has no depth");

    Mask out(depth.width(), depth.height(), 0);
    for (int y = 0; y < depth.height(); ++y)
        for (int x = 0; x < depth.width(); ++x) {
            if (!has_depth(depth, src_mask, x, y)) continue;
            for (const auto& r : refs) {
                const auto rp = reproject(Eigen::Vector2d(x, y), depth(x, y), src, r.camera);
                if (!rp.in_frame || rp.behind_camera()) continue;
                const double d_ref = r.depth(rp.pixel);
                if (std::isfinite(d_ref) && std::abs(rp.depth - d_ref) < tau) {
                    out(x, y) = 1;
                    break;
                }
            }
        }
    return out;
}

std::vector<PseudoDepthMap> filter_depths(std::span<const CameraView> views, std::span<const DepthImage> depths,
                                          const FilterParams& params, std::span<const DepthLookup> lookups) {
    params.validate();
    if (depths.size() != views.size()) throw DataError("filter_depths: one depth image per view required");
    if (!lookups.empty() && lookups.size() != views.size())
        throw DataError("filter_depths: one lookup per view required");

    std::vector<ReferenceView> all;
    for (std::size_t i = 0; i < views.size(); ++i) {
        DepthLookup look = lookups.empty() || !lookups[i] ? nearest_lookup(depths[i]) : lookups[i];
        all.push_back({views[i].camera, views[i].foreground(), std::move(look)});
    }

    std::vector<PseudoDepthMap> out;
    for (std::size_t s = 0; s < views.size(); ++s) {
        std::vector<ReferenceView> refs;
        for (std::size_t r = 0; r < views.size(); ++r)
            if (r != s) refs.push_back(all[r]);
        const Mask& fg = all[s].mask;
        const Mask a = foreground_filter(views[s].camera, depths[s], fg, refs, params.guard);
        const Mask b = consistency_filter(views[s].camera, depths[s], fg, refs, params.tau);
        PseudoDepthMap map{views[s].id, depths[s], Mask(fg.width(), fg.height(), 0)};
        for (std::size_t i = 0; i < a.size(); ++i) map.valid[i] = a[i] && b[i];
        out.push_back(std::move(map));
    }
    return out;
}

std::vector<PseudoDepthMap> generate_pseudo_depth(std::span<const Gaussian3D> gaussians,
                                                  std::span<const CameraView> views, const FilterParams& params) {
    std::vector<DepthImage> depths;
    for (const auto& v : views) depths.push_back(render(gaussians, v.camera).surface_depth);
    return filter_depths(views, depths, params);
}

} // namespace pedsplat
