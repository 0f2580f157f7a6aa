#include "pedsplat/depthmodel.hpp"

#include "pedsplat/error.hpp"
#include "pedsplat/io.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace pedsplat {

namespace {

double median(std::vector<double> v) {
    const std::size_t n = v.size();
    std::nth_element(v.begin(), v.begin() + n / 2, v.end());
    const double hi = v[n / 2];
    if (n % 2) return hi;
    return 0.5 * (hi + *std::max_element(v.begin(), v.begin() + n / 2));
}

bool positive(double d) { return std::isfinite(d) && d > 0.0; }

} // namespace

ScaleAlignment align_scale(const DepthImage& relative, const DepthImage& metric_ground, const Mask& ground_mask) {
    if (relative.width() != metric_ground.width() || relative.height() != metric_ground.height() ||
        relative.width() != ground_mask.width() || relative.height() != ground_mask.height())
        throw DataError("align_scale: image sizes differ");
    std::vector<double> ratios;
    for (std::size_t i = 0; i < relative.size(); ++i)
        if (ground_mask[i] && positive(relative[i]) && positive(metric_ground[i]))
            ratios.push_back(metric_ground[i] / relative[i]);
    if (ratios.empty()) throw DataError("align_scale: no valid ground pixel");
    ScaleAlignment out;
    out.scale = median(std::move(ratios));
    out.depth = relative;
    for (auto& d : out.depth.data()) d *= out.scale;
    return out;
}

DepthImage standing_depth(const Camera& camera, const Mask& instance) {
    DepthImage out(instance.width(), instance.height(), kInvalidDepth);
    // Lowest row of the mask, middle pixel of that row.
    int row = -1;
    for (int y = instance.height() - 1; y >= 0 && row < 0; --y)
        for (int x = 0; x < instance.width(); ++x)
            if (instance(x, y)) {
                row = y;
                break;
            }
    if (row < 0) return out;
    std::vector<int> xs;
    for (int x = 0; x < instance.width(); ++x)
        if (instance(x, row)) xs.push_back(x);
    const Eigen::Vector2d foot_pixel(xs[xs.size() / 2], row);
    const auto foot_depth = ground_intersection_depth(camera, foot_pixel);
    if (!foot_depth) return out;
    const Eigen::Vector3d foot = unproject(foot_pixel, *foot_depth, camera);

    // Closest approach of each pixel ray to the vertical line through the foot.
    const Eigen::Vector3d o = camera.center();
    const Eigen::Vector2d o2(o.x(), o.y()), f2(foot.x(), foot.y());
    for (int y = 0; y < instance.height(); ++y)
        for (int x = 0; x < instance.width(); ++x) {
            if (!instance(x, y)) continue;
            const Eigen::Vector3d dir = camera.ray_direction(Eigen::Vector2d(x, y));
            const Eigen::Vector2d d2(dir.x(), dir.y());
            const double dd = d2.squaredNorm();
            const double t = dd > 1e-12 ? d2.dot(f2 - o2) / dd : *foot_depth;
            out(x, y) = t > 0.0 ? t : *foot_depth;
        }
    return out;
}

BaselinePredictor::BaselinePredictor(BaselineConfig cfg) : cfg_(std::move(cfg)) {
    cfg_.ground.validate();
    if (!(cfg_.ground_step > 0.0) || cfg_.superpixels < 1) throw ConfigError("baseline predictor: bad configuration");
}

void BaselinePredictor::update(std::span<const PseudoDepthMap> labels) {
    for (const auto& map : labels) {
        auto [it, fresh] = labels_.try_emplace(map.view_id, map.depth.width(), map.depth.height(), kInvalidDepth);
        DepthImage& acc = it->second;
        if (acc.width() != map.depth.width() || acc.height() != map.depth.height())
            throw DataError("baseline predictor: label size changed for " + map.view_id);
        for (std::size_t i = 0; i < acc.size(); ++i)
            if (map.valid[i] && positive(map.depth[i])) acc[i] = map.depth[i];
    }
}

DepthImage BaselinePredictor::predict(const CameraView& view) {
    const Camera& cam = view.camera;
    auto g = ground_cache_.find(view.id);
    if (g == ground_cache_.end()) g = ground_cache_.emplace(view.id, ground_depth_map(cam, cfg_.ground, cfg_.ground_step)).first;

    DepthImage out = g->second;
    const Mask fg = view.foreground();
    for (std::size_t i = 0; i < out.size(); ++i)
        if (fg[i]) out[i] = kInvalidDepth;

    const auto lab = labels_.find(view.id);
    const DepthImage* acc = lab == labels_.end() ? nullptr : &lab->second;
    const SuperpixelMap sp = segment_pedestrians(view.image, view.instances, cfg_.superpixels);

    for (const auto instance : instance_labels(view.instances)) {
        const Mask m = binary_of(view.instances, instance);
        const std::vector<int> segs = sp.segments_of(instance);
        std::vector<double> seg_depth(sp.segments.size(), kInvalidDepth);
        std::vector<double> all;
        if (acc) {
            std::map<int, std::vector<double>> values;
            for (std::size_t i = 0; i < m.size(); ++i)
                if (m[i] && positive((*acc)[i])) {
                    values[sp.labels[i]].push_back((*acc)[i]);
                    all.push_back((*acc)[i]);
                }
            for (auto& [s, v] : values)
                if (s >= 0) seg_depth[s] = median(v);
        }
        if (all.empty()) {
            const DepthImage stand = standing_depth(cam, m);
            for (std::size_t i = 0; i < m.size(); ++i)
                if (m[i]) out[i] = stand[i];
            continue;
        }
        const double instance_median = median(all);
        std::vector<double> filled = seg_depth;
        for (int s : segs) {
            if (!std::isnan(seg_depth[s])) continue;
            double best = std::numeric_limits<double>::infinity();
            for (int o : segs) {
                if (std::isnan(seg_depth[o])) continue;
                const double dist = (sp.segments[s].centroid - sp.segments[o].centroid).squaredNorm();
                if (dist < best) {
                    best = dist;
                    filled[s] = seg_depth[o];
                }
            }
        }
        for (std::size_t i = 0; i < m.size(); ++i) {
            if (!m[i]) continue;
            const int s = sp.labels[i];
            out[i] = s >= 0 && !std::isnan(filled[s]) ? filled[s] : instance_median;
        }
    }
    return out;
}

DirectoryPredictor::DirectoryPredictor(std::filesystem::path root, std::unique_ptr<DepthPredictor> fallback,
                                       bool align, BaselineConfig ground)
    : root_(std::move(root)), fallback_(std::move(fallback)), align_(align), ground_(std::move(ground)) {}

DepthImage DirectoryPredictor::predict(const CameraView& view) {
    const auto path = root_ / (view.id + ".f32");
    if (!std::filesystem::exists(path)) {
        if (!fallback_) throw DataError("no drop-in depth for " + view.id + " and no fallback predictor");
        return fallback_->predict(view);
    }
    DepthImage depth = io::read_depth(path);
    if (depth.width() != view.image.width() || depth.height() != view.image.height())
        throw DataError("drop-in depth size mismatch: " + path.string());
    if (!align_) return depth;
    const DepthImage ground = ground_depth_map(view.camera, ground_.ground, ground_.ground_step);
    Mask ground_mask = view.foreground();
    for (auto& v : ground_mask.data()) v = !v;
    return align_scale(depth, ground, ground_mask).depth;
}

void DirectoryPredictor::update(std::span<const PseudoDepthMap> labels) {
    if (fallback_) fallback_->update(labels);
}

} // namespace pedsplat
