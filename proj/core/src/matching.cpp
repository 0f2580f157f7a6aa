#include "pedsplat/matching.hpp"

#include "pedsplat/error.hpp"
#include "pedsplat/renderer.hpp"

#include <algorithm>
#include <set>
#include <utility>

namespace pedsplat {

namespace {

// Instance labels restricted to the eroded interior of each mask. A mask that
// erodes away entirely keeps its full extent.
LabelImage candidate_regions(const LabelImage& instances, int erosion) {
    if (erosion <= 0) return instances;
    LabelImage out(instances.width(), instances.height(), 0);
    for (const auto label : instance_labels(instances)) {
        const Mask full = binary_of(instances, label);
        Mask core = erode(full, erosion);
        if (count_nonzero(core) == 0) core = full;
        for (std::size_t i = 0; i < core.size(); ++i)
            if (core[i]) out[i] = label;
    }
    return out;
}

// Per Gaussian: the region label its projected mean falls in, and its blend
// weight inside the instance with that label.
std::pair<std::vector<std::uint16_t>, std::vector<double>> visible_targets(std::span<const Gaussian3D> gaussians,
                                                                          const Camera& cam,
                                                                          const LabelImage& instances,
                                                                          const LabelImage& regions,
                                                                          double tolerance) {
    std::vector<std::uint16_t> target(gaussians.size(), 0);
    for (std::size_t i = 0; i < gaussians.size(); ++i) {
        const Eigen::Vector3d pc = cam.world_to_camera(gaussians[i].mean);
        if (!(pc.z() > kDefaultNearPlane)) continue;
        const auto& k = cam.intrinsics;
        const Eigen::Vector2i px = Camera::nearest_pixel({k.fx * pc.x() / pc.z() + k.cx, k.fy * pc.y() / pc.z() + k.cy});
        if (regions.contains(px.x(), px.y())) target[i] = regions(px.x(), px.y());
    }
    auto weight = accumulate_weights(gaussians, cam, instances, target, {}, tolerance);
    return {std::move(target), std::move(weight)};
}

struct Votes {
    std::vector<std::size_t> candidates;
    std::map<int, int> counts;
};

} // namespace

void MatchingParams::validate() const {
    if (!(min_visibility > 0.0 && min_visibility < 1.0)) throw ConfigError("matching: visibility threshold must lie in (0, 1)");
    if (erosion < 0) throw ConfigError("matching: erosion must be >= 0");
    if (!(merge_share > 0.0)) throw ConfigError("matching: merge share must be positive");
    if (!(surface_tolerance >= 0.0)) throw ConfigError("matching: surface tolerance must be >= 0");
}

LabeledScene match_labels(std::vector<Gaussian3D> gaussians, std::span<const CameraView> views,
                          const MatchingParams& params) {
    params.validate();
    if (views.empty()) throw ConfigError("matching: at least one view is required");
    int next_id = 1;
    for (const auto& g : gaussians)
        if (g.ped_id) next_id = std::max(next_id, *g.ped_id + 1);

    LabeledScene scene;
    scene.mask_ids.resize(views.size());
    for (std::size_t v = 0; v < views.size(); ++v) {
        const CameraView& view = views[v];
        const Camera& cam = view.camera;
        const LabelImage regions = candidate_regions(view.instances, params.erosion);
        const auto interior = visible_targets(gaussians, cam, view.instances, regions, params.surface_tolerance);

        // One person has at most one mask per view, so ids already given to
        // another mask here do not vote.
        std::set<int> taken;
        auto collect = [&](std::uint16_t label, const std::vector<std::uint16_t>& target,
                           const std::vector<double>& weight) {
            Votes out;
            for (std::size_t i = 0; i < gaussians.size(); ++i) {
                if (target[i] != label || !(weight[i] > params.min_visibility)) continue;
                out.candidates.push_back(i);
                if (gaussians[i].ped_id && !taken.contains(*gaussians[i].ped_id)) ++out.counts[*gaussians[i].ped_id];
            }
            return out;
        };
        // `votes` decides the id; `members` are the Gaussians that take it.
        auto assign = [&](std::uint16_t label, const Votes& votes, const std::vector<std::size_t>& members,
                          bool allow_merge) {
            int id = 0;
            if (votes.counts.empty()) {
                id = next_id++;
            } else {
                int best = 0;
                for (const auto& [candidate_id, count] : votes.counts) // ascending id, so ties keep the smaller
                    if (count > best) {
                        best = count;
                        id = candidate_id;
                    }
            }
            // Other ids with a real share of this mask's visible surface are the
            // same person seen first from views that did not overlap; fold them in.
            std::vector<int> absorbed;
            auto coexist = [&](int a, int b) { // both ids own a mask in one view
                for (const auto& ids : scene.mask_ids) {
                    bool has_a = false, has_b = false;
                    for (const auto& [l, mask_id] : ids) {
                        has_a |= mask_id == a;
                        has_b |= mask_id == b;
                    }
                    if (has_a && has_b) return true;
                }
                return false;
            };
            for (const auto& [other, count] : votes.counts)
                if (allow_merge && other != id && !taken.contains(other) &&
                    count >= params.merge_share * static_cast<double>(votes.candidates.size()) &&
                    !coexist(id, other))
                    absorbed.push_back(other);
            if (!absorbed.empty()) {
                auto is_absorbed = [&](int x) { return std::find(absorbed.begin(), absorbed.end(), x) != absorbed.end(); };
                for (auto& g : gaussians)
                    if (g.ped_id && is_absorbed(*g.ped_id)) g.ped_id = id;
                for (auto& ids : scene.mask_ids)
                    for (auto& [l, mask_id] : ids)
                        if (is_absorbed(mask_id)) mask_id = id;
            }
            scene.mask_ids[v][label] = id;
            taken.insert(id);
            for (auto i : members) gaussians[i].ped_id = id;
        };

        std::vector<std::uint16_t> unmatched;
        for (const auto label : instance_labels(view.instances)) {
            const Votes votes = collect(label, interior.first, interior.second);
            if (votes.counts.empty() && params.erosion > 0)
                unmatched.push_back(label);
            else
                assign(label, votes, votes.candidates, true);
        }
        if (unmatched.empty()) continue;
        // A mask whose overlap with earlier views is only a sliver along its
        // silhouette has no labeled interior candidates, so look at the full
        // mask. Edge votes also pick up neighbors' splats, so they run after
        // every interior match in this view, never merge ids and only label the
        // interior candidates.
        const auto whole = visible_targets(gaussians, cam, view.instances, view.instances, params.surface_tolerance);
        for (const auto label : unmatched) {
            const Votes own = collect(label, interior.first, interior.second);
            const Votes edge = collect(label, whole.first, whole.second);
            assign(label, edge.counts.empty() ? own : edge, own.candidates, false);
        }
    }
    scene.gaussians = std::move(gaussians);
    return scene;
}

LabelImage id_image(const LabelImage& instances, const std::map<std::uint16_t, int>& ids) {
    LabelImage out(instances.width(), instances.height(), 0);
    for (std::size_t i = 0; i < instances.size(); ++i) {
        if (instances[i] == 0) continue;
        const auto it = ids.find(instances[i]);
        if (it != ids.end()) out[i] = static_cast<std::uint16_t>(it->second);
    }
    return out;
}

} // namespace pedsplat
