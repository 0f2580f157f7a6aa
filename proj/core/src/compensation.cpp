#include "pedsplat/compensation.hpp"

#include "pedsplat/error.hpp"
#include "pedsplat/io.hpp"
#include "pedsplat/localization.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <map>

namespace pedsplat {

namespace {

PixelBox bounds_of(const std::vector<Eigen::Vector2d>& pts, int width, int height) {
    PixelBox box;
    box.x0 = width;
    box.y0 = height;
    box.x1 = -1;
    box.y1 = -1;
    for (const auto& p : pts) {
        const Eigen::Vector2i q = Camera::nearest_pixel(p);
        box.extend(std::clamp(q.x(), 0, width - 1), std::clamp(q.y(), 0, height - 1));
    }
    return box;
}

double fraction_on(const std::vector<Eigen::Vector2d>& pts, const Mask& fg) {
    if (pts.empty()) return 0.0;
    std::size_t hits = 0;
    for (const auto& p : pts) {
        const Eigen::Vector2i q = Camera::nearest_pixel(p);
        if (fg.contains(q.x(), q.y()) && fg(q.x(), q.y())) ++hits;
    }
    return static_cast<double>(hits) / static_cast<double>(pts.size());
}

double fraction_on(const Mask& mask, const Mask& fg) {
    std::size_t n = 0, hits = 0;
    for (std::size_t i = 0; i < mask.size(); ++i)
        if (mask[i]) {
            ++n;
            hits += fg[i] != 0;
        }
    return n == 0 ? 0.0 : static_cast<double>(hits) / static_cast<double>(n);
}

// Nine interior prompts: the deepest mask pixel (distance transform maximum) in
// each cell of a 3x3 grid over the mask's bounding box.
std::vector<Eigen::Vector2d> interior_prompts(const Mask& mask, const PixelBox& box) {
    const ScalarImage dist = distance_transform(mask);
    std::vector<Eigen::Vector2d> out;
    const int w = box.x1 - box.x0 + 1, h = box.y1 - box.y0 + 1;
    for (int gy = 0; gy < 3; ++gy)
        for (int gx = 0; gx < 3; ++gx) {
            const int x0 = box.x0 + gx * w / 3, x1 = box.x0 + (gx + 1) * w / 3 - 1;
            const int y0 = box.y0 + gy * h / 3, y1 = box.y0 + (gy + 1) * h / 3 - 1;
            double best = 0.0;
            Eigen::Vector2d pick;
            for (int y = y0; y <= y1; ++y)
                for (int x = x0; x <= x1; ++x)
                    if (mask(x, y) && dist(x, y) > best) {
                        best = dist(x, y);
                        pick = Eigen::Vector2d(x, y);
                    }
            if (best > 0.0) out.push_back(pick);
        }
    return out;
}

Mask call_oracle(SegmentationOracle& oracle, const SegmentationRequest& request, int width, int height,
                 int& failures) {
    try {
        Mask m = oracle.segment(request);
        if (m.width() != width || m.height() != height) throw DataError("oracle returned a mask of the wrong size");
        return m;
    } catch (const std::exception& e) {
        ++failures;
        std::cerr << "warning: segmentation oracle failed for " << request.view_id << ": " << e.what() << '\n';
        return Mask();
    }
}

} // namespace

void CompensationThresholds::validate() const {
    if (min_points < 1) throw ConfigError("compensation: min_points must be >= 1");
    if (!(max_overlap > 0.0 && max_overlap < 1.0)) throw ConfigError("compensation: overlap threshold must lie in (0, 1)");
    if (!(eps > 0.0) || min_pts < 1) throw ConfigError("compensation: clustering parameters must be positive");
}

std::vector<Eigen::Vector2d> project_instance(const Camera& src, const DepthImage& depth, const Mask& instance,
                                              const Camera& ref, const CompensationThresholds& th) {
    std::vector<Eigen::Vector2d> pts;
    for (int y = 0; y < instance.height(); ++y)
        for (int x = 0; x < instance.width(); ++x) {
            if (!instance(x, y)) continue;
            const double d = depth(x, y);
            if (!(d > 0.0) || !std::isfinite(d)) continue;
            const auto r = reproject({x, y}, d, src, ref);
            if (r.in_frame) pts.push_back(r.pixel);
        }
    if (pts.empty()) return pts;
    const auto labels = dbscan(std::span<const Eigen::Vector2d>(pts), th.eps, th.min_pts);
    std::map<int, std::size_t> sizes;
    for (int l : labels)
        if (l != kNoise) ++sizes[l];
    if (sizes.empty()) return {};
    int best = sizes.begin()->first;
    for (const auto& [l, n] : sizes)
        if (n > sizes[best]) best = l;
    std::vector<Eigen::Vector2d> kept;
    for (std::size_t i = 0; i < pts.size(); ++i)
        if (labels[i] == best) kept.push_back(pts[i]);
    return kept;
}

CompensationResult compensate(const CameraView& ref, std::span<const CameraView> sources,
                              std::span<const DepthImage> depths, SegmentationOracle& oracle,
                              const CompensationThresholds& th) {
    th.validate();
    if (sources.size() != depths.size()) throw DataError("compensation: one depth image per source view required");
    const int width = ref.camera.intrinsics.width, height = ref.camera.intrinsics.height;
    CompensationResult result;
    result.instances = ref.instances;
    Mask fg = foreground_of(result.instances);
    std::uint16_t next_label = 1;
    for (const auto l : instance_labels(result.instances)) next_label = std::max<std::uint16_t>(next_label, l + 1);

    for (std::size_t s = 0; s < sources.size(); ++s) {
        const CameraView& src = sources[s];
        if (depths[s].width() != src.instances.width() || depths[s].height() != src.instances.height())
            throw DataError("compensation: depth size differs from source " + src.id);
        for (const auto label : instance_labels(src.instances)) {
            const auto pts = project_instance(src.camera, depths[s], binary_of(src.instances, label), ref.camera, th);
            if (static_cast<int>(pts.size()) < th.min_points) {
                ++result.skipped_count;
                continue;
            }
            if (fraction_on(pts, fg) > th.max_overlap) {
                ++result.skipped_overlap;
                continue;
            }
            SegmentationRequest request{ref.id, &ref.image, pts, bounds_of(pts, width, height)};
            const Mask initial = call_oracle(oracle, request, width, height, result.oracle_failures);
            if (initial.empty() || count_nonzero(initial) == 0) continue;

            const PixelBox tight = bounding_box(initial);
            SegmentationRequest refined{ref.id, &ref.image, interior_prompts(initial, tight), tight};
            if (refined.points.empty()) continue;
            const Mask final_mask = call_oracle(oracle, refined, width, height, result.oracle_failures);
            if (final_mask.empty() || count_nonzero(final_mask) == 0) continue;
            if (fraction_on(final_mask, fg) > th.max_overlap) {
                ++result.skipped_overlap;
                continue;
            }
            if (next_label == 0) throw DataError("compensation: instance label space exhausted");
            bool any = false;
            for (std::size_t i = 0; i < final_mask.size(); ++i)
                if (final_mask[i] && !fg[i]) {
                    result.instances[i] = next_label;
                    fg[i] = 1;
                    any = true;
                }
            if (any) result.added.push_back(next_label++);
        }
    }
    return result;
}

FileExchangeOracle::FileExchangeOracle(std::string command, std::filesystem::path work_dir)
    : command_(std::move(command)), work_dir_(std::move(work_dir)) {
    if (command_.empty()) throw ConfigError("file-exchange oracle: empty command");
    std::filesystem::create_directories(work_dir_);
}

Mask FileExchangeOracle::segment(const SegmentationRequest& request) {
    const int call = calls_++;
    const auto req_path = work_dir_ / ("request_" + std::to_string(call) + ".json");
    const auto resp_path = work_dir_ / ("response_" + std::to_string(call) + ".png");
    const int width = request.image ? request.image->width() : 0;
    const int height = request.image ? request.image->height() : 0;
    nlohmann::json j;
    j["view_id"] = request.view_id;
    j["width"] = width;
    j["height"] = height;
    j["box"] = {request.box.x0, request.box.y0, request.box.x1, request.box.y1};
    j["points"] = nlohmann::json::array();
    for (const auto& p : request.points) j["points"].push_back({p.x(), p.y()});
    if (request.image) {
        const auto img_path = work_dir_ / ("image_" + std::to_string(call) + ".png");
        io::write_rgb_png(img_path, *request.image);
        j["image"] = img_path.string();
    }
    {
        std::ofstream out(req_path);
        if (!out) throw DataError("cannot write oracle request " + req_path.string());
        out << j.dump() << '\n';
    }
    std::filesystem::remove(resp_path);
    const std::string cmd = command_ + " '" + req_path.string() + "' '" + resp_path.string() + "'";
    const int status = std::system(cmd.c_str());
    if (status != 0) throw DataError("oracle command failed with status " + std::to_string(status));
    return io::read_mask_png(resp_path);
}

} // namespace pedsplat
