#include "pedsplat/localization.hpp"

#include "pedsplat/error.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <queue>
#include <tuple>
#include <unordered_map>

namespace pedsplat {

namespace {

template <int D>
std::vector<std::vector<int>> neighbor_lists(std::span<const Eigen::Matrix<double, D, 1>> points, double eps) {
    using Cell = Eigen::Matrix<std::int64_t, D, 1>;
    auto cell_of = [&](const Eigen::Matrix<double, D, 1>& p) {
        Cell c;
        for (int k = 0; k < D; ++k) c[k] = static_cast<std::int64_t>(std::floor(p[k] / eps));
        return c;
    };
    auto key_of = [](const Cell& c) {
        std::uint64_t h = 1469598103934665603ull;
        for (int k = 0; k < D; ++k) h = (h ^ static_cast<std::uint64_t>(c[k])) * 1099511628211ull;
        return h;
    };
    std::unordered_map<std::uint64_t, std::vector<int>> grid;
    std::vector<Cell> cells(points.size());
    for (std::size_t i = 0; i < points.size(); ++i) {
        cells[i] = cell_of(points[i]);
        grid[key_of(cells[i])].push_back(static_cast<int>(i));
    }
    const double eps2 = eps * eps;
    int offsets = 1;
    for (int k = 0; k < D; ++k) offsets *= 3;
    std::vector<std::vector<int>> out(points.size());
    for (std::size_t i = 0; i < points.size(); ++i) {
        for (int o = 0; o < offsets; ++o) {
            Cell c = cells[i];
            int rem = o;
            for (int k = 0; k < D; ++k) {
                c[k] += rem % 3 - 1;
                rem /= 3;
            }
            const auto it = grid.find(key_of(c));
            if (it == grid.end()) continue;
            for (int j : it->second)
                if (cells[j] == c && (points[j] - points[i]).squaredNorm() <= eps2) out[i].push_back(j);
        }
        std::sort(out[i].begin(), out[i].end());
    }
    return out;
}

template <int D>
std::vector<int> dbscan_impl(std::span<const Eigen::Matrix<double, D, 1>> points, double eps, int min_pts) {
    if (!(eps > 0.0) || min_pts < 1) throw ConfigError("dbscan: need eps > 0 and min_pts >= 1");
    for (const auto& p : points)
        if (!p.allFinite()) throw DataError("dbscan: non-finite point");
    const auto nbrs = neighbor_lists<D>(points, eps);
    const std::size_t n = points.size();
    std::vector<char> core(n, 0);
    for (std::size_t i = 0; i < n; ++i) core[i] = static_cast<int>(nbrs[i].size()) >= min_pts;

    std::vector<int> label(n, kNoise);
    int next = 0;
    for (std::size_t seed = 0; seed < n; ++seed) {
        if (!core[seed] || label[seed] != kNoise) continue;
        const int c = next++;
        std::queue<int> frontier;
        label[seed] = c;
        frontier.push(static_cast<int>(seed));
        while (!frontier.empty()) {
            const int p = frontier.front();
            frontier.pop();
            for (int q : nbrs[p])
                if (core[q] && label[q] == kNoise) {
                    label[q] = c;
                    frontier.push(q);
                }
        }
    }
    for (std::size_t i = 0; i < n; ++i) {
        if (core[i]) continue;
        for (int q : nbrs[i])
            if (core[q]) {
                label[i] = label[q];
                break;
            }
    }
    return label;
}

bool detection_order(const Detection& a, const Detection& b) {
    return std::tie(b.confidence, a.x, a.y, a.id) < std::tie(a.confidence, b.x, b.y, b.id);
}

} // namespace

std::vector<int> dbscan(std::span<const Eigen::Vector2d> points, double eps, int min_pts) {
    return dbscan_impl<2>(points, eps, min_pts);
}

std::vector<int> dbscan(std::span<const Eigen::Vector3d> points, double eps, int min_pts) {
    return dbscan_impl<3>(points, eps, min_pts);
}

void LocalizationParams::validate() const {
    if (min_gaussians < 0 || !(eps > 0) || min_pts < 1 || !(nms_radius > 0))
        throw ConfigError("localization: parameters must be positive");
}

DetectionSet non_maximum_suppression(DetectionSet detections, double radius) {
    std::sort(detections.begin(), detections.end(), detection_order);
    DetectionSet kept;
    for (const auto& d : detections) {
        const bool clear = std::none_of(kept.begin(), kept.end(),
                                        [&](const Detection& k) { return std::hypot(k.x - d.x, k.y - d.y) <= radius; });
        if (clear) kept.push_back(d);
    }
    return kept;
}

DetectionSet localize(std::span<const Gaussian3D> gaussians, const LocalizationParams& params) {
    params.validate();
    std::map<int, std::vector<Eigen::Vector2d>> by_id;
    for (const auto& g : gaussians)
        if (g.ped_id) by_id[*g.ped_id].emplace_back(g.mean.x(), g.mean.y());

    DetectionSet raw;
    for (auto& [id, pts] : by_id) {
        if (static_cast<int>(pts.size()) <= params.min_gaussians) continue;
        // Canonical order so the result does not depend on input order.
        std::sort(pts.begin(), pts.end(), [](const Eigen::Vector2d& a, const Eigen::Vector2d& b) {
            return std::tie(a.x(), a.y()) < std::tie(b.x(), b.y());
        });
        const auto labels = dbscan(std::span<const Eigen::Vector2d>(pts), params.eps, params.min_pts);
        std::map<int, std::pair<Eigen::Vector2d, int>> acc;
        for (std::size_t i = 0; i < pts.size(); ++i) {
            if (labels[i] == kNoise) continue;
            auto& a = acc.try_emplace(labels[i], Eigen::Vector2d::Zero(), 0).first->second;
            a.first += pts[i];
            ++a.second;
        }
        for (const auto& [label, a] : acc) {
            if (a.second <= params.min_gaussians) continue; // the same count gate applies per cluster
            const Eigen::Vector2d c = a.first / a.second;
            raw.push_back({c.x(), c.y(), static_cast<double>(a.second), id});
        }
    }
    return non_maximum_suppression(std::move(raw), params.nms_radius);
}

} // namespace pedsplat
