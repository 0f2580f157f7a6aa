#include "pedsplat/metrics.hpp"

#include "pedsplat/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace pedsplat {

namespace {

void finish(EvalResult& r, int gt_count, double gate) {
    r.moda = gt_count == 0 ? (r.fp == 0 ? 1.0 : 1.0 - r.fp) : 1.0 - static_cast<double>(r.fp + r.fn) / gt_count;
    r.modp = r.tp == 0 ? 0.0 : 1.0 - r.distance_sum / (gate * r.tp);
    r.precision = r.tp + r.fp == 0 ? 1.0 : static_cast<double>(r.tp) / (r.tp + r.fp);
    r.recall = gt_count == 0 ? 1.0 : static_cast<double>(r.tp) / (r.tp + r.fn);
}

} // namespace

std::vector<int> min_cost_assignment(const Eigen::MatrixXd& cost) {
    // Shortest augmenting path (Jonker-Volgenant style potentials) on the
    // transposed problem when there are more rows than columns.
    const bool transpose = cost.rows() > cost.cols();
    const Eigen::MatrixXd a = transpose ? Eigen::MatrixXd(cost.transpose()) : cost;
    const int n = static_cast<int>(a.rows()), m = static_cast<int>(a.cols());
    const double inf = std::numeric_limits<double>::infinity();
    std::vector<double> u(n + 1, 0.0), v(m + 1, 0.0);
    std::vector<int> p(m + 1, 0), way(m + 1, 0);
    for (int i = 1; i <= n; ++i) {
        p[0] = i;
        int j0 = 0;
        std::vector<double> minv(m + 1, inf);
        std::vector<char> used(m + 1, 0);
        do {
            used[j0] = 1;
            const int i0 = p[j0];
            double delta = inf;
            int j1 = 0;
            for (int j = 1; j <= m; ++j) {
                if (used[j]) continue;
                const double cur = a(i0 - 1, j - 1) - u[i0] - v[j];
                if (cur < minv[j]) {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if (minv[j] < delta) {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for (int j = 0; j <= m; ++j) {
                if (used[j]) {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
        } while (p[j0] != 0);
        do {
            const int j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
        } while (j0 != 0);
    }
    std::vector<int> row_to_col(n, -1);
    for (int j = 1; j <= m; ++j)
        if (p[j] != 0) row_to_col[p[j] - 1] = j - 1;
    if (!transpose) return row_to_col;
    std::vector<int> out(cost.rows(), -1);
    for (int i = 0; i < n; ++i)
        if (row_to_col[i] >= 0) out[row_to_col[i]] = i;
    return out;
}

std::vector<std::pair<int, int>> match_detections(const DetectionSet& detections,
                                                  std::span<const Eigen::Vector2d> gt, double gate) {
    if (!(gate > 0.0)) throw ConfigError("evaluate: gate must be positive");
    std::vector<std::pair<int, int>> pairs;
    if (detections.empty() || gt.empty()) return pairs;
    const int nd = static_cast<int>(detections.size()), ng = static_cast<int>(gt.size());
    // Any out-of-gate pair costs more than every in-gate matching combined, so
    // the optimum first maximizes the number of in-gate pairs.
    const double big = gate * (std::min(nd, ng) + 1);
    Eigen::MatrixXd cost(nd, ng);
    for (int i = 0; i < nd; ++i)
        for (int j = 0; j < ng; ++j) {
            const double d = std::hypot(detections[i].x - gt[j].x(), detections[i].y - gt[j].y());
            cost(i, j) = d <= gate ? d : big;
        }
    const auto assign = min_cost_assignment(cost);
    for (int i = 0; i < nd; ++i)
        if (assign[i] >= 0 && cost(i, assign[i]) < big) pairs.emplace_back(i, assign[i]);
    return pairs;
}

EvalResult evaluate(const DetectionSet& detections, std::span<const Eigen::Vector2d> gt, double gate) {
    const auto pairs = match_detections(detections, gt, gate);
    EvalResult r;
    r.tp = static_cast<int>(pairs.size());
    r.fp = static_cast<int>(detections.size()) - r.tp;
    r.fn = static_cast<int>(gt.size()) - r.tp;
    for (const auto& [d, g] : pairs)
        r.distance_sum += std::hypot(detections[d].x - gt[g].x(), detections[d].y - gt[g].y());
    finish(r, static_cast<int>(gt.size()), gate);
    return r;
}

EvalResult aggregate(std::span<const EvalResult> frames, double gate) {
    EvalResult r;
    for (const auto& f : frames) {
        r.tp += f.tp;
        r.fp += f.fp;
        r.fn += f.fn;
        r.distance_sum += f.distance_sum;
    }
    finish(r, r.tp + r.fn, gate);
    return r;
}

} // namespace pedsplat
