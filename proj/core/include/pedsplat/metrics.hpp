#pragma once

#include "pedsplat/localization.hpp"

#include <Eigen/Core>

#include <span>
#include <utility>
#include <vector>

namespace pedsplat {

struct EvalResult {
    double moda = 1.0;
    double modp = 0.0;
    double precision = 1.0;
    double recall = 1.0;
    int tp = 0;
    int fp = 0;
    int fn = 0;
    double distance_sum = 0.0; // sum of matched distances, for pooling and mean error

    double mean_error() const { return tp > 0 ? distance_sum / tp : 0.0; }
};

/// Minimum-cost assignment over a rectangular cost matrix (rows <= or > cols
/// both allowed). Returns, for each row, the assigned column or -1.
std::vector<int> min_cost_assignment(const Eigen::MatrixXd& cost);

/// Optimal one-to-one matching of detections to ground truth within `gate`
/// meters: maximum number of pairs, then minimum total distance. Returns
/// (detection index, gt index) pairs.
std::vector<std::pair<int, int>> match_detections(const DetectionSet& detections,
                                                  std::span<const Eigen::Vector2d> gt, double gate);

/// MODA, MODP (mean of 1 - d/gate over matches), precision and recall. With no
/// ground truth MODA is 1 - FP (the false positives are counted against one).
EvalResult evaluate(const DetectionSet& detections, std::span<const Eigen::Vector2d> gt, double gate = 0.5);

/// Pools counts over frames (MODA and precision/recall from summed counts,
/// MODP from the summed matched distances).
EvalResult aggregate(std::span<const EvalResult> frames, double gate = 0.5);

} // namespace pedsplat
