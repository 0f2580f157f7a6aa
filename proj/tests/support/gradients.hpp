#pragma once

// Finite-difference checking of the analytic loss gradient.

#include "pedsplat/optimizer.hpp"

#include <functional>
#include <random>
#include <vector>

namespace pedsplat::fixtures {

/// Two views of a small blob: random color targets and two instances side by side.
std::vector<TrainingView> random_training_views(std::mt19937_64& rng, int size, double focal);

struct GradCheck {
    double max_rel = 0.0;  // worst entry, relative to max(|numeric|, 1% of the largest)
    double norm_rel = 0.0; // |analytic - numeric| / |numeric| over all entries
};

using LossFn = std::function<double(const std::vector<Gaussian3D>&)>;

/// Central differences over mean, log-scales, opacity logit, color and quaternion.
GradCheck check_gradient(std::vector<Gaussian3D> gaussians, const std::vector<GaussianGradient>& analytic,
                         const LossFn& loss);

} // namespace pedsplat::fixtures
