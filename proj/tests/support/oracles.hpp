#pragma once

// Independent reference implementations used to check the library.

#include <Eigen/Core>
#include <Eigen/Geometry>

namespace pedsplat::fixtures {

/// Radius of the sphere centered at distance t along the ray to the circle
/// center that just touches the ray through the circle's near edge. Found by
/// bisection on the ray/sphere discriminant, image plane at distance f,
/// circle center at lateral offset `lateral` from the principal point.
double tangent_sphere_radius(double t, double f, double r, double lateral);

} // namespace pedsplat::fixtures

#include <utility>
#include <vector>

namespace pedsplat::fixtures {

/// O(n^2) density clustering: all-pairs neighbor counts, core components by
/// union-find, border points to the cluster of their lowest-index core
/// neighbor. Labels are cluster ids in order of lowest member index, -1 noise.
std::vector<int> brute_force_dbscan(const std::vector<Eigen::VectorXd>& points, double eps, int min_pts);

/// Relabels a partition by order of first appearance (noise stays -1), so two
/// labelings of the same partition compare equal.
std::vector<int> canonical_partition(const std::vector<int>& labels);

struct AssignmentSummary {
    int matches = 0;
    double cost = 0.0;
};

/// Exhaustive search over injective maps from the smaller side: most pairs
/// within the gate, then least total distance.
AssignmentSummary brute_force_gated_assignment(const std::vector<Eigen::Vector2d>& a,
                                               const std::vector<Eigen::Vector2d>& b, double gate);

} // namespace pedsplat::fixtures

namespace pedsplat::fixtures {

/// First hit of origin + t * dir with the capsule of radius r around segment
/// [a, b], by sphere tracing its distance field; negative when missed.
double sphere_trace_capsule(const Eigen::Vector3d& a, const Eigen::Vector3d& b, double r,
                            const Eigen::Vector3d& origin, const Eigen::Vector3d& dir, double t_max);

} // namespace pedsplat::fixtures
