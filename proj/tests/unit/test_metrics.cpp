#include "pedsplat/metrics.hpp"

#include "oracles.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace pedsplat;

namespace {

using Points = std::vector<Eigen::Vector2d>;

DetectionSet as_detections(const Points& pts) {
    DetectionSet out;
    for (std::size_t i = 0; i < pts.size(); ++i) out.push_back({pts[i].x(), pts[i].y(), 1.0, static_cast<int>(i)});
    return out;
}

Points grid_gt(int n) {
    Points gt;
    for (int i = 0; i < n; ++i) gt.emplace_back(2.0 * i, 1.0);
    return gt;
}

} // namespace

TEST(Evaluate, PerfectDetection) {
    const auto gt = grid_gt(4);
    const auto r = evaluate(as_detections(gt), gt);
    EXPECT_EQ(r.moda, 1.0);
    EXPECT_EQ(r.modp, 1.0);
    EXPECT_EQ(r.precision, 1.0);
    EXPECT_EQ(r.recall, 1.0);
    EXPECT_EQ(r.tp, 4);
}

TEST(Evaluate, TenGroundTruthOneFalsePositiveTwoMisses) {
    const auto gt = grid_gt(10);
    Points dets(gt.begin(), gt.begin() + 8);
    dets.emplace_back(100.0, 100.0);
    const auto r = evaluate(as_detections(dets), gt);
    EXPECT_EQ(r.tp, 8);
    EXPECT_EQ(r.fp, 1);
    EXPECT_EQ(r.fn, 2);
    EXPECT_DOUBLE_EQ(r.moda, 0.7);
    EXPECT_DOUBLE_EQ(r.precision, 8.0 / 9.0);
    EXPECT_DOUBLE_EQ(r.recall, 0.8);
}

TEST(Evaluate, ModpFromTwoMatchedDistances) {
    const Points gt{{0.0, 0.0}, {5.0, 0.0}};
    const Points dets{{0.1, 0.0}, {5.0, 0.2}};
    const auto r = evaluate(as_detections(dets), gt, 0.5);
    EXPECT_DOUBLE_EQ(r.modp, 0.7);
    EXPECT_NEAR(r.mean_error(), 0.15, 1e-15);
}

TEST(Evaluate, EmptyCases) {
    const auto none = evaluate({}, {});
    EXPECT_EQ(none.moda, 1.0);
    EXPECT_EQ(none.precision, 1.0);
    EXPECT_EQ(none.recall, 1.0);
    EXPECT_EQ(none.modp, 0.0);

    const auto miss = evaluate({}, grid_gt(3));
    EXPECT_EQ(miss.moda, 0.0);
    EXPECT_EQ(miss.recall, 0.0);
    EXPECT_EQ(miss.precision, 1.0);

    // No ground truth: false positives count against a denominator of one.
    const auto spurious = evaluate(as_detections({{0, 0}, {3, 0}}), {});
    EXPECT_EQ(spurious.fp, 2);
    EXPECT_EQ(spurious.moda, -1.0);
    EXPECT_EQ(spurious.precision, 0.0);
}

TEST(Evaluate, GateIsInclusiveAndStrictlyExcludesBeyond) {
    const Points gt{{0.0, 0.0}};
    EXPECT_EQ(evaluate(as_detections({{0.5, 0.0}}), gt).tp, 1);
    EXPECT_EQ(evaluate(as_detections({{0.5000001, 0.0}}), gt).tp, 0);
}

TEST(Evaluate, FarDetectionCostsExactlyOneOverGt) {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(-5.0, 5.0);
    for (int trial = 0; trial < 20; ++trial) {
        Points gt, dets;
        for (int i = 0; i < 6; ++i) gt.emplace_back(u(rng), u(rng));
        for (int i = 0; i < 5; ++i) dets.emplace_back(gt[i].x() + 0.1 * u(rng) / 5, gt[i].y());
        const auto before = evaluate(as_detections(dets), gt);
        dets.emplace_back(50.0, 50.0);
        const auto after = evaluate(as_detections(dets), gt);
        EXPECT_NEAR(before.moda - after.moda, 1.0 / 6.0, 1e-12);
        EXPECT_LE(after.precision, before.precision);
    }
}

TEST(Evaluate, InvariantUnderRigidMotion) {
    std::mt19937_64 rng(6);
    std::uniform_real_distribution<double> u(-3.0, 3.0);
    Points gt, dets;
    for (int i = 0; i < 12; ++i) gt.emplace_back(u(rng), u(rng));
    for (int i = 0; i < 10; ++i) dets.emplace_back(u(rng), u(rng));
    const Eigen::Rotation2Dd rot(0.7);
    const Eigen::Vector2d shift(10.0, -4.0);
    Points gt2, dets2;
    for (const auto& p : gt) gt2.push_back(rot * p + shift);
    for (const auto& p : dets) dets2.push_back(rot * p + shift);
    const auto a = evaluate(as_detections(dets), gt, 1.0);
    const auto b = evaluate(as_detections(dets2), gt2, 1.0);
    EXPECT_EQ(a.tp, b.tp);
    EXPECT_NEAR(a.moda, b.moda, 1e-12);
    EXPECT_NEAR(a.modp, b.modp, 1e-9);
}

TEST(Assignment, OptimalAgainstBruteForce) {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u(0.0, 1.5);
    for (int trial = 0; trial < 300; ++trial) {
        Points gt, dets;
        const int ng = static_cast<int>(rng() % 9), nd = static_cast<int>(rng() % 9);
        for (int i = 0; i < ng; ++i) gt.emplace_back(u(rng), u(rng));
        for (int i = 0; i < nd; ++i) dets.emplace_back(u(rng), u(rng));
        const auto pairs = match_detections(as_detections(dets), gt, 0.5);
        double cost = 0.0;
        std::vector<char> used_d(nd, 0), used_g(ng, 0);
        for (const auto& [d, g] : pairs) {
            ASSERT_FALSE(used_d[d] || used_g[g]);
            used_d[d] = used_g[g] = 1;
            const double dist = (dets[d] - gt[g]).norm();
            EXPECT_LE(dist, 0.5);
            cost += dist;
        }
        const auto oracle = fixtures::brute_force_gated_assignment(dets, gt, 0.5);
        EXPECT_EQ(static_cast<int>(pairs.size()), oracle.matches);
        EXPECT_NEAR(cost, oracle.cost, 1e-9);
    }
}

TEST(Assignment, RectangularCostMatrices) {
    Eigen::MatrixXd c(2, 3);
    c << 4, 1, 3, 2, 0.5, 5;
    EXPECT_EQ(min_cost_assignment(c), (std::vector<int>{1, 0}));
    EXPECT_EQ(min_cost_assignment(c.transpose()), (std::vector<int>{1, 0, -1}));
}

TEST(Aggregate, PoolsCountsAcrossFrames) {
    const auto gt = grid_gt(5);
    const auto a = evaluate(as_detections(gt), gt);
    const auto b = evaluate({}, gt);
    const std::vector<EvalResult> frames{a, b};
    const auto r = aggregate(frames);
    EXPECT_EQ(r.tp, 5);
    EXPECT_EQ(r.fn, 5);
    EXPECT_DOUBLE_EQ(r.moda, 0.5);
    EXPECT_DOUBLE_EQ(r.recall, 0.5);
    EXPECT_EQ(r.modp, 1.0);
}
