#include <gtest/gtest.h>

#include <cmath>

#include "specrecon/finite_metric.hpp"
#include "specrecon/rng.hpp"

using namespace specrecon;

namespace {

FiniteMetricSpace two_point(double d) {
  Eigen::MatrixXd m(2, 2);
  m << 0.0, d, d, 0.0;
  return {m};
}

FiniteMetricSpace random_euclidean(std::size_t n, SplitMix64& rng) {
  std::vector<std::array<double, 2>> p(n);
  for (auto& q : p) q = {rng.uniform(), rng.uniform()};
  Eigen::MatrixXd m(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t k = 0; k < n; ++k) m(i, k) = std::hypot(p[i][0] - p[k][0], p[i][1] - p[k][1]);
  return {m};
}

}  // namespace

TEST(Metric, DetectsViolations) {
  Eigen::MatrixXd d(3, 3);
  d << 0, 1, 3, 1, 0, 1, 3, 1, 0;
  EXPECT_FALSE(is_metric(d));
  d(0, 2) = d(2, 0) = 2.0;
  EXPECT_TRUE(is_metric(d));
}

TEST(Repair, ClosureShortensLongSide) {
  Eigen::MatrixXd d(3, 3);
  d << 0, 1, 3, 1, 0, 1, 3, 1, 0;
  const RepairResult r = repair_metric(d);
  EXPECT_EQ(r.metric.d(0, 2), 2.0);
  EXPECT_EQ(r.max_deviation, 1.0);
  EXPECT_TRUE(is_metric(r.metric.d));
}

TEST(Repair, ExactMetricIsIdentity) {
  SplitMix64 rng(4);
  for (int trial = 0; trial < 20; ++trial) {
    const FiniteMetricSpace a = random_euclidean(7, rng);
    const Eigen::MatrixXd closed = repair_metric(a.d).metric.d;
    if (!is_metric(a.d)) continue;  // rounding can break exact Euclidean triangles
    EXPECT_EQ(closed, a.d);
    EXPECT_EQ(repair_metric(a.d, RepairBackend::Projection).metric.d, a.d);
  }
}

// L1 distances have many triangles that are tight up to rounding.
TEST(Repair, TightL1MetricIsIdentity) {
  SplitMix64 rng(77);
  int checked = 0;
  for (int trial = 0; trial < 50; ++trial) {
    const Eigen::Index n = 3 + static_cast<Eigen::Index>(rng.next() % 10);
    Eigen::MatrixXd p(n, 3);
    for (Eigen::Index i = 0; i < n; ++i)
      for (int c = 0; c < 3; ++c) p(i, c) = rng.uniform();
    Eigen::MatrixXd d(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index k = 0; k < n; ++k) d(i, k) = (p.row(i) - p.row(k)).cwiseAbs().sum();
    if (!is_metric(d)) continue;
    ++checked;
    EXPECT_EQ(repair_metric(d, RepairBackend::Projection).metric.d, d);
  }
  EXPECT_GT(checked, 10);
}

TEST(Repair, NoisyInputBecomesMetric) {
  SplitMix64 rng(8);
  Eigen::MatrixXd d = random_euclidean(12, rng).d;
  for (Eigen::Index i = 0; i < 12; ++i) {
    for (Eigen::Index k = i + 1; k < 12; ++k) d(i, k) = d(k, i) = d(i, k) * (0.6 + 0.8 * rng.uniform());
  }
  for (RepairBackend b : {RepairBackend::Closure, RepairBackend::Projection}) {
    EXPECT_TRUE(is_metric(repair_metric(d, b).metric.d));
  }
}

TEST(Repair, RejectsMalformedInput) {
  Eigen::MatrixXd d(2, 2);
  d << 0, 1, 2, 0;
  EXPECT_THROW(repair_metric(d), std::invalid_argument);
  d << 0, -1, -1, 0;
  EXPECT_THROW(repair_metric(d), std::invalid_argument);
  EXPECT_THROW(repair_metric(Eigen::MatrixXd::Zero(2, 3)), std::invalid_argument);
}

TEST(Gh, TwoPointSpaces) {
  SplitMix64 rng(21);
  for (int trial = 0; trial < 100; ++trial) {
    const double a = 5 * rng.uniform(), b = 5 * rng.uniform();
    const GhBound g = gh_exact_small(two_point(a), two_point(b));
    EXPECT_DOUBLE_EQ(g.upper, 0.5 * std::fabs(a - b));
    EXPECT_EQ(g.lower, g.upper);
  }
}

TEST(Gh, KnownValues) {
  SplitMix64 rng(2);
  const FiniteMetricSpace a = random_euclidean(5, rng);
  EXPECT_EQ(gh_exact_small(a, a).upper, 0.0);
  EXPECT_EQ(gh_upper_bound(a, a, 1).upper, 0.0);
  // A point against any space: half its diameter.
  const FiniteMetricSpace point{Eigen::MatrixXd::Zero(1, 1)};
  EXPECT_DOUBLE_EQ(gh_exact_small(point, a).upper, 0.5 * a.diameter());
  // Unit equilateral triangle against the 2-point space at distance 1.
  Eigen::MatrixXd tri = Eigen::MatrixXd::Ones(3, 3) - Eigen::MatrixXd::Identity(3, 3);
  EXPECT_DOUBLE_EQ(gh_exact_small({tri}, two_point(1.0)).upper, 0.5);
  EXPECT_DOUBLE_EQ(gh_exact_small({tri}, two_point(3.0)).upper, 1.0);
}

TEST(Gh, UpperBoundDominatesExact) {
  SplitMix64 rng(5);
  for (int trial = 0; trial < 50; ++trial) {
    const FiniteMetricSpace a = random_euclidean(2 + rng.next() % 5, rng);
    const FiniteMetricSpace b = random_euclidean(2 + rng.next() % 5, rng);
    const GhBound exact = gh_exact_small(a, b);
    const GhBound up = gh_upper_bound(a, b, 99);
    EXPECT_GE(up.upper, exact.upper);
    EXPECT_LE(up.lower, exact.upper);
    EXPECT_DOUBLE_EQ(distortion(a, b, exact.witness), 2 * exact.upper);
  }
}

TEST(Gh, ExactIsThreadCountInvariant) {
  SplitMix64 rng(6);
  const FiniteMetricSpace a = random_euclidean(6, rng);
  const FiniteMetricSpace b = random_euclidean(6, rng);
  const GhBound one = gh_exact_small(a, b, 1);
  const GhBound four = gh_exact_small(a, b, 4);
  EXPECT_EQ(one.upper, four.upper);
  EXPECT_EQ(one.witness, four.witness);
  EXPECT_THROW(gh_exact_small(random_euclidean(8, rng), a), std::invalid_argument);
}
