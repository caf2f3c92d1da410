#pragma once

#include <cstddef>
#include <cstdint>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace specrecon {

struct FiniteMetricSpace {
  Eigen::MatrixXd d;  // symmetric, zero diagonal, triangle inequality exact

  std::size_t size() const { return static_cast<std::size_t>(d.rows()); }
  double diameter() const { return d.size() == 0 ? 0.0 : d.maxCoeff(); }
};

enum class RepairBackend { Closure, Projection };

struct RepairResult {
  FiniteMetricSpace metric;
  double max_deviation = 0.0;  // max |out - in|
  int sweeps = 0;              // projection sweeps, 0 for closure
};

/// Exhaustive check of d(i,k) <= d(i,j) + d(j,k) with zero tolerance,
/// plus symmetry, zero diagonal and nonnegativity.
bool is_metric(const Eigen::MatrixXd& d);

/// Closure: all-pairs shortest paths, iterated to a fixed point so the
/// triangle inequality holds in floating point. Projection: cyclic
/// triangle-fixing projections, then closure.
RepairResult repair_metric(const Eigen::MatrixXd& dhat,
                           RepairBackend backend = RepairBackend::Closure,
                           int max_sweeps = 1000);

using Correspondence = std::vector<std::pair<std::size_t, std::size_t>>;

struct GhBound {
  double lower = 0.0;
  double upper = 0.0;
  Correspondence witness;  // attains `upper`
};

/// max |a(i,i') - b(j,j')| over pairs of pairs in r.
double distortion(const FiniteMetricSpace& a, const FiniteMetricSpace& b, const Correspondence& r);

inline constexpr std::size_t kGhExactCap = 7;

/// Exact d_GH by branch and bound over correspondences built from a map
/// a -> b and a map b -> a. Both spaces must have at most kGhExactCap points.
GhBound gh_exact_small(const FiniteMetricSpace& a, const FiniteMetricSpace& b,
                       unsigned threads = 1);

/// Greedy plus local-search correspondences from seeded restarts, run in
/// both orientations. lower = |diam a - diam b| / 2.
GhBound gh_upper_bound(const FiniteMetricSpace& a, const FiniteMetricSpace& b,
                       std::uint64_t seed, int restarts = 32);

}  // namespace specrecon
