#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "specrecon/model_spaces.hpp"
#include "specrecon/wave_control.hpp"

namespace specrecon {

/// Multi-index beta, one entry per net anchor.
struct SliceIndex {
  std::vector<int> beta;

  auto operator<=>(const SliceIndex&) const = default;
};

/// r_beta(z) = beta_i * eta for z in U_i, with the measure that admitted it.
struct SliceFunction {
  SliceIndex index;
  double eta = 0.0;
  double measure = 0.0;

  double value(std::size_t anchor) const { return index.beta.at(anchor) * eta; }
};

struct ReconParams {
  double eta = 0.5;
  double c_star = 0.0;        // <= 0: calibrate from small-ball measures
  double sigma = 0.2;
  int dimY = 0;               // <= 0: intrinsic dimension of the space
  double C_s = 1.0;
  double tau = 0.0;           // <= 0: eta
  double probe_eps = 0.0;     // <= 0: eta
  std::size_t max_active = 8;
  std::size_t probe_points = 256;
  std::size_t calibration_points = 4096;
  int beam_radius = 1;
  std::uint64_t seed = 1;
  unsigned threads = 0;
};

struct RStar {
  std::vector<SliceFunction> slices;  // lexicographic in beta
  double eta = 0.0;
  double c_star = 0.0;
  double threshold = 0.0;             // c_star * eta^dimY
  double max_measure = 0.0;           // over every tested candidate
  std::size_t candidates = 0;
  std::size_t probes_covered = 0;     // probe seeds that were admitted
  std::size_t probes = 0;
};

/// 0.5 * min_x mu(B(x, eta/2)) / eta^dimY, with mu estimated by the fraction
/// of a seeded uniform sample inside each ball, x ranging over probe points.
double calibrate_c_star(const Space& space, double eta, int dimY, std::size_t probes,
                        std::size_t samples, std::uint64_t seed);

/// beta_i = floor(d(x, U_i) / eta) + 1, clipped to [1, ceil(D / eta)].
SliceIndex seed_index(const Space& space, const PointCloud& cloud, const NetWithPatches& net,
                      Coord x, double eta);

/// Beam search: seeds from probe points plus +-1..beam_radius moves per
/// coordinate, each admitted iff slice_measure > c_star * eta^dimY.
/// Throws NumericalError when nothing is admitted.
RStar build_rstar(const MeasureOracle& oracle, const Space& space, const PointCloud& cloud,
                  const ReconParams& rp);

/// D^a(p_i, p_k) = min over admitted slices of r_beta(p_i) + r_beta(p_k).
double approx_distance(const RStar& rstar, std::size_t i, std::size_t k);

/// All pairs, zero diagonal.
Eigen::MatrixXd net_distance_matrix(const RStar& rstar, std::size_t net_size);

/// Effective exponent: rp.dimY if positive, else the intrinsic dimension.
int effective_dim(const Space& space, const ReconParams& rp);

}  // namespace specrecon
