#pragma once

#include <cstddef>
#include <map>
#include <mutex>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "specrecon/model_spaces.hpp"
#include "specrecon/spectral.hpp"

namespace specrecon {

/// Coefficients (v_0 .. v_J) against the basis of a SpectralData.
using FourierCoeffs = Eigen::VectorXd;

/// Observation set: patches U_k observed over times [-alpha_k, alpha_k].
/// The domain of influence is the union of the alpha_k-neighbourhoods.
struct InfluenceSpec {
  std::vector<std::vector<std::size_t>> patches;
  std::vector<double> radii;
};

struct ConstraintParams {
  double E1 = 0.0;     // H^2 ball radius; <= 0 selects 10 * ||a||_H
  double eps1 = 0.05;  // cap on the observation norm
  int time_grid = 0;   // > 0: Gauss-Legendre nodes per unit time instead of closed form
  int max_iter = 400;
};

/// Result of the two-constraint projection. `b = a - c`.
struct ProjectionResult {
  FourierCoeffs b;
  FourierCoeffs c;
  double mu_h = 0.0;
  double mu_q = 0.0;
  double kkt_residual = 0.0;
};

/// W(v)(x_k, t) = sum_j v_j cos(sqrt(lambda_j) t) phi_j(x_k).
double wave_eval(const SpectralData& sd, const FourierCoeffs& v, std::size_t k, double t);

/// sum_j (1 + lambda_j^2) v_j^2.
double h2_norm_sq(const SpectralData& sd, const FourierCoeffs& v);

/// int_{-alpha}^{alpha} cos(a t) cos(b t) dt.
double time_factor(double a, double b, double alpha);

/// sum_{x in U} w_x phi_j(x) phi_l(x).
Eigen::MatrixXd patch_gram(const SpectralData& sd, std::span<const std::size_t> patch);

/// Q with v^T Q v = ||W(v)||^2 over the union of U_k x [-alpha_k, alpha_k].
Eigen::MatrixXd observation_gram(const SpectralData& sd, const InfluenceSpec& spec,
                                 int time_grid = 0);

/// min ||c - a||^2  s.t.  c^T H c <= E1^2,  c^T Q c <= eps1^2,  H = diag(1 + lambda^2).
ProjectionResult masked_projection(const SpectralData& sd, const Eigen::MatrixXd& Q,
                                   const FourierCoeffs& a, const ConstraintParams& cp);
ProjectionResult masked_projection(const SpectralData& sd, const InfluenceSpec& spec,
                                   const FourierCoeffs& a, const ConstraintParams& cp);

/// mu^a(X_alpha): b_0 of the projection of the constant function, clamped to [0, 1].
double measure_estimate(const SpectralData& sd, const InfluenceSpec& spec,
                        const ConstraintParams& cp);

/// Union-of-neighbourhood measures on a fixed net, with patch Gram matrices
/// precomputed and results memoised. Radii at or beyond the diameter give
/// the whole space. Thread-safe.
class MeasureOracle {
 public:
  MeasureOracle(const SpectralData& sd, const NetWithPatches& net, double diameter,
                ConstraintParams cp);

  /// mu^a of the union over pairs (anchor index into the net, radius).
  /// Nonpositive radii contribute nothing; an empty union has measure 0.
  double union_measure(std::vector<std::pair<std::size_t, double>> terms) const;

  /// mu^a of the slice {x : d(x, U_i) in [beta_i eta - 2 eta, beta_i eta) for beta_i > 0}.
  double slice_measure(std::span<const int> beta, double eta, std::size_t max_active = 8) const;

  const SpectralData& spectral() const { return sd_; }
  const NetWithPatches& net() const { return net_; }
  double diameter() const { return diameter_; }
  const ConstraintParams& params() const { return cp_; }
  std::size_t cache_size() const;

 private:
  const SpectralData& sd_;
  const NetWithPatches& net_;
  double diameter_;
  ConstraintParams cp_;
  Eigen::VectorXd sqrt_lambda_;
  std::vector<Eigen::MatrixXd> grams_;
  const Eigen::MatrixXd& time_matrix_for(double radius) const;

  mutable std::mutex mutex_;
  mutable std::map<double, Eigen::MatrixXd> time_cache_;
  mutable std::map<std::vector<std::pair<std::size_t, double>>, double> cache_;
};

/// Slice measure through a one-shot oracle.
double slice_measure(const SpectralData& sd, const NetWithPatches& net, std::span<const int> beta,
                     double eta, double diameter, const ConstraintParams& cp,
                     std::size_t max_active = 8);

}  // namespace specrecon
