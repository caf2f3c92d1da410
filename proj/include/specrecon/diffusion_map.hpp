#pragma once

#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "specrecon/model_spaces.hpp"
#include "specrecon/spectral.hpp"

namespace specrecon {

/// M = sum_p omega_p v_p w_p^T with omega descending. Column p-1 of `left`
/// holds the factor the embedding calls phi_p (indexed by the first kernel
/// argument); `right` holds psi_p.
struct SvdFactor {
  Eigen::VectorXd singular_values;
  Eigen::MatrixXd left;
  Eigen::MatrixXd right;

  Eigen::Index rank() const { return singular_values.size(); }
};

enum class KernelCase { C1, C2 };

std::string to_string(KernelCase c);

struct EmbeddingResult {
  Eigen::MatrixXd coords;  // n x J
  int start = 1;           // K, 1-based
  KernelCase source = KernelCase::C1;
};

struct CircleReport {
  double center_x = 0.0;
  double center_y = 0.0;
  double radius = 0.0;
  double radial_rms_relative = 0.0;
  double inversion_fraction = 0.0;
};

/// (1 / (4 pi t)) exp(-d^2 / (4t)) entrywise.
KernelMatrix exp_kernel_matrix(const Eigen::MatrixXd& distances, double time);

/// Heat kernel of the flat torus between all sample pairs.
KernelMatrix heat_kernel_matrix(const FlatTorus& t, const PointCloud& cloud, double time,
                                double tol);

/// Divides each row by its sum.
Eigen::MatrixXd row_normalize(const KernelMatrix& k);

/// Sign-canonicalised SVD (largest-magnitude entry of each left factor is
/// positive). `rank` truncates to the leading factors when given.
SvdFactor svd_factor(const Eigen::MatrixXd& m, std::optional<Eigen::Index> rank = std::nullopt);

/// Symmetric-conjugation variant: eigendecomposition of D^{-1/2} K D^{-1/2},
/// with eigenvectors mapped back by D^{-1/2} (left) and D^{1/2} (right).
SvdFactor symmetric_factor(const KernelMatrix& k);

/// Phi^{(K,J)}: left factors K .. K+J-1 (1-based) at every sample.
EmbeddingResult eigenfunction_map(const SvdFactor& f, int K, int J, KernelCase source);

/// Kasa circle fit plus angular-order agreement with `reference` (one value
/// per row, e.g. the s2 coordinate of each sample).
CircleReport circle_diagnostics(const EmbeddingResult& e, const std::vector<double>& reference);

}  // namespace specrecon
