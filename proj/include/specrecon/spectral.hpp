#pragma once

#include <cstddef>
#include <string>

#include <Eigen/Dense>

#include "specrecon/model_spaces.hpp"

namespace specrecon {

/// Finite spectral data of a space in the probability-measure convention:
/// the measure has total mass one, so phi_0 == 1 and lambda_0 == 0 for
/// exact data.
struct SpectralData {
  Eigen::VectorXd eigenvalues;  // lambda_0 <= ... <= lambda_J
  Eigen::MatrixXd eigfun;       // (J+1) x K, eigfun(j, k) = phi_j(x_k)
  Eigen::VectorXd weights;      // K quadrature weights, summing to one
  PointCloud points;
  std::string provenance;

  int J() const { return static_cast<int>(eigenvalues.size()) - 1; }
  std::size_t K() const { return static_cast<std::size_t>(eigfun.cols()); }
};

struct KernelMatrix {
  Eigen::MatrixXd values;
  double time = 0.0;
};

/// Exact Laplace spectrum of S^1_R x S^1_r sampled at the cloud. Modes are
/// ordered by eigenvalue (k/R)^2 + (l/r)^2, ties broken by (k, l) and then
/// cos before sin in each factor.
SpectralData torus_spectrum(const FlatTorus& t, int J, const PointCloud& cloud);

SpectralData circle_spectrum(const Circle& c, int J, const PointCloud& cloud);

/// Quadrature cloud on the cone: Gauss-Legendre in rho, uniform midpoints in
/// theta; `weights` are area weights normalised to one.
struct WeightedCloud {
  PointCloud cloud;
  Eigen::VectorXd weights;
};
WeightedCloud cone_polar_grid(const FlatCone& c, int n_rho, int n_theta);

/// Exact Neumann spectrum of the truncated cone: modes
/// J_nu(k rho) {cos, sin}(nu theta), nu = m n, with J_nu'(k rho_max) = 0.
/// Ordered by eigenvalue, ties by (n, radial index), cos before sin.
/// Empty `weights` means uniform 1/K (area-uniform samples).
SpectralData cone_spectrum(const FlatCone& c, int J, const PointCloud& cloud,
                           const Eigen::VectorXd& weights = Eigen::VectorXd());

/// (mean distance to the 8th nearest neighbour)^2.
double default_bandwidth(const Eigen::MatrixXd& distances);

/// Density-normalised graph Laplacian with Gaussian weights
/// exp(-d^2 / (4 eps)); returns its J+1 smallest eigenpairs rescaled to the
/// SpectralData convention. Weights are the stationary measure of the
/// normalised random walk.
SpectralData graph_laplacian_spectrum(const Eigen::MatrixXd& distances, const PointCloud& cloud,
                                      double bandwidth, int J);
SpectralData graph_laplacian_spectrum(const Space& space, const PointCloud& cloud,
                                      double bandwidth, int J);

/// Lattice-sum heat kernel of the flat torus with the 1/(4 pi t) Riemannian
/// normalisation. Truncation is fixed at construction so that the discarded
/// tail is below `tol` for every pair of points.
class TorusHeatKernel {
 public:
  TorusHeatKernel(const FlatTorus& t, double time, double tol);

  double operator()(Coord p, Coord q) const;

  int small_terms() const { return l_small_; }
  int large_terms() const { return l_large_; }

 private:
  double axis_sum(double delta, double period, int terms) const;

  FlatTorus torus_;
  double time_;
  int l_small_;
  int l_large_;
};

double heat_kernel_theta(const FlatTorus& t, Coord p, Coord q, double time, double tol);

/// sum_j exp(-lambda_j t) phi_j(x_p) phi_j(x_q); tends to 1 as t -> infinity.
double heat_kernel_spectral(const SpectralData& sd, std::size_t p, std::size_t q, double time);

/// Phi * diag(w) * Phi^T; the identity for exactly orthonormal data.
Eigen::MatrixXd gram_matrix(const SpectralData& sd);

}  // namespace specrecon
