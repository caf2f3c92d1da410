#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "specrecon/distance_recon.hpp"
#include "specrecon/wave_control.hpp"

namespace specrecon {

/// N(x, y; rho, s, eps) = X(U_y, s + eps) \ X(U_x, rho + s), x and y net indices.
struct CutProbe {
  std::size_t x = 0;
  std::size_t y = 0;
  double rho = 0.0;
  double s = 0.0;
  double eps = 0.0;
};

/// d_S^sigma(x, y) = (rho + s, s) for a pair that passed both scan criteria.
struct CutRecord {
  std::size_t x = 0;
  std::size_t y = 0;
  std::size_t midpoint = 0;
  double rho_plus_s = 0.0;
  double s = 0.0;
};

struct CutData {
  std::vector<CutRecord> records;
  std::vector<std::string> diagnostics;  // skipped or rejected pairs
};

struct SingularSelection {
  std::vector<SliceIndex> s_star;
  std::vector<std::size_t> far_indices;
  std::vector<std::size_t> near_indices;
  std::vector<SliceIndex> assigned;  // per net point, nearest admitted slice
};

/// mu^a(A u B) - mu^a(B), clamped to [0, 1].
double n_set_measure(const MeasureOracle& oracle, const CutProbe& probe);

/// Step-1 scan over ordered net pairs with rho = dmat(x, y) >= eta.
CutData scan_cut_data(const MeasureOracle& oracle, const Eigen::MatrixXd& dmat, double c_star,
                      int dimY, const ReconParams& rp);

/// S*: admitted slices with ||(r_beta(x), r_beta(y)) - (rho + s, s)||_inf < 3 sigma
/// for some record.
std::vector<SliceIndex> select_singular_slices(const RStar& rstar, const CutData& cut,
                                               const ReconParams& rp);

/// Net point i is mapped to the admitted slice nearest (l_inf) to
/// floor(dmat(i, .) / eta) + 1; it is far iff eta * ||beta - beta_S||_inf > 3 C_s sqrt(sigma)
/// for every beta_S in S*.
SingularSelection classify_net(const RStar& rstar, const std::vector<SliceIndex>& s_star,
                               const Eigen::MatrixXd& dmat, const ReconParams& rp);

}  // namespace specrecon
