#include "specrecon/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <tuple>
#include <vector>

#include "specrecon/quadrature.hpp"

namespace specrecon {

namespace {

enum class Trig { One, Cos, Sin };

double trig(Trig kind, int freq, double angle) {
  switch (kind) {
    case Trig::One: return 1.0;
    case Trig::Cos: return std::cos(freq * angle);
    case Trig::Sin: return std::sin(freq * angle);
  }
  return 0.0;
}

struct TorusMode {
  double lambda;
  int k;  // large-circle frequency (s2)
  int l;  // small-circle frequency (s1)
  Trig large;
  Trig small;
};

// Sorts by eigenvalue, then re-sorts runs of numerically equal eigenvalues
// by the deterministic key so degenerate clusters have a fixed order.
template <class Mode, class Key>
void sort_modes(std::vector<Mode>& modes, Key key) {
  std::stable_sort(modes.begin(), modes.end(),
                   [](const Mode& a, const Mode& b) { return a.lambda < b.lambda; });
  std::size_t start = 0;
  while (start < modes.size()) {
    std::size_t end = start + 1;
    while (end < modes.size() &&
           modes[end].lambda - modes[start].lambda <= 1e-12 * std::max(1.0, modes[start].lambda)) {
      ++end;
    }
    std::stable_sort(modes.begin() + start, modes.begin() + end,
                     [&](const Mode& a, const Mode& b) { return key(a) < key(b); });
    start = end;
  }
}

void canonicalize_sign(Eigen::Ref<Eigen::RowVectorXd, 0, Eigen::InnerStride<>> row) {
  Eigen::Index best = 0;
  double mag = -1.0;
  for (Eigen::Index i = 0; i < row.size(); ++i) {
    if (std::fabs(row(i)) > mag) {
      mag = std::fabs(row(i));
      best = i;
    }
  }
  if (row(best) < 0.0) row = -row;
}

}  // namespace

SpectralData torus_spectrum(const FlatTorus& t, int J, const PointCloud& cloud) {
  if (J < 1) throw std::invalid_argument("torus_spectrum: J must be >= 1");
  if (cloud.size() == 0) throw std::invalid_argument("torus_spectrum: empty cloud");

  const double inv_R2 = 1.0 / (t.R() * t.R());
  const double inv_r2 = 1.0 / (t.r() * t.r());
  // Grow the eigenvalue cutoff until at least J+1 real modes fall below it.
  double cutoff = std::min(inv_R2, inv_r2);
  std::vector<TorusMode> modes;
  for (;;) {
    modes.clear();
    const int kmax = static_cast<int>(std::floor(std::sqrt(cutoff / inv_R2)));
    const int lmax = static_cast<int>(std::floor(std::sqrt(cutoff / inv_r2)));
    for (int k = 0; k <= kmax; ++k) {
      for (int l = 0; l <= lmax; ++l) {
        const double lambda = k * k * inv_R2 + l * l * inv_r2;
        if (lambda > cutoff) continue;
        const std::vector<Trig> large = k == 0 ? std::vector<Trig>{Trig::One}
                                               : std::vector<Trig>{Trig::Cos, Trig::Sin};
        const std::vector<Trig> small = l == 0 ? std::vector<Trig>{Trig::One}
                                               : std::vector<Trig>{Trig::Cos, Trig::Sin};
        for (Trig a : large) {
          for (Trig b : small) modes.push_back({lambda, k, l, a, b});
        }
      }
    }
    if (static_cast<int>(modes.size()) >= J + 1) break;
    cutoff *= 2.0;
  }
  sort_modes(modes, [](const TorusMode& m) {
    return std::make_tuple(m.k, m.l, static_cast<int>(m.large), static_cast<int>(m.small));
  });
  modes.resize(J + 1);

  const auto K = static_cast<Eigen::Index>(cloud.size());
  SpectralData sd;
  sd.eigenvalues.resize(J + 1);
  sd.eigfun.resize(J + 1, K);
  for (int j = 0; j <= J; ++j) {
    const TorusMode& m = modes[j];
    sd.eigenvalues(j) = m.lambda;
    const double norm = (m.k > 0 ? std::sqrt(2.0) : 1.0) * (m.l > 0 ? std::sqrt(2.0) : 1.0);
    for (Eigen::Index i = 0; i < K; ++i) {
      const Coord& p = cloud.points[i];
      sd.eigfun(j, i) = norm * trig(m.large, m.k, p[1]) * trig(m.small, m.l, p[0]);
    }
  }
  sd.weights = Eigen::VectorXd::Constant(K, 1.0 / static_cast<double>(K));
  sd.points = cloud;
  sd.provenance = "exact:torus";
  return sd;
}

SpectralData circle_spectrum(const Circle& c, int J, const PointCloud& cloud) {
  if (J < 1) throw std::invalid_argument("circle_spectrum: J must be >= 1");
  if (cloud.size() == 0) throw std::invalid_argument("circle_spectrum: empty cloud");
  const auto K = static_cast<Eigen::Index>(cloud.size());
  SpectralData sd;
  sd.eigenvalues.resize(J + 1);
  sd.eigfun.resize(J + 1, K);
  const double inv_R2 = 1.0 / (c.R() * c.R());
  for (int j = 0; j <= J; ++j) {
    const int k = (j + 1) / 2;
    const Trig kind = j == 0 ? Trig::One : (j % 2 == 1 ? Trig::Cos : Trig::Sin);
    sd.eigenvalues(j) = k * k * inv_R2;
    const double norm = k > 0 ? std::sqrt(2.0) : 1.0;
    for (Eigen::Index i = 0; i < K; ++i) {
      sd.eigfun(j, i) = norm * trig(kind, k, cloud.points[i][0]);
    }
  }
  sd.weights = Eigen::VectorXd::Constant(K, 1.0 / static_cast<double>(K));
  sd.points = cloud;
  sd.provenance = "exact:circle";
  return sd;
}

WeightedCloud cone_polar_grid(const FlatCone& c, int n_rho, int n_theta) {
  if (n_rho < 1 || n_theta < 1) throw std::invalid_argument("cone_polar_grid: empty grid");
  std::vector<double> x, w;
  gauss_legendre(n_rho, x, w);
  WeightedCloud out;
  out.cloud.kind = SpaceKind::Cone;
  out.weights.resize(static_cast<Eigen::Index>(n_rho) * n_theta);
  const double half = 0.5 * c.rho_max();
  const double dtheta = c.cone_angle() / n_theta;
  Eigen::Index k = 0;
  for (int i = 0; i < n_rho; ++i) {
    const double rho = half * (x[i] + 1.0);
    for (int j = 0; j < n_theta; ++j) {
      out.cloud.points.push_back({rho, (j + 0.5) * dtheta});
      out.weights(k++) = half * w[i] * rho * dtheta / c.volume();
    }
  }
  return out;
}

namespace {

struct ConeMode {
  double lambda;
  int n;       // angular order, nu = m n
  int zero;    // radial index, 0 for the constant
  Trig kind;
  double x;    // k rho_max
};

double bessel_jp(double nu, double x) {
  if (nu == 0.0) return -std::cyl_bessel_j(1.0, x);
  return 0.5 * (std::cyl_bessel_j(nu - 1.0, x) - std::cyl_bessel_j(nu + 1.0, x));
}

// Positive zeros of J_nu' below xmax, by scanning and bisection.
std::vector<double> bessel_jp_zeros(double nu, double xmax) {
  std::vector<double> zeros;
  const double step = 0.05;
  double a = std::max(nu, step);
  double fa = bessel_jp(nu, a);
  for (double b = a + step; b < xmax + step; b += step) {
    const double fb = bessel_jp(nu, b);
    if (fa == 0.0 || fa * fb < 0.0) {
      double lo = a, hi = b;
      double flo = fa;
      for (int it = 0; it < 200 && hi - lo > 1e-14 * hi; ++it) {
        const double mid = 0.5 * (lo + hi);
        const double fm = bessel_jp(nu, mid);
        if (flo * fm <= 0.0) {
          hi = mid;
        } else {
          lo = mid;
          flo = fm;
        }
      }
      const double z = 0.5 * (lo + hi);
      if (z <= xmax) zeros.push_back(z);
    }
    a = b;
    fa = fb;
  }
  return zeros;
}

}  // namespace

SpectralData cone_spectrum(const FlatCone& c, int J, const PointCloud& cloud,
                           const Eigen::VectorXd& weights) {
  if (J < 1) throw std::invalid_argument("cone_spectrum: J must be >= 1");
  if (cloud.size() == 0) throw std::invalid_argument("cone_spectrum: empty cloud");
  const auto K = static_cast<Eigen::Index>(cloud.size());
  if (weights.size() != 0 && weights.size() != K) {
    throw std::invalid_argument("cone_spectrum: weight count does not match the cloud");
  }
  const double rmax = c.rho_max();
  const int m = c.m();

  double cutoff = 10.0 / (rmax * rmax);
  std::vector<ConeMode> modes;
  for (;;) {
    modes.clear();
    modes.push_back({0.0, 0, 0, Trig::One, 0.0});
    const double xmax = rmax * std::sqrt(cutoff);
    for (int n = 0; m * n < xmax; ++n) {
      const double nu = static_cast<double>(m * n);
      const std::vector<double> zeros = bessel_jp_zeros(nu, xmax);
      for (std::size_t z = 0; z < zeros.size(); ++z) {
        const double lambda = zeros[z] * zeros[z] / (rmax * rmax);
        const int idx = static_cast<int>(z) + 1;
        if (n == 0) {
          modes.push_back({lambda, n, idx, Trig::One, zeros[z]});
        } else {
          modes.push_back({lambda, n, idx, Trig::Cos, zeros[z]});
          modes.push_back({lambda, n, idx, Trig::Sin, zeros[z]});
        }
      }
    }
    if (static_cast<int>(modes.size()) >= J + 1) break;
    cutoff *= 2.0;
  }
  sort_modes(modes, [](const ConeMode& md) {
    return std::make_tuple(md.n, md.zero, static_cast<int>(md.kind));
  });
  modes.resize(J + 1);

  SpectralData sd;
  sd.eigenvalues.resize(J + 1);
  sd.eigfun.resize(J + 1, K);
  for (int j = 0; j <= J; ++j) {
    const ConeMode& md = modes[j];
    sd.eigenvalues(j) = md.lambda;
    if (md.zero == 0) {
      sd.eigfun.row(j).setOnes();
      continue;
    }
    const double nu = static_cast<double>(m * md.n);
    const double jx = std::cyl_bessel_j(nu, md.x);
    // int_0^rmax J_nu(k rho)^2 rho drho at a Neumann zero.
    const double radial = 0.5 * rmax * rmax * (1.0 - nu * nu / (md.x * md.x)) * jx * jx;
    const double angular = md.n == 0 ? c.cone_angle() : 0.5 * c.cone_angle();
    const double norm = std::sqrt(c.volume() / (radial * angular));
    for (Eigen::Index i = 0; i < K; ++i) {
      const Coord& p = cloud.points[i];
      sd.eigfun(j, i) =
          norm * std::cyl_bessel_j(nu, md.x * p[0] / rmax) * trig(md.kind, m * md.n, p[1]);
    }
  }
  sd.weights = weights.size() == K ? weights
                                   : Eigen::VectorXd::Constant(K, 1.0 / static_cast<double>(K));
  sd.points = cloud;
  sd.provenance = "exact:cone";
  return sd;
}

double default_bandwidth(const Eigen::MatrixXd& distances) {
  const Eigen::Index n = distances.rows();
  if (n < 2) throw std::invalid_argument("default_bandwidth: need at least two points");
  const Eigen::Index k = std::min<Eigen::Index>(8, n - 1);
  double total = 0.0;
  std::vector<double> row(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) row[j] = distances(i, j);
    // Index k in sorted order skips the zero self-distance.
    std::nth_element(row.begin(), row.begin() + k, row.end());
    total += row[k];
  }
  const double mean = total / static_cast<double>(n);
  return mean * mean;
}

SpectralData graph_laplacian_spectrum(const Eigen::MatrixXd& distances, const PointCloud& cloud,
                                      double bandwidth, int J) {
  const Eigen::Index n = distances.rows();
  if (!(bandwidth > 0.0)) throw std::invalid_argument("graph_laplacian_spectrum: bandwidth must be > 0");
  if (J < 0 || J >= n) throw std::invalid_argument("graph_laplacian_spectrum: need 0 <= J < n");
  if (distances.cols() != n || static_cast<std::size_t>(n) != cloud.size()) {
    throw std::invalid_argument("graph_laplacian_spectrum: distance matrix does not match cloud");
  }
  if (distances.maxCoeff() <= 0.0) {
    throw std::invalid_argument("graph_laplacian_spectrum: degenerate cloud (all points identical)");
  }

  Eigen::MatrixXd W = (-distances.array().square() / (4.0 * bandwidth)).exp().matrix();
  const Eigen::VectorXd q = W.rowwise().sum();
  const Eigen::VectorXd q_inv = q.cwiseInverse();
  W = q_inv.asDiagonal() * W * q_inv.asDiagonal();
  const Eigen::VectorXd deg = W.rowwise().sum();
  const Eigen::VectorXd deg_isqrt = deg.cwiseSqrt().cwiseInverse();
  Eigen::MatrixXd S = deg_isqrt.asDiagonal() * W * deg_isqrt.asDiagonal();
  S = 0.5 * (S + S.transpose());

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(S);
  if (es.info() != Eigen::Success) {
    throw std::runtime_error("graph_laplacian_spectrum: eigensolver failed");
  }

  const double total_deg = deg.sum();
  SpectralData sd;
  sd.eigenvalues.resize(J + 1);
  sd.eigfun.resize(J + 1, n);
  const Eigen::VectorXd scale = (total_deg * deg.cwiseInverse()).cwiseSqrt();
  for (int j = 0; j <= J; ++j) {
    const Eigen::Index col = n - 1 - j;
    sd.eigenvalues(j) = std::max(0.0, (1.0 - es.eigenvalues()(col)) / bandwidth);
    sd.eigfun.row(j) = es.eigenvectors().col(col).cwiseProduct(scale).transpose();
    canonicalize_sign(sd.eigfun.row(j));
  }
  sd.weights = deg / total_deg;
  sd.points = cloud;
  sd.provenance = "graph:eps=" + std::to_string(bandwidth);
  return sd;
}

SpectralData graph_laplacian_spectrum(const Space& space, const PointCloud& cloud,
                                      double bandwidth, int J) {
  return graph_laplacian_spectrum(pairwise_distances(space, cloud), cloud, bandwidth, J);
}

namespace {

// Bound on sum_{|l| > L} exp(-(delta - P l)^2 / (4t)) for |delta| <= P/2.
double gaussian_tail(double period, double time, int L) {
  const double a = period * (L + 0.5);
  const double g = std::exp(-a * a / (4.0 * time));
  const double integral = std::sqrt(kPi * time) / period * std::erfc(a / (2.0 * std::sqrt(time)));
  return 2.0 * (g + integral);
}

int truncation(double period, double time, double budget) {
  int L = 0;
  while (gaussian_tail(period, time, L) > budget) {
    ++L;
    if (L > 10'000'000) throw std::runtime_error("heat kernel truncation did not converge");
  }
  return L;
}

}  // namespace

TorusHeatKernel::TorusHeatKernel(const FlatTorus& t, double time, double tol)
    : torus_(t), time_(time) {
  if (!(time > 0.0)) throw std::invalid_argument("heat kernel: time must be > 0");
  if (!(tol > 0.0)) throw std::invalid_argument("heat kernel: tol must be > 0");
  const double p_small = kTwoPi * t.r();
  const double p_large = kTwoPi * t.R();
  // Each full axis sum is at most 1 + sqrt(4 pi t)/P.
  const double max_small = 1.0 + std::sqrt(4.0 * kPi * time) / p_small;
  const double max_large = 1.0 + std::sqrt(4.0 * kPi * time) / p_large;
  const double prefactor = 1.0 / (4.0 * kPi * time);
  l_small_ = truncation(p_small, time, 0.5 * tol / (prefactor * max_large));
  l_large_ = truncation(p_large, time, 0.5 * tol / (prefactor * max_small));
}

double TorusHeatKernel::axis_sum(double delta, double period, int terms) const {
  // Centre delta in [-P/2, P/2] so the tail bound applies.
  delta = std::remainder(delta, period);
  double sum = 0.0;
  for (int l = -terms; l <= terms; ++l) {
    const double x = delta - period * l;
    sum += std::exp(-x * x / (4.0 * time_));
  }
  return sum;
}

double TorusHeatKernel::operator()(Coord p, Coord q) const {
  const double du1 = torus_.r() * (p[0] - q[0]);
  const double du2 = torus_.R() * (p[1] - q[1]);
  const double s1 = axis_sum(du1, kTwoPi * torus_.r(), l_small_);
  const double s2 = axis_sum(du2, kTwoPi * torus_.R(), l_large_);
  return s1 * s2 / (4.0 * kPi * time_);
}

double heat_kernel_theta(const FlatTorus& t, Coord p, Coord q, double time, double tol) {
  return TorusHeatKernel(t, time, tol)(p, q);
}

double heat_kernel_spectral(const SpectralData& sd, std::size_t p, std::size_t q, double time) {
  if (!(time > 0.0)) throw std::invalid_argument("heat_kernel_spectral: time must be > 0");
  if (p >= sd.K() || q >= sd.K()) throw std::out_of_range("heat_kernel_spectral: index out of range");
  double sum = 0.0;
  for (Eigen::Index j = 0; j < sd.eigenvalues.size(); ++j) {
    sum += std::exp(-sd.eigenvalues(j) * time) * sd.eigfun(j, p) * sd.eigfun(j, q);
  }
  return sum;
}

Eigen::MatrixXd gram_matrix(const SpectralData& sd) {
  return sd.eigfun * sd.weights.asDiagonal() * sd.eigfun.transpose();
}

}  // namespace specrecon
