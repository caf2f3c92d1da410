#include "specrecon/wave_control.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "specrecon/errors.hpp"
#include "specrecon/quadrature.hpp"

namespace specrecon {

namespace {

double sinc(double x) {
  if (std::fabs(x) < 1e-4) {
    const double x2 = x * x;
    return 1.0 - x2 / 6.0 + x2 * x2 / 120.0;
  }
  return std::sin(x) / x;
}

Eigen::VectorXd sqrt_eigenvalues(const SpectralData& sd) {
  return sd.eigenvalues.cwiseMax(0.0).cwiseSqrt();
}

Eigen::MatrixXd time_matrix(const Eigen::VectorXd& sl, double alpha, int time_grid) {
  const Eigen::Index n = sl.size();
  Eigen::MatrixXd T(n, n);
  if (time_grid <= 0) {
    for (Eigen::Index j = 0; j < n; ++j) {
      for (Eigen::Index l = j; l < n; ++l) T(j, l) = T(l, j) = time_factor(sl(j), sl(l), alpha);
    }
    return T;
  }
  const int nodes = std::max(8, static_cast<int>(std::ceil(time_grid * 2.0 * alpha)));
  std::vector<double> x, w;
  gauss_legendre(nodes, x, w);
  Eigen::MatrixXd C(n, nodes);
  Eigen::VectorXd wt(nodes);
  for (int q = 0; q < nodes; ++q) {
    const double t = alpha * x[q];
    wt(q) = alpha * w[q];
    for (Eigen::Index j = 0; j < n; ++j) C(j, q) = std::cos(sl(j) * t);
  }
  return C * wt.asDiagonal() * C.transpose();
}

}  // namespace

double wave_eval(const SpectralData& sd, const FourierCoeffs& v, std::size_t k, double t) {
  if (k >= sd.K()) throw std::out_of_range("wave_eval: point index out of range");
  if (v.size() != sd.eigenvalues.size()) throw std::invalid_argument("wave_eval: length mismatch");
  double s = 0.0;
  for (Eigen::Index j = 0; j < v.size(); ++j) {
    s += v(j) * std::cos(std::sqrt(std::max(sd.eigenvalues(j), 0.0)) * t) *
         sd.eigfun(j, static_cast<Eigen::Index>(k));
  }
  return s;
}

double h2_norm_sq(const SpectralData& sd, const FourierCoeffs& v) {
  if (v.size() != sd.eigenvalues.size()) throw std::invalid_argument("h2_norm_sq: length mismatch");
  return ((1.0 + sd.eigenvalues.array().square()) * v.array().square()).sum();
}

double time_factor(double a, double b, double alpha) {
  return alpha * (sinc((a - b) * alpha) + sinc((a + b) * alpha));
}

Eigen::MatrixXd patch_gram(const SpectralData& sd, std::span<const std::size_t> patch) {
  if (patch.empty()) throw std::invalid_argument("patch_gram: empty patch");
  const Eigen::Index n = sd.eigenvalues.size();
  Eigen::MatrixXd P(n, static_cast<Eigen::Index>(patch.size()));
  for (std::size_t i = 0; i < patch.size(); ++i) {
    if (patch[i] >= sd.K()) throw std::out_of_range("patch_gram: point index out of range");
    const auto k = static_cast<Eigen::Index>(patch[i]);
    P.col(static_cast<Eigen::Index>(i)) = sd.eigfun.col(k) * std::sqrt(sd.weights(k));
  }
  return P * P.transpose();
}

Eigen::MatrixXd observation_gram(const SpectralData& sd, const InfluenceSpec& spec, int time_grid) {
  if (spec.patches.empty()) throw std::invalid_argument("observation_gram: no anchors");
  if (spec.patches.size() != spec.radii.size()) {
    throw std::invalid_argument("observation_gram: one radius per patch required");
  }
  const Eigen::VectorXd sl = sqrt_eigenvalues(sd);
  const Eigen::Index n = sl.size();
  Eigen::MatrixXd Q = Eigen::MatrixXd::Zero(n, n);
  for (std::size_t k = 0; k < spec.patches.size(); ++k) {
    if (!(spec.radii[k] > 0.0)) throw std::invalid_argument("observation_gram: radius must be > 0");
    Q += patch_gram(sd, spec.patches[k]).cwiseProduct(time_matrix(sl, spec.radii[k], time_grid));
  }
  return Q;
}

namespace {

struct InnerSolve {
  Eigen::VectorXd c;
  double mu_h = 0.0;
  double h = 0.0;
  double q = 0.0;
};

// For fixed mu_q, the smallest mu_h >= 0 meeting the H constraint. With
// A = H^-1/2 (I + mu_q Q) H^-1/2 = V diag(L) V^T and z = V^T H^-1/2 a,
// c^T H c = sum z_i^2 / (L_i + mu_h)^2.
InnerSolve solve_inner(const Eigen::MatrixXd& Q, const Eigen::VectorXd& hdiag,
                       const Eigen::VectorXd& a, double E1sq, double mu_q) {
  const Eigen::VectorXd ih = hdiag.cwiseSqrt().cwiseInverse();
  const Eigen::Index n = a.size();
  Eigen::MatrixXd A = mu_q * (ih.asDiagonal() * Q * ih.asDiagonal());
  A.diagonal() += ih.cwiseAbs2();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(A);
  if (es.info() != Eigen::Success) throw NumericalError("masked_projection: eigensolver failed");
  const Eigen::VectorXd L = es.eigenvalues().cwiseMax(std::numeric_limits<double>::min());
  const Eigen::VectorXd z = es.eigenvectors().transpose() * ih.cwiseProduct(a);

  auto hval = [&](double mu) { return (z.array() / (L.array() + mu)).square().sum(); };
  double mu = 0.0;
  if (hval(0.0) > E1sq) {
    double lo = 0.0;
    double hi = z.norm() / std::sqrt(E1sq);
    for (int it = 0; it < 200 && hi - lo > 1e-16 * hi; ++it) {
      const double mid = 0.5 * (lo + hi);
      if (hval(mid) > E1sq) lo = mid; else hi = mid;
    }
    mu = hi;
  }
  InnerSolve s;
  s.mu_h = mu;
  Eigen::VectorXd y(n);
  for (Eigen::Index i = 0; i < n; ++i) y(i) = z(i) / (L(i) + mu);
  s.c = ih.cwiseProduct(es.eigenvectors() * y);
  s.h = (hdiag.array() * s.c.array().square()).sum();
  s.q = s.c.dot(Q * s.c);
  return s;
}

}  // namespace

ProjectionResult masked_projection(const SpectralData& sd, const Eigen::MatrixXd& Q,
                                   const FourierCoeffs& a, const ConstraintParams& cp) {
  const Eigen::Index n = sd.eigenvalues.size();
  if (a.size() != n || Q.rows() != n || Q.cols() != n) {
    throw std::invalid_argument("masked_projection: dimension mismatch");
  }
  if (!a.allFinite()) throw std::invalid_argument("masked_projection: non-finite coefficients");
  if (!(cp.eps1 > 0.0)) throw std::invalid_argument("masked_projection: eps1 must be > 0");

  const Eigen::VectorXd hdiag = 1.0 + sd.eigenvalues.array().square();
  const double ha = (hdiag.array() * a.array().square()).sum();
  const double E1 = cp.E1 > 0.0 ? cp.E1 : 10.0 * std::sqrt(ha);
  const double E1sq = E1 * E1;
  const double e1sq = cp.eps1 * cp.eps1;

  ProjectionResult r;
  if (ha == 0.0 || (ha <= E1sq && a.dot(Q * a) <= e1sq)) {
    r.c = a;
    r.b = FourierCoeffs::Zero(n);
    return r;
  }

  if (ha <= E1sq) {
    // Try mu_h = 0 first. With Q = V T V^T (T tridiagonal) and z = V^T a,
    // y(mu) = (I + mu T)^-1 z and c^T Q c = y^T T y, decreasing in mu.
    const Eigen::Tridiagonalization<Eigen::MatrixXd> tri(Q);
    const Eigen::VectorXd d = tri.diagonal();
    const Eigen::VectorXd e = tri.subDiagonal();
    const Eigen::VectorXd z = tri.matrixQ().transpose() * a;
    Eigen::VectorXd y(n), piv(n);
    bool definite = true;
    auto solve = [&](double mu) {
      // LDL^T sweep for the SPD tridiagonal I + mu T.
      piv(0) = 1.0 + mu * d(0);
      y(0) = z(0);
      for (Eigen::Index i = 1; i < n; ++i) {
        const double l = mu * e(i - 1) / piv(i - 1);
        piv(i) = 1.0 + mu * d(i) - l * mu * e(i - 1);
        if (!(piv(i) > 0.0)) definite = false;
        y(i) = z(i) - l * y(i - 1);
      }
      y(n - 1) /= piv(n - 1);
      for (Eigen::Index i = n - 2; i >= 0; --i) y(i) = (y(i) - mu * e(i) * y(i + 1)) / piv(i);
    };
    auto qval = [&](double mu) {
      solve(mu);
      double q = d(0) * y(0) * y(0);
      for (Eigen::Index i = 1; i < n; ++i) q += d(i) * y(i) * y(i) + 2.0 * e(i - 1) * y(i) * y(i - 1);
      return std::max(q, 0.0);
    };
    double lo = 0.0;
    double hi = 1.0;
    while (definite && qval(hi) > e1sq) {
      lo = hi;
      hi *= 16.0;
      if (!std::isfinite(hi)) throw NumericalError("masked_projection: observation constraint cannot be met");
    }
    for (int it = 0; definite && it < cp.max_iter && hi - lo > 1e-15 * hi; ++it) {
      const double mid = 0.5 * (lo + hi);
      if (qval(mid) > e1sq) lo = mid; else hi = mid;
    }
    // Rounding can make T slightly indefinite; the general solver clamps.
    const double qc = qval(hi);
    const Eigen::VectorXd c = tri.matrixQ() * y;
    const double hc = (hdiag.array() * c.array().square()).sum();
    if (definite && hc <= E1sq && c.allFinite()) {
      r.c = c;
      r.b = a - c;
      r.mu_q = hi;
      r.kkt_residual = std::fabs(qc - e1sq) / e1sq;
      if (!(r.kkt_residual < 1e-6)) {
        throw NumericalError("masked_projection: multiplier search did not converge");
      }
      return r;
    }
  }

  InnerSolve best = solve_inner(Q, hdiag, a, E1sq, 0.0);
  double mu_q = 0.0;
  if (best.q > e1sq) {
    // c^T Q c along mu_h*(mu_q) is nonincreasing in mu_q (concave dual);
    // bracket on a log scale, then Illinois regula falsi on log q.
    double lo = 0.0;
    double hi = 1.0;
    InnerSolve shi = solve_inner(Q, hdiag, a, E1sq, hi);
    int it = 0;
    while (shi.q > e1sq) {
      lo = hi;
      hi *= 16.0;
      if (++it > cp.max_iter || !std::isfinite(hi)) {
        throw NumericalError("masked_projection: observation constraint cannot be met");
      }
      shi = solve_inner(Q, hdiag, a, E1sq, hi);
    }
    if (lo == 0.0) lo = hi / 1024.0;
    InnerSolve slo = solve_inner(Q, hdiag, a, E1sq, lo);
    while (slo.q <= e1sq && lo > 1e-300) {
      hi = lo;
      shi = slo;
      lo /= 1024.0;
      slo = solve_inner(Q, hdiag, a, E1sq, lo);
    }
    double xl = std::log(lo), xh = std::log(hi);
    double fl = std::log(slo.q / e1sq), fh = std::log(shi.q / e1sq);
    int side = 0;
    best = shi;
    mu_q = hi;
    for (it = 0; it < cp.max_iter; ++it) {
      if (std::fabs(best.q - e1sq) <= 1e-10 * e1sq || xh - xl < 1e-15 * std::max(1.0, std::fabs(xh))) {
        break;
      }
      double x = (fh - fl) != 0.0 ? xh - fh * (xh - xl) / (fh - fl) : 0.5 * (xl + xh);
      if (!(x > xl && x < xh)) x = 0.5 * (xl + xh);
      const InnerSolve s = solve_inner(Q, hdiag, a, E1sq, std::exp(x));
      const double f = std::log(s.q / e1sq);
      if (f > 0.0) {
        xl = x;
        fl = f;
        if (side == -1) fh *= 0.5;
        side = -1;
      } else {
        xh = x;
        fh = f;
        best = s;
        mu_q = std::exp(x);
        if (side == 1) fl *= 0.5;
        side = 1;
      }
    }
  }

  double res_h = best.mu_h > 0.0 ? std::fabs(best.h - E1sq) / E1sq : std::max(0.0, best.h - E1sq) / E1sq;
  double res_q = mu_q > 0.0 ? std::fabs(best.q - e1sq) / e1sq : std::max(0.0, best.q - e1sq) / e1sq;
  r.kkt_residual = std::max(res_h, res_q);
  if (!(r.kkt_residual < 1e-6) || !best.c.allFinite()) {
    throw NumericalError("masked_projection: multiplier search did not converge (residual " +
                         std::to_string(r.kkt_residual) + ")");
  }
  r.c = best.c;
  r.b = a - best.c;
  r.mu_h = best.mu_h;
  r.mu_q = mu_q;
  return r;
}

ProjectionResult masked_projection(const SpectralData& sd, const InfluenceSpec& spec,
                                   const FourierCoeffs& a, const ConstraintParams& cp) {
  return masked_projection(sd, observation_gram(sd, spec, cp.time_grid), a, cp);
}

namespace {

double measure_from_gram(const SpectralData& sd, const Eigen::MatrixXd& Q,
                         const ConstraintParams& cp) {
  FourierCoeffs e0 = FourierCoeffs::Zero(sd.eigenvalues.size());
  e0(0) = 1.0;
  const ProjectionResult r = masked_projection(sd, Q, e0, cp);
  return std::clamp(r.b(0), 0.0, 1.0);
}

}  // namespace

double measure_estimate(const SpectralData& sd, const InfluenceSpec& spec,
                        const ConstraintParams& cp) {
  return measure_from_gram(sd, observation_gram(sd, spec, cp.time_grid), cp);
}

MeasureOracle::MeasureOracle(const SpectralData& sd, const NetWithPatches& net, double diameter,
                             ConstraintParams cp)
    : sd_(sd), net_(net), diameter_(diameter), cp_(cp), sqrt_lambda_(sqrt_eigenvalues(sd)) {
  if (net.size() == 0) throw std::invalid_argument("MeasureOracle: empty net");
  grams_.reserve(net.size());
  for (const auto& p : net.patches) grams_.push_back(patch_gram(sd, p));
}

const Eigen::MatrixXd& MeasureOracle::time_matrix_for(double radius) const {
  {
    std::lock_guard<std::mutex> lock(mutex_);
    if (auto it = time_cache_.find(radius); it != time_cache_.end()) return it->second;
  }
  Eigen::MatrixXd T = time_matrix(sqrt_lambda_, radius, cp_.time_grid);
  std::lock_guard<std::mutex> lock(mutex_);
  // std::map nodes are stable, so the reference outlives later insertions.
  return time_cache_.emplace(radius, std::move(T)).first->second;
}

std::size_t MeasureOracle::cache_size() const {
  std::lock_guard<std::mutex> lock(mutex_);
  return cache_.size();
}

double MeasureOracle::union_measure(std::vector<std::pair<std::size_t, double>> terms) const {
  std::vector<std::pair<std::size_t, double>> key;
  for (auto [k, radius] : terms) {
    if (k >= grams_.size()) throw std::out_of_range("union_measure: anchor index out of range");
    if (radius <= 0.0) continue;
    if (radius >= diameter_) return 1.0;
    key.emplace_back(k, radius);
  }
  if (key.empty()) return 0.0;
  std::sort(key.begin(), key.end());
  // Nested neighbourhoods of one patch: only the largest radius matters.
  std::vector<std::pair<std::size_t, double>> reduced;
  for (const auto& kv : key) {
    if (!reduced.empty() && reduced.back().first == kv.first) {
      reduced.back().second = std::max(reduced.back().second, kv.second);
    } else {
      reduced.push_back(kv);
    }
  }
  {
    std::lock_guard<std::mutex> lock(mutex_);
    if (auto it = cache_.find(reduced); it != cache_.end()) return it->second;
  }
  const Eigen::Index n = sqrt_lambda_.size();
  Eigen::MatrixXd Q = Eigen::MatrixXd::Zero(n, n);
  for (auto [k, radius] : reduced) Q += grams_[k].cwiseProduct(time_matrix_for(radius));
  const double m = measure_from_gram(sd_, Q, cp_);
  std::lock_guard<std::mutex> lock(mutex_);
  cache_.emplace(std::move(reduced), m);
  return m;
}

double MeasureOracle::slice_measure(std::span<const int> beta, double eta,
                                    std::size_t max_active) const {
  if (beta.size() != net_.size()) throw std::invalid_argument("slice_measure: beta length != net size");
  if (!(eta > 0.0)) throw std::invalid_argument("slice_measure: eta must be > 0");
  std::vector<std::size_t> active;
  for (std::size_t i = 0; i < beta.size(); ++i) {
    if (beta[i] < 0) throw std::invalid_argument("slice_measure: negative beta entry");
    if (beta[i] > 0) active.push_back(i);
  }
  if (active.empty()) return 1.0;
  if (active.size() > max_active) {
    throw NumericalError("slice_measure: " + std::to_string(active.size()) +
                         " active anchors exceed the cap of " + std::to_string(max_active));
  }
  // mu(cap_i (B_i \ C_i)) = (-1)^(N+1) sum_{sigma in {B,C}^N} (-1)^{#C} mu(cup_i D_i^sigma)
  const std::size_t N = active.size();
  double total = 0.0;
  std::vector<std::pair<std::size_t, double>> terms(N);
  for (std::size_t mask = 0; mask < (std::size_t{1} << N); ++mask) {
    int ncut = 0;
    for (std::size_t i = 0; i < N; ++i) {
      const bool inner = (mask >> i) & 1u;
      ncut += inner;
      const double outer_r = beta[active[i]] * eta;
      terms[i] = {active[i], inner ? outer_r - 2.0 * eta : outer_r};
    }
    const double m = union_measure(terms);
    total += (ncut % 2 == 0 ? 1.0 : -1.0) * m;
  }
  return (N % 2 == 1 ? 1.0 : -1.0) * total;
}

double slice_measure(const SpectralData& sd, const NetWithPatches& net, std::span<const int> beta,
                     double eta, double diameter, const ConstraintParams& cp,
                     std::size_t max_active) {
  return MeasureOracle(sd, net, diameter, cp).slice_measure(beta, eta, max_active);
}

}  // namespace specrecon
