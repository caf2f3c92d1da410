#include "specrecon/diffusion_map.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "specrecon/errors.hpp"

namespace specrecon {

std::string to_string(KernelCase c) { return c == KernelCase::C1 ? "C1" : "C2"; }

KernelMatrix exp_kernel_matrix(const Eigen::MatrixXd& distances, double time) {
  if (!(time > 0.0)) throw std::invalid_argument("exp_kernel_matrix: time must be > 0");
  if (distances.rows() != distances.cols()) {
    throw std::invalid_argument("exp_kernel_matrix: distance matrix must be square");
  }
  if ((distances.array() < 0.0).any()) {
    throw std::invalid_argument("exp_kernel_matrix: negative distance entry");
  }
  const double pre = 1.0 / (4.0 * kPi * time);
  KernelMatrix k;
  k.time = time;
  k.values = pre * (-distances.array().square() / (4.0 * time)).exp().matrix();
  return k;
}

KernelMatrix heat_kernel_matrix(const FlatTorus& t, const PointCloud& cloud, double time,
                                double tol) {
  const TorusHeatKernel heat(t, time, tol);
  const auto n = static_cast<Eigen::Index>(cloud.size());
  KernelMatrix k;
  k.time = time;
  k.values.resize(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i; j < n; ++j) {
      const double v = heat(cloud.points[i], cloud.points[j]);
      k.values(i, j) = v;
      k.values(j, i) = v;
    }
  }
  return k;
}

Eigen::MatrixXd row_normalize(const KernelMatrix& k) {
  const Eigen::VectorXd sums = k.values.rowwise().sum();
  if ((sums.array() <= 0.0).any()) throw std::invalid_argument("row_normalize: zero row sum");
  return sums.cwiseInverse().asDiagonal() * k.values;
}

namespace {

void canonicalize_pair(Eigen::Ref<Eigen::VectorXd> v, Eigen::Ref<Eigen::VectorXd> w) {
  Eigen::Index best = 0;
  double mag = -1.0;
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (std::fabs(v(i)) > mag) {
      mag = std::fabs(v(i));
      best = i;
    }
  }
  if (v(best) < 0.0) {
    v = -v;
    w = -w;
  }
}

// Within runs of equal singular values, order factors lexicographically by
// their canonicalised left vectors.
void order_degenerate(SvdFactor& f) {
  const Eigen::Index r = f.rank();
  std::vector<Eigen::Index> order(static_cast<std::size_t>(r));
  std::iota(order.begin(), order.end(), 0);
  Eigen::Index start = 0;
  while (start < r) {
    Eigen::Index end = start + 1;
    const double tol = 1e-13 * std::max(f.singular_values(0), 1e-300);
    while (end < r && f.singular_values(start) - f.singular_values(end) <= tol) ++end;
    if (end - start > 1) {
      std::sort(order.begin() + start, order.begin() + end, [&](Eigen::Index a, Eigen::Index b) {
        for (Eigen::Index i = 0; i < f.left.rows(); ++i) {
          if (f.left(i, a) != f.left(i, b)) return f.left(i, a) > f.left(i, b);
        }
        return a < b;
      });
    }
    start = end;
  }
  SvdFactor out;
  out.singular_values.resize(r);
  out.left.resize(f.left.rows(), r);
  out.right.resize(f.right.rows(), r);
  for (Eigen::Index p = 0; p < r; ++p) {
    out.singular_values(p) = f.singular_values(order[p]);
    out.left.col(p) = f.left.col(order[p]);
    out.right.col(p) = f.right.col(order[p]);
  }
  f = std::move(out);
}

}  // namespace

SvdFactor svd_factor(const Eigen::MatrixXd& m, std::optional<Eigen::Index> rank) {
  if (!m.allFinite()) throw std::invalid_argument("svd_factor: non-finite entries");
  if (m.size() == 0) throw std::invalid_argument("svd_factor: empty matrix");
  Eigen::BDCSVD<Eigen::MatrixXd> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
  if (svd.info() != Eigen::Success) throw NumericalError("svd_factor: SVD failed");

  const Eigen::Index full = svd.singularValues().size();
  const Eigen::Index r = rank ? std::clamp<Eigen::Index>(*rank, 1, full) : full;
  SvdFactor f;
  f.singular_values = svd.singularValues().head(r);
  f.left = svd.matrixU().leftCols(r);
  f.right = svd.matrixV().leftCols(r);
  for (Eigen::Index p = 0; p < r; ++p) canonicalize_pair(f.left.col(p), f.right.col(p));
  order_degenerate(f);
  return f;
}

SvdFactor symmetric_factor(const KernelMatrix& k) {
  const Eigen::VectorXd deg = k.values.rowwise().sum();
  if ((deg.array() <= 0.0).any()) throw std::invalid_argument("symmetric_factor: zero row sum");
  const Eigen::VectorXd isq = deg.cwiseSqrt().cwiseInverse();
  Eigen::MatrixXd s = isq.asDiagonal() * k.values * isq.asDiagonal();
  s = 0.5 * (s + s.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(s);
  if (es.info() != Eigen::Success) throw NumericalError("symmetric_factor: eigensolver failed");

  const Eigen::Index n = s.rows();
  SvdFactor f;
  f.singular_values.resize(n);
  f.left.resize(n, n);
  f.right.resize(n, n);
  for (Eigen::Index p = 0; p < n; ++p) {
    const Eigen::Index col = n - 1 - p;
    f.singular_values(p) = es.eigenvalues()(col);
    f.left.col(p) = isq.cwiseProduct(es.eigenvectors().col(col));
    f.right.col(p) = deg.cwiseSqrt().cwiseProduct(es.eigenvectors().col(col));
    canonicalize_pair(f.left.col(p), f.right.col(p));
  }
  return f;
}

EmbeddingResult eigenfunction_map(const SvdFactor& f, int K, int J, KernelCase source) {
  if (K < 1 || J < 1 || K + J - 1 > f.rank()) {
    throw std::out_of_range("eigenfunction_map: factors K..K+J-1 exceed the available rank");
  }
  EmbeddingResult e;
  e.coords = f.left.middleCols(K - 1, J);
  e.start = K;
  e.source = source;
  return e;
}

CircleReport circle_diagnostics(const EmbeddingResult& e, const std::vector<double>& reference) {
  if (e.coords.cols() != 2) throw std::invalid_argument("circle_diagnostics: need J = 2");
  const Eigen::Index n = e.coords.rows();
  if (n < 3) throw std::invalid_argument("circle_diagnostics: fewer than 3 points");
  if (static_cast<Eigen::Index>(reference.size()) != n) {
    throw std::invalid_argument("circle_diagnostics: reference ordering size mismatch");
  }

  // Kasa fit: x^2 + y^2 + D x + E y + F = 0 in least squares.
  Eigen::MatrixXd A(n, 3);
  Eigen::VectorXd b(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double x = e.coords(i, 0);
    const double y = e.coords(i, 1);
    A(i, 0) = x;
    A(i, 1) = y;
    A(i, 2) = 1.0;
    b(i) = -(x * x + y * y);
  }
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(A);
  qr.setThreshold(1e-10);
  if (qr.rank() < 3) throw NumericalError("circle_diagnostics: degenerate (collinear) point set");
  const Eigen::Vector3d sol = qr.solve(b);

  CircleReport rep;
  rep.center_x = -0.5 * sol(0);
  rep.center_y = -0.5 * sol(1);
  const double r2 = rep.center_x * rep.center_x + rep.center_y * rep.center_y - sol(2);
  if (!(r2 > 0.0)) throw NumericalError("circle_diagnostics: degenerate fit (non-positive radius)");
  rep.radius = std::sqrt(r2);

  double ss = 0.0;
  std::vector<double> angle(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) {
    const double dx = e.coords(i, 0) - rep.center_x;
    const double dy = e.coords(i, 1) - rep.center_y;
    const double dev = std::hypot(dx, dy) - rep.radius;
    ss += dev * dev;
    angle[i] = std::atan2(dy, dx);
  }
  rep.radial_rms_relative = std::sqrt(ss / static_cast<double>(n)) / rep.radius;

  std::vector<std::size_t> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return reference[a] < reference[b]; });
  std::vector<double> steps(order.size());
  double net = 0.0;
  for (std::size_t k = 0; k < order.size(); ++k) {
    const double a = angle[order[k]];
    const double b = angle[order[(k + 1) % order.size()]];
    steps[k] = std::remainder(b - a, kTwoPi);
    net += steps[k];
  }
  const double orientation = net >= 0.0 ? 1.0 : -1.0;
  std::size_t inversions = 0;
  for (double s : steps) {
    if (s * orientation < 0.0) ++inversions;
  }
  rep.inversion_fraction = static_cast<double>(inversions) / static_cast<double>(n);
  return rep;
}

}  // namespace specrecon
