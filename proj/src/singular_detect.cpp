#include "specrecon/singular_detect.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "specrecon/parallel.hpp"

namespace specrecon {

double n_set_measure(const MeasureOracle& oracle, const CutProbe& probe) {
  const double ab = oracle.union_measure({{probe.y, probe.s + probe.eps}, {probe.x, probe.rho + probe.s}});
  const double b = oracle.union_measure({{probe.x, probe.rho + probe.s}});
  return std::clamp(ab - b, 0.0, 1.0);
}

namespace {

struct PairOutcome {
  bool emitted = false;
  CutRecord record;
  std::string note;
};

PairOutcome scan_pair(const MeasureOracle& oracle, const Eigen::MatrixXd& dmat, std::size_t x,
                      std::size_t y, double eta, double eps, double tau, double threshold) {
  PairOutcome out;
  const auto n = static_cast<std::size_t>(dmat.rows());
  const double rho = dmat(x, y);
  std::ostringstream note;
  note << "pair (" << x << "," << y << "): ";

  // Midpoint proxy other than x and y: both half-distance errors within eta,
  // smallest worst error.
  std::size_t mid = n;
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t m = 0; m < n; ++m) {
    if (m == x || m == y) continue;
    const double ex = std::fabs(dmat(m, x) - 0.5 * rho);
    const double ey = std::fabs(dmat(m, y) - 0.5 * rho);
    if (ex <= eta && ey <= eta && std::max(ex, ey) < best) {
      best = std::max(ex, ey);
      mid = m;
    }
  }
  if (mid == n) {
    note << "no midpoint proxy within eta";
    out.note = note.str();
    return out;
  }

  const double D = oracle.diameter();
  std::vector<double> grid;
  // Past rho + s = D the ball around U_x is the whole space and the test is void.
  for (int k = 1; rho + k * eta < D; ++k) grid.push_back(k * eta);
  std::size_t hit = grid.size();
  std::vector<double> values(grid.size());
  for (std::size_t k = 0; k < grid.size(); ++k) {
    values[k] = n_set_measure(oracle, {x, y, rho, grid[k], eps});
    if (hit == grid.size() && values[k] < threshold) hit = k;
  }
  if (hit == grid.size()) {
    note << "no s on the grid below the diameter passes the escape test";
    out.note = note.str();
    return out;
  }
  for (std::size_t k = hit + 1; k < grid.size(); ++k) {
    if (values[k] > threshold + 0.02) {
      note << "scan not monotone past s=" << grid[hit] << " (measure " << values[k] << " at s="
           << grid[k] << ")";
      out.note = note.str();
      return out;
    }
  }
  const double s = grid[hit];
  const double second = n_set_measure(oracle, {mid, y, 0.5 * rho, s + 0.5 * tau, eps});
  if (!(second < threshold)) {
    note << "midpoint test fails at s=" << s << " via midpoint " << mid << " (measure " << second << ")";
    out.note = note.str();
    return out;
  }
  out.emitted = true;
  out.record = {x, y, mid, rho + s, s};
  return out;
}

}  // namespace

CutData scan_cut_data(const MeasureOracle& oracle, const Eigen::MatrixXd& dmat, double c_star,
                      int dimY, const ReconParams& rp) {
  const auto n = static_cast<std::size_t>(dmat.rows());
  if (dmat.cols() != dmat.rows() || n != oracle.net().size()) {
    throw std::invalid_argument("scan_cut_data: distance matrix does not match the net");
  }
  const double eta = rp.eta;
  const double eps = rp.probe_eps > 0.0 ? rp.probe_eps : eta;
  const double tau = rp.tau > 0.0 ? rp.tau : eta;
  const double threshold = 0.5 * c_star * std::pow(eps, dimY);

  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  CutData cut;
  for (std::size_t x = 0; x < n; ++x) {
    for (std::size_t y = 0; y < n; ++y) {
      if (x == y) continue;
      if (dmat(x, y) < eta) {
        std::ostringstream note;
        note << "pair (" << x << "," << y << "): rho " << dmat(x, y) << " below eta";
        cut.diagnostics.push_back(note.str());
        continue;
      }
      pairs.emplace_back(x, y);
    }
  }
  std::vector<PairOutcome> outcomes(pairs.size());
  parallel_for(pairs.size(), rp.threads, [&](std::size_t p) {
    outcomes[p] = scan_pair(oracle, dmat, pairs[p].first, pairs[p].second, eta, eps, tau, threshold);
  });
  for (auto& o : outcomes) {
    if (o.emitted) cut.records.push_back(o.record);
    else cut.diagnostics.push_back(std::move(o.note));
  }
  return cut;
}

std::vector<SliceIndex> select_singular_slices(const RStar& rstar, const CutData& cut,
                                               const ReconParams& rp) {
  std::vector<SliceIndex> out;
  const double tol = 3.0 * rp.sigma;
  for (const SliceFunction& f : rstar.slices) {
    for (const CutRecord& r : cut.records) {
      if (std::fabs(f.value(r.x) - r.rho_plus_s) < tol && std::fabs(f.value(r.y) - r.s) < tol) {
        out.push_back(f.index);
        break;
      }
    }
  }
  return out;
}

namespace {

int linf(const std::vector<int>& a, const std::vector<int>& b) {
  int m = 0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

}  // namespace

SingularSelection classify_net(const RStar& rstar, const std::vector<SliceIndex>& s_star,
                               const Eigen::MatrixXd& dmat, const ReconParams& rp) {
  if (rstar.slices.empty()) throw std::invalid_argument("classify_net: empty R*");
  const auto n = static_cast<std::size_t>(dmat.rows());
  const double bound = 3.0 * rp.C_s * std::sqrt(rp.sigma);
  SingularSelection sel;
  sel.s_star = s_star;
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<int> target(n);
    for (std::size_t k = 0; k < n; ++k) {
      target[k] = static_cast<int>(std::floor(dmat(i, k) / rp.eta)) + 1;
    }
    // rstar.slices is lexicographic, so the first minimiser is the tie-break.
    const SliceFunction* nearest = &rstar.slices.front();
    int best = std::numeric_limits<int>::max();
    for (const SliceFunction& f : rstar.slices) {
      const int d = linf(f.index.beta, target);
      if (d < best) {
        best = d;
        nearest = &f;
      }
    }
    sel.assigned.push_back(nearest->index);
    bool far = true;
    for (const SliceIndex& s : s_star) {
      if (!(rp.eta * linf(nearest->index.beta, s.beta) > bound)) {
        far = false;
        break;
      }
    }
    (far ? sel.far_indices : sel.near_indices).push_back(i);
  }
  return sel;
}

}  // namespace specrecon
