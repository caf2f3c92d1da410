#include "specrecon/finite_metric.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "specrecon/parallel.hpp"
#include "specrecon/rng.hpp"

namespace specrecon {

namespace {

void check_input(const Eigen::MatrixXd& d, const char* who) {
  if (d.rows() != d.cols()) throw std::invalid_argument(std::string(who) + ": matrix not square");
  for (Eigen::Index i = 0; i < d.rows(); ++i) {
    if (d(i, i) != 0.0) throw std::invalid_argument(std::string(who) + ": nonzero diagonal");
    for (Eigen::Index k = 0; k < d.cols(); ++k) {
      if (!std::isfinite(d(i, k))) throw std::invalid_argument(std::string(who) + ": non-finite entry");
      if (d(i, k) < 0.0) throw std::invalid_argument(std::string(who) + ": negative entry");
      if (d(i, k) != d(k, i)) throw std::invalid_argument(std::string(who) + ": matrix not symmetric");
    }
  }
}

// Relax until no triangle is violated in floating point. Floyd-Warshall
// alone can leave one-ulp violations because path sums round differently.
void close(Eigen::MatrixXd& d) {
  const Eigen::Index n = d.rows();
  for (Eigen::Index j = 0; j < n; ++j) {
    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index k = i + 1; k < n; ++k) {
        const double via = d(i, j) + d(j, k);
        if (via < d(i, k)) d(i, k) = d(k, i) = via;
      }
    }
  }
  bool changed = true;
  while (changed) {
    changed = false;
    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index k = i + 1; k < n; ++k) {
        for (Eigen::Index j = 0; j < n; ++j) {
          const double via = d(i, j) + d(j, k);
          if (via < d(i, k)) {
            d(i, k) = d(k, i) = via;
            changed = true;
          }
        }
      }
    }
  }
}

}  // namespace

bool is_metric(const Eigen::MatrixXd& d) {
  if (d.rows() != d.cols()) return false;
  const Eigen::Index n = d.rows();
  for (Eigen::Index i = 0; i < n; ++i) {
    if (d(i, i) != 0.0) return false;
    for (Eigen::Index k = 0; k < n; ++k) {
      if (!(d(i, k) >= 0.0) || d(i, k) != d(k, i)) return false;
      for (Eigen::Index j = 0; j < n; ++j) {
        if (d(i, k) > d(i, j) + d(j, k)) return false;
      }
    }
  }
  return true;
}

RepairResult repair_metric(const Eigen::MatrixXd& dhat, RepairBackend backend, int max_sweeps) {
  check_input(dhat, "repair_metric");
  RepairResult out;
  Eigen::MatrixXd d = dhat;
  const Eigen::Index n = d.rows();
  if (backend == RepairBackend::Projection) {
    for (int sweep = 0; sweep < max_sweeps; ++sweep) {
      double worst = 0.0;
      for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index k = i + 1; k < n; ++k) {
          for (Eigen::Index j = 0; j < n; ++j) {
            if (j == i || j == k) continue;
            // Same comparison as is_metric, so exact metrics are left untouched.
            if (!(d(i, k) > d(i, j) + d(j, k))) continue;
            const double v = d(i, k) - (d(i, j) + d(j, k));
            worst = std::max(worst, v);
            const double step = v / 3.0;
            d(i, k) = d(k, i) = d(i, k) - step;
            d(i, j) = d(j, i) = d(i, j) + step;
            d(j, k) = d(k, j) = d(j, k) + step;
          }
        }
      }
      out.sweeps = sweep + 1;
      if (worst < 1e-12) break;
    }
    d = d.cwiseMax(0.0);
    d.diagonal().setZero();
  }
  close(d);
  out.max_deviation = n == 0 ? 0.0 : (d - dhat).cwiseAbs().maxCoeff();
  out.metric.d = std::move(d);
  return out;
}

double distortion(const FiniteMetricSpace& a, const FiniteMetricSpace& b, const Correspondence& r) {
  double worst = 0.0;
  for (std::size_t p = 0; p < r.size(); ++p) {
    for (std::size_t q = p + 1; q < r.size(); ++q) {
      const double v = std::fabs(a.d(r[p].first, r[q].first) - b.d(r[p].second, r[q].second));
      worst = std::max(worst, v);
    }
  }
  return worst;
}

namespace {

Correspondence canonical(Correspondence r) {
  std::sort(r.begin(), r.end());
  r.erase(std::unique(r.begin(), r.end()), r.end());
  return r;
}

void check_nonempty(const FiniteMetricSpace& a, const FiniteMetricSpace& b, const char* who) {
  if (a.size() == 0 || b.size() == 0) throw std::invalid_argument(std::string(who) + ": empty space");
}

// Correspondence from a map f: a -> b (first n slots) and g: b -> a (last m
// slots), stored as pairs (a index, b index).
class Assignment {
 public:
  Assignment(const FiniteMetricSpace& a, const FiniteMetricSpace& b) : a_(a), b_(b) {
    pairs_.resize(a.size() + b.size());
    for (std::size_t i = 0; i < a.size(); ++i) pairs_[i] = {i, 0};
    for (std::size_t j = 0; j < b.size(); ++j) pairs_[a.size() + j] = {0, j};
  }

  std::size_t slots() const { return pairs_.size(); }
  bool is_a_slot(std::size_t k) const { return k < a_.size(); }
  std::size_t choices(std::size_t k) const { return is_a_slot(k) ? b_.size() : a_.size(); }
  void set(std::size_t k, std::size_t c) {
    if (is_a_slot(k)) pairs_[k].second = c;
    else pairs_[k].first = c;
  }
  std::size_t get(std::size_t k) const { return is_a_slot(k) ? pairs_[k].second : pairs_[k].first; }

  double cost(const std::pair<std::size_t, std::size_t>& p,
              const std::pair<std::size_t, std::size_t>& q) const {
    return std::fabs(a_.d(p.first, q.first) - b_.d(p.second, q.second));
  }

  // Distortion among all slots except `skip`.
  double without(std::size_t skip) const {
    double worst = 0.0;
    for (std::size_t p = 0; p < pairs_.size(); ++p) {
      if (p == skip) continue;
      for (std::size_t q = p + 1; q < pairs_.size(); ++q) {
        if (q != skip) worst = std::max(worst, cost(pairs_[p], pairs_[q]));
      }
    }
    return worst;
  }

  // Max cost of slot k set to choice c against the other slots.
  double against(std::size_t k, std::size_t c, std::size_t upto) const {
    std::pair<std::size_t, std::size_t> p = pairs_[k];
    if (is_a_slot(k)) p.second = c;
    else p.first = c;
    double worst = 0.0;
    for (std::size_t q = 0; q < upto; ++q) {
      if (q != k) worst = std::max(worst, cost(p, pairs_[q]));
    }
    return worst;
  }

  double total() const { return without(pairs_.size()); }
  const Correspondence& pairs() const { return pairs_; }

 private:
  const FiniteMetricSpace& a_;
  const FiniteMetricSpace& b_;
  Correspondence pairs_;
};

struct Search {
  double best;
  Correspondence witness;
};

void branch(Assignment& asg, std::size_t k, double current, Search& s) {
  if (current >= s.best) return;
  if (k == asg.slots()) {
    s.best = current;
    s.witness = asg.pairs();
    return;
  }
  const std::size_t nc = asg.choices(k);
  std::vector<std::pair<double, std::size_t>> order(nc);
  for (std::size_t c = 0; c < nc; ++c) order[c] = {asg.against(k, c, k), c};
  std::stable_sort(order.begin(), order.end());
  for (const auto& [inc, c] : order) {
    const double next = std::max(current, inc);
    if (next >= s.best) break;
    asg.set(k, c);
    branch(asg, k + 1, next, s);
  }
}

// One oriented heuristic run: greedy insertion in a shuffled order, then
// single-slot moves while the distortion strictly drops.
Search heuristic_run(const FiniteMetricSpace& a, const FiniteMetricSpace& b, SplitMix64& rng,
                     bool identity_seed) {
  Assignment asg(a, b);
  const std::size_t n = asg.slots();
  if (identity_seed) {
    for (std::size_t k = 0; k < n; ++k) {
      const std::size_t idx = asg.is_a_slot(k) ? k : k - a.size();
      asg.set(k, idx % asg.choices(k));
    }
  } else {
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    for (std::size_t i = n; i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);
    // Slots placed so far are moved to the front so `against` sees only them.
    std::vector<bool> placed(n, false);
    for (std::size_t k : order) {
      double best = std::numeric_limits<double>::infinity();
      std::size_t pick = 0;
      for (std::size_t c = 0; c < asg.choices(k); ++c) {
        std::pair<std::size_t, std::size_t> p = asg.pairs()[k];
        if (asg.is_a_slot(k)) p.second = c;
        else p.first = c;
        double worst = 0.0;
        for (std::size_t q = 0; q < n; ++q) {
          if (placed[q]) worst = std::max(worst, asg.cost(p, asg.pairs()[q]));
        }
        if (worst < best) {
          best = worst;
          pick = c;
        }
      }
      asg.set(k, pick);
      placed[k] = true;
    }
  }
  double current = asg.total();
  for (int pass = 0; pass < 100; ++pass) {
    bool improved = false;
    for (std::size_t k = 0; k < n; ++k) {
      const double rest = asg.without(k);
      if (rest >= current) continue;
      const std::size_t keep = asg.get(k);
      std::size_t pick = keep;
      double best = current;
      for (std::size_t c = 0; c < asg.choices(k); ++c) {
        const double v = std::max(rest, asg.against(k, c, n));
        if (v < best) {
          best = v;
          pick = c;
        }
      }
      if (pick != keep) {
        asg.set(k, pick);
        current = best;
        improved = true;
      }
    }
    if (!improved) break;
  }
  return {current, asg.pairs()};
}

Search oriented_upper(const FiniteMetricSpace& a, const FiniteMetricSpace& b, std::uint64_t seed,
                      int restarts) {
  SplitMix64 rng(seed);
  Search best = heuristic_run(a, b, rng, true);
  for (int r = 0; r < restarts; ++r) {
    Search s = heuristic_run(a, b, rng, false);
    if (s.best < best.best) best = std::move(s);
  }
  return best;
}

Correspondence flip(const Correspondence& r) {
  Correspondence out;
  out.reserve(r.size());
  for (const auto& [i, j] : r) out.emplace_back(j, i);
  return out;
}

}  // namespace

GhBound gh_upper_bound(const FiniteMetricSpace& a, const FiniteMetricSpace& b, std::uint64_t seed,
                       int restarts) {
  check_nonempty(a, b, "gh_upper_bound");
  const Search ab = oriented_upper(a, b, seed, restarts);
  Search ba = oriented_upper(b, a, seed, restarts);
  ba.witness = flip(ba.witness);
  const Search& pick = ba.best < ab.best ? ba : ab;
  GhBound out;
  out.upper = 0.5 * pick.best;
  out.witness = canonical(pick.witness);
  out.lower = std::min(0.5 * std::fabs(a.diameter() - b.diameter()), out.upper);
  return out;
}

GhBound gh_exact_small(const FiniteMetricSpace& a, const FiniteMetricSpace& b, unsigned threads) {
  check_nonempty(a, b, "gh_exact_small");
  if (a.size() > kGhExactCap || b.size() > kGhExactCap) {
    throw std::invalid_argument("gh_exact_small: more than " + std::to_string(kGhExactCap) +
                                " points");
  }
  // Incumbent from the heuristic; every branch searches for strict improvements.
  const GhBound start = gh_upper_bound(a, b, 0x5eed, 8);
  const double incumbent = 2.0 * start.upper;

  std::vector<Search> results(b.size(), Search{incumbent, {}});
  parallel_for(b.size(), threads, [&](std::size_t first) {
    Assignment asg(a, b);
    asg.set(0, first);
    branch(asg, 1, 0.0, results[first]);
  });
  Search best{incumbent, start.witness};
  for (const Search& s : results) {
    if (!s.witness.empty() && s.best < best.best) best = s;
  }
  GhBound out;
  out.upper = out.lower = 0.5 * best.best;
  out.witness = canonical(best.witness);
  return out;
}

}  // namespace specrecon
