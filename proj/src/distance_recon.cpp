#include "specrecon/distance_recon.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <sstream>
#include <stdexcept>

#include "specrecon/errors.hpp"
#include "specrecon/parallel.hpp"
#include "specrecon/rng.hpp"

namespace specrecon {

int effective_dim(const Space& space, const ReconParams& rp) {
  return rp.dimY > 0 ? rp.dimY : intrinsic_dimension(space);
}

double calibrate_c_star(const Space& space, double eta, int dimY, std::size_t probes,
                        std::size_t samples, std::uint64_t seed) {
  if (!(eta > 0.0)) throw std::invalid_argument("calibrate_c_star: eta must be > 0");
  if (probes == 0 || samples == 0) throw std::invalid_argument("calibrate_c_star: empty sample");
  SplitMix64 root(seed);
  const PointCloud centers = sample_uniform(space, probes, root.next());
  const PointCloud mc = sample_uniform(space, samples, root.next());
  double smallest = 1.0;
  for (const Coord& x : centers.points) {
    std::size_t inside = 0;
    for (const Coord& z : mc.points) inside += distance(space, x, z) < 0.5 * eta;
    smallest = std::min(smallest, static_cast<double>(inside) / static_cast<double>(samples));
  }
  return 0.5 * smallest / std::pow(eta, dimY);
}

namespace {

int beta_cap(const Space& space, double eta) {
  return std::max(1, static_cast<int>(std::ceil(diameter(space) / eta - 1e-12)));
}

}  // namespace

SliceIndex seed_index(const Space& space, const PointCloud& cloud, const NetWithPatches& net,
                      Coord x, double eta) {
  const int cap = beta_cap(space, eta);
  SliceIndex s;
  s.beta.reserve(net.size());
  for (const auto& patch : net.patches) {
    const double d = distance_to_patch(space, cloud, patch, x);
    const int b = static_cast<int>(std::floor(d / eta)) + 1;
    s.beta.push_back(std::clamp(b, 1, cap));
  }
  return s;
}

RStar build_rstar(const MeasureOracle& oracle, const Space& space, const PointCloud& cloud,
                  const ReconParams& rp) {
  const NetWithPatches& net = oracle.net();
  if (net.size() == 0) throw std::invalid_argument("build_rstar: empty net");
  if (!(rp.eta > 0.0)) throw std::invalid_argument("build_rstar: eta must be > 0");
  if (net.size() > rp.max_active) {
    throw NumericalError("build_rstar: net of " + std::to_string(net.size()) +
                         " anchors exceeds the active-set cap of " + std::to_string(rp.max_active) +
                         "; use a coarser eta or a smaller net region");
  }
  const int dim = effective_dim(space, rp);
  SplitMix64 root(rp.seed);
  const std::uint64_t calib_seed = root.next();
  const std::uint64_t probe_seed = root.next();

  RStar out;
  out.eta = rp.eta;
  out.c_star = rp.c_star > 0.0
                   ? rp.c_star
                   : calibrate_c_star(space, rp.eta, dim, rp.probe_points, rp.calibration_points,
                                      calib_seed);
  out.threshold = out.c_star * std::pow(rp.eta, dim);

  const PointCloud probes = sample_uniform(space, rp.probe_points, probe_seed);
  std::vector<SliceIndex> probe_seeds;
  probe_seeds.reserve(probes.size());
  for (const Coord& x : probes.points) probe_seeds.push_back(seed_index(space, cloud, net, x, rp.eta));

  const int cap = beta_cap(space, rp.eta);
  std::set<SliceIndex> pool(probe_seeds.begin(), probe_seeds.end());
  const std::vector<SliceIndex> distinct(pool.begin(), pool.end());
  for (const SliceIndex& s : distinct) {
    for (std::size_t i = 0; i < s.beta.size(); ++i) {
      for (int step = -rp.beam_radius; step <= rp.beam_radius; ++step) {
        if (step == 0) continue;
        SliceIndex t = s;
        t.beta[i] += step;
        if (t.beta[i] >= 1 && t.beta[i] <= cap) pool.insert(std::move(t));
      }
    }
  }

  const std::vector<SliceIndex> candidates(pool.begin(), pool.end());
  std::vector<double> measures(candidates.size());
  parallel_for(candidates.size(), rp.threads, [&](std::size_t c) {
    measures[c] = oracle.slice_measure(candidates[c].beta, rp.eta, rp.max_active);
  });

  out.candidates = candidates.size();
  out.max_measure = -std::numeric_limits<double>::infinity();
  std::set<SliceIndex> admitted;
  for (std::size_t c = 0; c < candidates.size(); ++c) {
    out.max_measure = std::max(out.max_measure, measures[c]);
    if (measures[c] > out.threshold) {
      out.slices.push_back({candidates[c], rp.eta, measures[c]});
      admitted.insert(candidates[c]);
    }
  }
  out.probes = probe_seeds.size();
  for (const SliceIndex& s : probe_seeds) out.probes_covered += admitted.count(s);

  if (out.slices.empty()) {
    std::ostringstream msg;
    msg << "build_rstar: no slice admitted; maximum measure " << out.max_measure
        << " vs threshold " << out.threshold << " over " << out.candidates << " candidates";
    throw NumericalError(msg.str());
  }
  return out;
}

double approx_distance(const RStar& rstar, std::size_t i, std::size_t k) {
  if (rstar.slices.empty()) throw std::invalid_argument("approx_distance: empty R*");
  double best = std::numeric_limits<double>::infinity();
  for (const SliceFunction& f : rstar.slices) best = std::min(best, f.value(i) + f.value(k));
  return best;
}

Eigen::MatrixXd net_distance_matrix(const RStar& rstar, std::size_t net_size) {
  const auto n = static_cast<Eigen::Index>(net_size);
  Eigen::MatrixXd d = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index k = i + 1; k < n; ++k) {
      d(i, k) = d(k, i) = approx_distance(rstar, static_cast<std::size_t>(i), static_cast<std::size_t>(k));
    }
  }
  return d;
}

}  // namespace specrecon
