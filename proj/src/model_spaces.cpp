#include "specrecon/model_spaces.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "specrecon/rng.hpp"

namespace specrecon {

namespace {

// Angular separation on the unit circle, in [0, pi].
double angular_gap(double a, double b) {
  double d = std::fabs(std::fmod(a - b, kTwoPi));
  return std::min(d, kTwoPi - d);
}

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

}  // namespace

FlatTorus::FlatTorus(double large_radius, double small_radius)
    : R_(large_radius), r_(small_radius) {
  if (!(R_ > 0.0) || !(r_ > 0.0) || !std::isfinite(R_) || !std::isfinite(r_)) {
    throw std::invalid_argument("FlatTorus: radii must be positive and finite");
  }
}

double FlatTorus::diameter() const { return kPi * std::hypot(R_, r_); }

Circle::Circle(double radius) : R_(radius) {
  if (!(R_ > 0.0) || !std::isfinite(R_)) {
    throw std::invalid_argument("Circle: radius must be positive and finite");
  }
}

FlatCone::FlatCone(int m, double rho_max) : m_(m), rho_max_(rho_max) {
  if (m_ < 2) throw std::invalid_argument("FlatCone: group order m must be >= 2");
  if (!(rho_max_ > 0.0) || !std::isfinite(rho_max_)) {
    throw std::invalid_argument("FlatCone: rho_max must be positive and finite");
  }
}

double FlatCone::diameter() const {
  // Farthest pairs: apex to rim, or two rim points half a sector apart.
  return rho_max_ * std::max(1.0, 2.0 * std::sin(kPi / (2.0 * m_)));
}

SpaceKind kind_of(const Space& space) {
  return std::visit(Overloaded{[](const FlatTorus&) { return SpaceKind::Torus; },
                               [](const Circle&) { return SpaceKind::Circle; },
                               [](const FlatCone&) { return SpaceKind::Cone; }},
                    space);
}

std::string to_string(SpaceKind kind) {
  switch (kind) {
    case SpaceKind::Torus: return "torus";
    case SpaceKind::Circle: return "circle";
    case SpaceKind::Cone: return "cone";
  }
  return "unknown";
}

double volume(const Space& space) {
  return std::visit([](const auto& s) { return s.volume(); }, space);
}

double diameter(const Space& space) {
  return std::visit([](const auto& s) { return s.diameter(); }, space);
}

int intrinsic_dimension(const Space& space) {
  return kind_of(space) == SpaceKind::Circle ? 1 : 2;
}

double wrap_angle(double a) {
  double w = std::fmod(a, kTwoPi);
  if (w < 0.0) w += kTwoPi;
  // fmod of a tiny negative number can land exactly on 2*pi after the shift.
  if (w >= kTwoPi) w = 0.0;
  return w;
}

double torus_distance(const FlatTorus& t, Coord p, Coord q) {
  const double d1 = t.r() * angular_gap(p[0], q[0]);
  const double d2 = t.R() * angular_gap(p[1], q[1]);
  return std::hypot(d1, d2);
}

double circle_distance(const Circle& c, double p, double q) {
  return c.R() * angular_gap(p, q);
}

double cone_distance(const FlatCone& c, Coord p, Coord q) {
  const double r1 = p[0];
  const double r2 = q[0];
  if (!(r1 >= 0.0 && r1 <= c.rho_max()) || !(r2 >= 0.0 && r2 <= c.rho_max())) {
    throw std::invalid_argument("cone_distance: rho outside [0, rho_max]");
  }
  // Unrolled angle: closest group copy of q to p.
  const double sector = c.cone_angle();
  double delta = std::fabs(std::fmod(p[1] - q[1], sector));
  delta = std::min(delta, sector - delta);
  if (delta >= kPi) return r1 + r2;
  const double s = std::sin(0.5 * delta);
  const double dr = r1 - r2;
  return std::sqrt(dr * dr + 4.0 * r1 * r2 * s * s);
}

double distance(const Space& space, Coord p, Coord q) {
  return std::visit(
      Overloaded{[&](const FlatTorus& t) { return torus_distance(t, p, q); },
                 [&](const Circle& c) { return circle_distance(c, p[0], q[0]); },
                 [&](const FlatCone& c) { return cone_distance(c, p, q); }},
      space);
}

Eigen::MatrixXd pairwise_distances(const Space& space, const PointCloud& cloud) {
  const auto n = static_cast<Eigen::Index>(cloud.size());
  Eigen::MatrixXd d(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    d(i, i) = 0.0;
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const double v = distance(space, cloud.points[i], cloud.points[j]);
      d(i, j) = v;
      d(j, i) = v;
    }
  }
  return d;
}

std::array<double, 3> embed_torus_r3(const FlatTorus& t, Coord p) {
  const double ring = t.R() + t.r() * std::cos(p[0]);
  return {ring * std::cos(p[1]), ring * std::sin(p[1]), t.r() * std::sin(p[0])};
}

PointCloud sample_helix(const FlatTorus& /*t*/, std::size_t n, int m, std::uint64_t seed) {
  if (n == 0) throw std::invalid_argument("sample_helix: n must be >= 1");
  if (m < 1) throw std::invalid_argument("sample_helix: winding m must be >= 1");
  PointCloud cloud{SpaceKind::Torus, {}, seed};
  cloud.points.reserve(n);
  SplitMix64 rng(seed);
  for (std::size_t j = 0; j < n; ++j) {
    const double tau = kTwoPi * rng.uniform();
    cloud.points.push_back({wrap_angle(m * tau), tau});
  }
  return cloud;
}

PointCloud sample_uniform(const Space& space, std::size_t n, std::uint64_t seed) {
  if (n == 0) throw std::invalid_argument("sample_uniform: n must be >= 1");
  PointCloud cloud{kind_of(space), {}, seed};
  cloud.points.reserve(n);
  SplitMix64 rng(seed);
  for (std::size_t j = 0; j < n; ++j) {
    std::visit(Overloaded{[&](const FlatTorus&) {
                            const double s1 = kTwoPi * rng.uniform();
                            const double s2 = kTwoPi * rng.uniform();
                            cloud.points.push_back({s1, s2});
                          },
                          [&](const Circle&) {
                            cloud.points.push_back({kTwoPi * rng.uniform(), 0.0});
                          },
                          [&](const FlatCone& c) {
                            const double rho = c.rho_max() * std::sqrt(rng.uniform());
                            const double theta = c.cone_angle() * rng.uniform();
                            cloud.points.push_back({rho, theta});
                          }},
               space);
  }
  return cloud;
}

PointCloud equispaced_circle(std::size_t n) {
  if (n == 0) throw std::invalid_argument("equispaced_circle: n must be >= 1");
  PointCloud cloud{SpaceKind::Circle, {}, 0};
  cloud.points.reserve(n);
  for (std::size_t k = 0; k < n; ++k) {
    cloud.points.push_back({kTwoPi * static_cast<double>(k) / static_cast<double>(n), 0.0});
  }
  return cloud;
}

NetWithPatches max_separated_net(const Space& space, const PointCloud& cloud, double eta) {
  std::vector<std::size_t> all(cloud.size());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
  return max_separated_net(space, cloud, eta, all);
}

NetWithPatches max_separated_net(const Space& space, const PointCloud& cloud, double eta,
                                 std::span<const std::size_t> ambient) {
  if (!(eta > 0.0)) throw std::invalid_argument("max_separated_net: eta must be positive");
  if (ambient.empty()) throw std::invalid_argument("max_separated_net: empty cloud");
  const double half = 0.5 * eta;

  NetWithPatches net;
  net.eta = eta;
  for (std::size_t idx : ambient) {
    const Coord& x = cloud.points.at(idx);
    bool separated = true;
    for (std::size_t a : net.anchors) {
      if (distance(space, x, cloud.points[a]) < half) {
        separated = false;
        break;
      }
    }
    if (separated) net.anchors.push_back(idx);
  }

  net.patches.assign(net.anchors.size(), {});
  for (std::size_t idx : ambient) {
    const Coord& x = cloud.points[idx];
    double best = std::numeric_limits<double>::infinity();
    std::size_t owner = 0;
    for (std::size_t k = 0; k < net.anchors.size(); ++k) {
      const double d = distance(space, x, cloud.points[net.anchors[k]]);
      if (d < best) {
        best = d;
        owner = k;
      }
    }
    if (best < half) net.patches[owner].push_back(idx);
  }
  return net;
}

double distance_to_patch(const Space& space, const PointCloud& cloud,
                         std::span<const std::size_t> patch, Coord x) {
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t idx : patch) best = std::min(best, distance(space, x, cloud.points[idx]));
  return best;
}

}  // namespace specrecon
