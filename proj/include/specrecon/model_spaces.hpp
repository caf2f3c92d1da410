#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Dense>

namespace specrecon {

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

/// Intrinsic coordinates of a sample point.
///   torus:  (s1, s2), s1 on the small circle S^1_r, s2 on the large circle S^1_R
///   circle: (theta, 0)
///   cone:   (rho, theta)
/// Angles are canonical in [0, 2*pi); wrapping happens inside the distance oracles.
using Coord = std::array<double, 2>;

/// Flat product torus S^1_R x S^1_r.
class FlatTorus {
 public:
  FlatTorus(double large_radius, double small_radius);

  double R() const { return R_; }
  double r() const { return r_; }
  double volume() const { return 4.0 * kPi * kPi * R_ * r_; }
  double diameter() const;

 private:
  double R_;
  double r_;
};

class Circle {
 public:
  explicit Circle(double radius);

  double R() const { return R_; }
  double volume() const { return kTwoPi * R_; }
  double diameter() const { return kPi * R_; }

 private:
  double R_;
};

/// The orbifold R^2 / Z_m truncated to the disc rho <= rho_max: a flat cone
/// with cone angle 2*pi/m whose apex (rho = 0) is the only singular point.
class FlatCone {
 public:
  FlatCone(int m, double rho_max);

  int m() const { return m_; }
  double rho_max() const { return rho_max_; }
  double cone_angle() const { return kTwoPi / m_; }
  double volume() const { return kPi * rho_max_ * rho_max_ / m_; }
  double diameter() const;

 private:
  int m_;
  double rho_max_;
};

using Space = std::variant<FlatTorus, Circle, FlatCone>;

enum class SpaceKind { Torus, Circle, Cone };

SpaceKind kind_of(const Space& space);
std::string to_string(SpaceKind kind);
double volume(const Space& space);
double diameter(const Space& space);
int intrinsic_dimension(const Space& space);

struct PointCloud {
  SpaceKind kind = SpaceKind::Circle;
  std::vector<Coord> points;
  std::uint64_t seed = 0;

  std::size_t size() const { return points.size(); }
};

/// Angle mapped into [0, 2*pi).
double wrap_angle(double a);

double torus_distance(const FlatTorus& t, Coord p, Coord q);
double circle_distance(const Circle& c, double p, double q);
double cone_distance(const FlatCone& c, Coord p, Coord q);
double distance(const Space& space, Coord p, Coord q);

/// Dense n x n matrix of intrinsic distances.
Eigen::MatrixXd pairwise_distances(const Space& space, const PointCloud& cloud);

std::array<double, 3> embed_torus_r3(const FlatTorus& t, Coord p);

/// Points on the closed geodesic (s1, s2) = (m*tau mod 2pi, tau), tau ~ U[0, 2pi).
PointCloud sample_helix(const FlatTorus& t, std::size_t n, int m, std::uint64_t seed);

/// Area-uniform samples. Draw order per point: first coordinate, then second.
PointCloud sample_uniform(const Space& space, std::size_t n, std::uint64_t seed);

/// theta_k = 2*pi*k/n.
PointCloud equispaced_circle(std::size_t n);

struct NetWithPatches {
  std::vector<std::size_t> anchors;               // cloud indices of p_i
  double eta = 0.0;
  std::vector<std::vector<std::size_t>> patches;  // cloud indices of U_i

  std::size_t size() const { return anchors.size(); }
};

/// Greedy maximal eta/2-separated net over the whole cloud.
NetWithPatches max_separated_net(const Space& space, const PointCloud& cloud, double eta);

/// Same, restricted to an ambient subset of cloud indices (visited in the
/// given order). Patches only contain ambient points.
NetWithPatches max_separated_net(const Space& space, const PointCloud& cloud, double eta,
                                 std::span<const std::size_t> ambient);

/// d(x, U) = min over patch points.
double distance_to_patch(const Space& space, const PointCloud& cloud,
                         std::span<const std::size_t> patch, Coord x);

}  // namespace specrecon
