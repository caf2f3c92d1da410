#include <gtest/gtest.h>

#include <cmath>

#include "specrecon/model_spaces.hpp"

using namespace specrecon;

TEST(Distance, TorusWrapsBothFactors) {
  const FlatTorus t(10.0, 0.5);
  EXPECT_NEAR(torus_distance(t, {0.0, 0.0}, {kPi, kPi}), std::hypot(0.5 * kPi, 10.0 * kPi), 1e-12);
  EXPECT_NEAR(torus_distance(t, {0.1, 0.2}, {kTwoPi - 0.1, kTwoPi - 0.2}), std::hypot(0.1, 4.0), 1e-12);
  EXPECT_NEAR(t.diameter(), std::hypot(0.5 * kPi, 10.0 * kPi), 1e-12);
}

TEST(Distance, CircleShorterArc) {
  const Circle c(2.0);
  EXPECT_NEAR(circle_distance(c, 0.1, kTwoPi - 0.1), 0.4, 1e-12);
  EXPECT_NEAR(circle_distance(c, 0.0, kPi), 2.0 * kPi, 1e-12);
}

TEST(Distance, ConeUsesClosestGroupCopy) {
  const FlatCone c(3, 3.0);
  const double sector = kTwoPi / 3.0;
  EXPECT_NEAR(cone_distance(c, {1.0, 0.05}, {1.0, sector - 0.05}), 2.0 * std::sin(0.05), 1e-12);
  EXPECT_NEAR(cone_distance(c, {1.0, 0.3}, {2.0, 0.3}), 1.0, 1e-12);
  EXPECT_NEAR(cone_distance(c, {0.0, 0.0}, {2.5, 1.0}), 2.5, 1e-12);
  // Law of cosines at the widest unrolled angle, sector / 2.
  const double d = cone_distance(c, {2.0, 0.0}, {1.5, 0.5 * sector});
  EXPECT_NEAR(d, std::sqrt(4.0 + 2.25 - 6.0 * std::cos(0.5 * sector)), 1e-12);
  EXPECT_DOUBLE_EQ(c.diameter(), 3.0);
  EXPECT_THROW(cone_distance(c, {3.5, 0.0}, {1.0, 0.0}), std::invalid_argument);
}

TEST(Distance, HalfPlaneConeDiameter) {
  // Angle pi: the widest unrolled angle is pi / 2, reached by rim points.
  const FlatCone c(2, 1.0);
  EXPECT_NEAR(cone_distance(c, {1.0, 0.0}, {1.0, 0.5 * kPi}), std::sqrt(2.0), 1e-12);
  EXPECT_NEAR(cone_distance(c, {1.0, 0.1}, {1.0, kPi - 0.1}), 2.0 * std::sin(0.1), 1e-12);
  EXPECT_NEAR(c.diameter(), std::sqrt(2.0), 1e-12);
}

TEST(Sampling, SeededAndReproducible) {
  const FlatTorus t(10.0, 0.5);
  const PointCloud a = sample_helix(t, 64, 35, 11);
  const PointCloud b = sample_helix(t, 64, 35, 11);
  const PointCloud c = sample_helix(t, 64, 35, 12);
  ASSERT_EQ(a.size(), 64u);
  EXPECT_EQ(a.points, b.points);
  EXPECT_NE(a.points, c.points);
  for (const Coord& p : a.points) {
    EXPECT_NEAR(wrap_angle(35.0 * p[1]), p[0], 1e-9);
  }
}

TEST(Sampling, UniformConeStaysInSector) {
  const FlatCone c(3, 2.0);
  const PointCloud pc = sample_uniform(c, 2000, 5);
  double mean_sq = 0.0;
  for (const Coord& p : pc.points) {
    EXPECT_GE(p[0], 0.0);
    EXPECT_LE(p[0], 2.0);
    EXPECT_GE(p[1], 0.0);
    EXPECT_LT(p[1], c.cone_angle());
    mean_sq += p[0] * p[0];
  }
  // Area-uniform radius: E[rho^2] = rho_max^2 / 2.
  EXPECT_NEAR(mean_sq / 2000.0, 2.0, 0.1);
}

TEST(Net, SeparatedCoveringAndDisjoint) {
  const Circle c(1.0);
  const PointCloud pc = equispaced_circle(400);
  const double eta = 0.3;
  const NetWithPatches net = max_separated_net(c, pc, eta);
  for (std::size_t i = 0; i < net.size(); ++i) {
    for (std::size_t k = i + 1; k < net.size(); ++k) {
      EXPECT_GE(distance(c, pc.points[net.anchors[i]], pc.points[net.anchors[k]]), 0.5 * eta);
    }
  }
  std::vector<int> owners(pc.size(), 0);
  for (const auto& patch : net.patches) {
    for (std::size_t idx : patch) ++owners[idx];
  }
  for (std::size_t idx = 0; idx < pc.size(); ++idx) {
    double best = 1e9;
    for (std::size_t a : net.anchors) best = std::min(best, distance(c, pc.points[idx], pc.points[a]));
    EXPECT_LT(best, 0.5 * eta);
    EXPECT_LE(owners[idx], 1);
  }
}

TEST(Net, AmbientSubsetOnly) {
  const Circle c(1.0);
  const PointCloud pc = equispaced_circle(200);
  std::vector<std::size_t> amb;
  for (std::size_t i = 0; i < 50; ++i) amb.push_back(i);
  const NetWithPatches net = max_separated_net(c, pc, 0.4, amb);
  for (const auto& patch : net.patches) {
    for (std::size_t idx : patch) EXPECT_LT(idx, 50u);
  }
  EXPECT_THROW(max_separated_net(c, pc, 0.0), std::invalid_argument);
}
