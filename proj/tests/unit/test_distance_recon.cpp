#include <gtest/gtest.h>

#include <cmath>

#include "specrecon/distance_recon.hpp"

using namespace specrecon;

TEST(CStar, CircleBallMeasure) {
  // mu(B(x, eta/2)) = eta / 2pi on the unit circle, so c_* = 1 / 4pi.
  const double c = calibrate_c_star(Circle(1.0), 0.4, 1, 64, 20000, 3);
  EXPECT_NEAR(c, 1.0 / (4.0 * kPi), 0.1 / (4.0 * kPi));
  EXPECT_EQ(c, calibrate_c_star(Circle(1.0), 0.4, 1, 64, 20000, 3));
}

TEST(CStar, TorusBallMeasure) {
  const FlatTorus t(10.0, 0.5);
  const double eta = 0.8;
  const double ball = kPi * 0.16 / t.volume();
  EXPECT_NEAR(calibrate_c_star(t, eta, 2, 32, 200000, 5), 0.5 * ball / (eta * eta), 0.15 * 0.5 * ball / (eta * eta));
}

TEST(SeedIndex, FloorPlusOneClipped) {
  const Circle c(1.0);
  const PointCloud pc = equispaced_circle(360);
  NetWithPatches net;
  net.eta = 0.5;
  net.anchors = {0, 180};
  net.patches = {{0}, {180}};
  const double x = 1.0;
  const SliceIndex s = seed_index(c, pc, net, {x, 0.0}, 0.5);
  ASSERT_EQ(s.beta.size(), 2u);
  EXPECT_EQ(s.beta[0], 3);                                         // floor(1.0 / 0.5) + 1
  EXPECT_EQ(s.beta[1], static_cast<int>(std::floor((kPi - 1.0) / 0.5)) + 1);
  EXPECT_EQ(seed_index(c, pc, net, {kPi, 0.0}, 0.5).beta[0], static_cast<int>(std::ceil(kPi / 0.5)));
}

TEST(DistanceMatrix, MinOverSlices) {
  RStar r;
  r.eta = 0.5;
  r.slices = {{{{1, 4, 2}}, 0.5, 0.1}, {{{3, 1, 1}}, 0.5, 0.1}};
  EXPECT_DOUBLE_EQ(approx_distance(r, 0, 1), 2.0);   // min(0.5 + 2.0, 1.5 + 0.5)
  EXPECT_DOUBLE_EQ(approx_distance(r, 0, 2), 1.5);
  const Eigen::MatrixXd d = net_distance_matrix(r, 3);
  EXPECT_EQ(d(1, 1), 0.0);
  EXPECT_EQ(d(2, 1), d(1, 2));
  EXPECT_THROW(approx_distance(RStar{}, 0, 1), std::invalid_argument);
}

TEST(Rstar, CircleWithinEightEta) {
  const Circle c(1.0);
  const PointCloud pc = equispaced_circle(1024);
  const SpectralData sd = circle_spectrum(c, 48, pc);
  std::vector<std::size_t> amb;
  for (std::size_t k = 0; k < pc.size() / 4; ++k) amb.push_back(k);
  const double eta = 0.5;
  const NetWithPatches net = max_separated_net(c, pc, eta, amb);
  ConstraintParams cp;
  cp.E1 = 1000.0;
  cp.eps1 = 1e-3;
  const MeasureOracle oracle(sd, net, kPi, cp);
  ReconParams rp;
  rp.eta = eta;
  rp.probe_points = 64;
  rp.calibration_points = 2048;
  const RStar r = build_rstar(oracle, c, pc, rp);
  ASSERT_FALSE(r.slices.empty());
  for (const SliceFunction& f : r.slices) EXPECT_GT(f.measure, r.threshold);
  const Eigen::MatrixXd d = net_distance_matrix(r, net.size());
  for (std::size_t i = 0; i < net.size(); ++i) {
    for (std::size_t k = 0; k < net.size(); ++k) {
      const double truth = distance(c, pc.points[net.anchors[i]], pc.points[net.anchors[k]]);
      EXPECT_LT(std::fabs(d(i, k) - truth), 8 * eta);
    }
  }
}
