#include <gtest/gtest.h>

#include <cmath>

#include "specrecon/wave_control.hpp"

using namespace specrecon;

namespace {

std::vector<std::size_t> arc_patch(const PointCloud& pc, double half_width) {
  std::vector<std::size_t> out;
  for (std::size_t k = 0; k < pc.size(); ++k) {
    const double th = pc.points[k][0];
    if (std::min(th, kTwoPi - th) < half_width) out.push_back(k);
  }
  return out;
}

}  // namespace

TEST(TimeFactor, ClosedForm) {
  const double a = 1.3, b = 0.4, al = 0.9;
  EXPECT_NEAR(time_factor(a, b, al), std::sin((a - b) * al) / (a - b) + std::sin((a + b) * al) / (a + b), 1e-14);
  EXPECT_NEAR(time_factor(0.0, 0.0, al), 2.0 * al, 1e-15);
  EXPECT_NEAR(time_factor(a, a, al), al + std::sin(2 * a * al) / (2 * a), 1e-14);
}

TEST(Gram, ClosedFormMatchesQuadrature) {
  const Circle c(1.0);
  const PointCloud pc = equispaced_circle(256);
  const SpectralData sd = circle_spectrum(c, 10, pc);
  const InfluenceSpec spec{{arc_patch(pc, 0.3)}, {0.7}};
  const Eigen::MatrixXd exact = observation_gram(sd, spec);
  const Eigen::MatrixXd quad = observation_gram(sd, spec, 80);
  EXPECT_LT((exact - quad).cwiseAbs().maxCoeff(), 1e-10);
  EXPECT_LT((exact - exact.transpose()).cwiseAbs().maxCoeff(), 1e-14);
}

TEST(Projection, FeasibleAndStationary) {
  const Circle c(1.0);
  const PointCloud pc = equispaced_circle(512);
  const SpectralData sd = circle_spectrum(c, 16, pc);
  const InfluenceSpec spec{{arc_patch(pc, 0.2)}, {0.5}};
  FourierCoeffs a = FourierCoeffs::Zero(sd.J() + 1);
  a(0) = 1.0;
  ConstraintParams cp;
  cp.E1 = 1000.0;
  cp.eps1 = 1e-3;
  const ProjectionResult r = masked_projection(sd, spec, a, cp);
  const Eigen::MatrixXd q = observation_gram(sd, spec);
  EXPECT_LE(r.c.dot(q * r.c), cp.eps1 * cp.eps1 * (1 + 1e-6));
  EXPECT_LE(h2_norm_sq(sd, r.c), cp.E1 * cp.E1 * (1 + 1e-6));
  EXPECT_LT((r.b + r.c - a).norm(), 1e-14);
  EXPECT_LT(r.kkt_residual, 1e-6);
}

TEST(Projection, InteriorPointIsFixed) {
  const Circle c(1.0);
  const PointCloud pc = equispaced_circle(128);
  const SpectralData sd = circle_spectrum(c, 6, pc);
  const InfluenceSpec spec{{arc_patch(pc, 0.2)}, {0.5}};
  FourierCoeffs a = FourierCoeffs::Zero(sd.J() + 1);
  ConstraintParams cp;
  cp.E1 = 1.0;
  const ProjectionResult r = masked_projection(sd, spec, a, cp);
  EXPECT_EQ(r.b.norm(), 0.0);
}

// Arc of length L: the alpha-neighbourhood has normalised measure (L + 2 alpha) / 2pi.
TEST(Measure, ArcNeighbourhoods) {
  const Circle c(1.0);
  const PointCloud pc = equispaced_circle(2048);
  const SpectralData sd = circle_spectrum(c, 64, pc);
  const std::vector<std::size_t> patch = arc_patch(pc, 0.2);
  const double L = patch.size() * kTwoPi / pc.size();
  ConstraintParams cp;
  cp.E1 = 1000.0;
  cp.eps1 = 1e-3;
  for (double alpha : {0.5, 1.0, 1.5}) {
    const double m = measure_estimate(sd, {{patch}, {alpha}}, cp);
    EXPECT_NEAR(m, (L + 2 * alpha) / kTwoPi, 0.03) << "alpha " << alpha;
  }
}

TEST(Measure, OracleUnionsAndSlices) {
  const Circle c(1.0);
  const PointCloud pc = equispaced_circle(1024);
  const SpectralData sd = circle_spectrum(c, 48, pc);
  std::vector<std::size_t> amb;
  for (std::size_t k = 0; k < 256; ++k) amb.push_back(k);
  const NetWithPatches net = max_separated_net(c, pc, 0.6, amb);
  ConstraintParams cp;
  cp.E1 = 1000.0;
  cp.eps1 = 1e-3;
  const MeasureOracle oracle(sd, net, kPi, cp);
  EXPECT_EQ(oracle.union_measure({}), 0.0);
  EXPECT_EQ(oracle.union_measure({{0, 4.0}}), 1.0);
  const double one = oracle.union_measure({{0, 0.8}});
  const double both = oracle.union_measure({{0, 0.8}, {1, 0.8}});
  EXPECT_GE(both + 1e-9, one);
  EXPECT_EQ(oracle.union_measure({{0, 0.8}}), one);
  EXPECT_GE(oracle.cache_size(), 2u);

  // A slice excluding the patches' own neighbourhoods entirely is far from them.
  std::vector<int> beta(net.size(), 0);
  beta[0] = 4;
  const double s = oracle.slice_measure(beta, 0.6);
  const double ring = oracle.union_measure({{0, 2.4}}) - oracle.union_measure({{0, 1.2}});
  EXPECT_NEAR(s, ring, 1e-12);
}
