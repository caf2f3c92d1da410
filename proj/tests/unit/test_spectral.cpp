#include <gtest/gtest.h>

#include <cmath>

#include "specrecon/rng.hpp"
#include "specrecon/spectral.hpp"

using namespace specrecon;

namespace {

double orthonormality_error(const SpectralData& sd) {
  const Eigen::MatrixXd g = sd.eigfun * sd.weights.asDiagonal() * sd.eigfun.transpose();
  return (g - Eigen::MatrixXd::Identity(g.rows(), g.cols())).cwiseAbs().maxCoeff();
}

PointCloud torus_grid(int n1, int n2) {
  PointCloud pc;
  pc.kind = SpaceKind::Torus;
  for (int i = 0; i < n1; ++i) {
    for (int k = 0; k < n2; ++k) pc.points.push_back({kTwoPi * i / n1, kTwoPi * k / n2});
  }
  return pc;
}

}  // namespace

TEST(Spectrum, CircleEigenvaluesAndOrthonormality) {
  const SpectralData sd = circle_spectrum(Circle(2.0), 8, equispaced_circle(64));
  ASSERT_EQ(sd.J(), 8);
  const double expect[] = {0, 0.25, 0.25, 1, 1, 2.25, 2.25, 4, 4};
  for (int j = 0; j <= 8; ++j) EXPECT_NEAR(sd.eigenvalues(j), expect[j], 1e-12);
  EXPECT_LT(orthonormality_error(sd), 1e-12);
  EXPECT_NEAR(sd.eigfun.row(0).minCoeff(), 1.0, 1e-14);
}

TEST(Spectrum, TorusEigenvaluesOnGrid) {
  const FlatTorus t(10.0, 0.5);
  const SpectralData sd = torus_spectrum(t, 40, torus_grid(16, 128));
  EXPECT_NEAR(sd.eigenvalues(1), 0.01, 1e-14);
  EXPECT_NEAR(sd.eigenvalues(2), 0.01, 1e-14);
  EXPECT_NEAR(sd.eigenvalues(3), 0.04, 1e-14);
  for (int j = 1; j <= sd.J(); ++j) EXPECT_GE(sd.eigenvalues(j), sd.eigenvalues(j - 1));
  EXPECT_LT(orthonormality_error(sd), 1e-12);
}

TEST(Spectrum, ConeBesselModes) {
  const FlatCone c(3, 2.0);
  const WeightedCloud wc = cone_polar_grid(c, 48, 48);
  EXPECT_NEAR(wc.weights.sum(), 1.0, 1e-12);
  const SpectralData sd = cone_spectrum(c, 12, wc.cloud, wc.weights);
  // Tabulated zeros of J_0' and J_3'.
  EXPECT_NEAR(sd.eigenvalues(0), 0.0, 1e-14);
  EXPECT_NEAR(sd.eigenvalues(1), std::pow(3.8317059702 / 2.0, 2), 1e-8);
  EXPECT_NEAR(sd.eigenvalues(2), std::pow(4.2011889412 / 2.0, 2), 1e-8);
  EXPECT_NEAR(sd.eigenvalues(3), std::pow(4.2011889412 / 2.0, 2), 1e-8);
  EXPECT_LT(orthonormality_error(sd), 1e-10);
  EXPECT_EQ(sd.provenance, "exact:cone");
}

TEST(Spectrum, GraphLaplacianHasConstantGroundState) {
  const Circle c(1.0);
  const PointCloud pc = equispaced_circle(300);
  const SpectralData sd = graph_laplacian_spectrum(c, pc, 0.002, 6);
  EXPECT_NEAR(sd.eigenvalues(0), 0.0, 1e-8);
  EXPECT_NEAR(sd.weights.sum(), 1.0, 1e-12);
  EXPECT_LT((sd.eigfun.row(0).array() - 1.0).abs().maxCoeff(), 1e-8);
  // Low modes track k^2 on the unit circle.
  EXPECT_NEAR(sd.eigenvalues(1), 1.0, 0.05);
  EXPECT_NEAR(sd.eigenvalues(3), 4.0, 0.2);
}

TEST(HeatKernel, ThetaSumMatchesSpectralSum) {
  const FlatTorus t(10.0, 0.5);
  const double time = 100.0;
  const PointCloud pc = sample_uniform(t, 40, 9);
  const SpectralData sd = torus_spectrum(t, 200, pc);
  const double scale = 4.0 * kPi * kPi * t.R() * t.r();
  for (std::size_t p = 0; p < pc.size(); p += 3) {
    for (std::size_t q = 0; q < pc.size(); q += 7) {
      const double theta = heat_kernel_theta(t, pc.points[p], pc.points[q], time, 1e-14) * scale;
      const double spec = heat_kernel_spectral(sd, p, q, time);
      EXPECT_NEAR(theta / spec, 1.0, 1e-10);
    }
  }
}

TEST(HeatKernel, ShortTimeIsGaussian) {
  const FlatTorus t(10.0, 0.5);
  const double time = 1e-3;
  const double d = 0.05;
  const double k = heat_kernel_theta(t, {0.0, 0.0}, {0.0, d / 10.0}, time, 1e-15);
  EXPECT_NEAR(k, std::exp(-d * d / (4 * time)) / (4 * kPi * time), 1e-10);
}

TEST(HeatKernel, LongTimeApproachesInverseVolume) {
  const FlatTorus t(10.0, 0.5);
  for (const Coord& q : {Coord{0.3, 1.0}, Coord{3.0, 4.0}}) {
    EXPECT_NEAR(heat_kernel_theta(t, {0.0, 0.0}, q, 1e6, 1e-14), 1.0 / (20.0 * kPi * kPi), 1e-6);
  }
  EXPECT_EQ(heat_kernel_theta(t, {0.1, 0.2}, {1.0, 2.0}, 3.0, 1e-14),
            heat_kernel_theta(t, {1.0, 2.0}, {0.1, 0.2}, 3.0, 1e-14));
}
