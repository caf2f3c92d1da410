#include <gtest/gtest.h>

#include <cmath>

#include "specrecon/diffusion_map.hpp"

using namespace specrecon;

TEST(Kernel, ExponentialEntries) {
  Eigen::MatrixXd d(2, 2);
  d << 0.0, 1.0, 1.0, 0.0;
  const KernelMatrix k = exp_kernel_matrix(d, 0.5);
  EXPECT_NEAR(k.values(0, 0), 1.0 / (2.0 * kPi), 1e-15);
  EXPECT_NEAR(k.values(0, 1), std::exp(-0.5) / (2.0 * kPi), 1e-15);
}

TEST(Kernel, RowNormalizeIsStochastic) {
  KernelMatrix k;
  k.values = Eigen::MatrixXd::Random(5, 5).cwiseAbs().array() + 0.1;
  const Eigen::MatrixXd p = row_normalize(k);
  for (Eigen::Index i = 0; i < 5; ++i) EXPECT_NEAR(p.row(i).sum(), 1.0, 1e-14);
}

TEST(Svd, DiagonalAndSignConvention) {
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(3, 3);
  m(0, 0) = -2.0;
  m(1, 1) = 5.0;
  m(2, 2) = 1.0;
  const SvdFactor f = svd_factor(m);
  EXPECT_NEAR(f.singular_values(0), 5.0, 1e-14);
  EXPECT_NEAR(f.singular_values(1), 2.0, 1e-14);
  for (Eigen::Index p = 0; p < 3; ++p) {
    Eigen::Index at = 0;
    f.left.col(p).cwiseAbs().maxCoeff(&at);
    EXPECT_GT(f.left(at, p), 0.0);
  }
  const Eigen::MatrixXd back = f.left * f.singular_values.asDiagonal() * f.right.transpose();
  EXPECT_LT((back - m).cwiseAbs().maxCoeff(), 1e-14);
  EXPECT_EQ(svd_factor(m, 2).rank(), 2);
}

TEST(Svd, SymmetricFactorMatchesSvdSpectrum) {
  // A symmetric positive kernel: the random-walk matrix D^-1 K has the same
  // eigenvalues as D^-1/2 K D^-1/2.
  Eigen::MatrixXd d(4, 4);
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) d(i, j) = std::abs(i - j) * 0.7;
  const KernelMatrix k = exp_kernel_matrix(d, 0.3);
  const SvdFactor s = symmetric_factor(k);
  EXPECT_NEAR(s.singular_values(0), 1.0, 1e-12);
  const Eigen::MatrixXd p = row_normalize(k);
  for (Eigen::Index q = 0; q < s.rank(); ++q) {
    const Eigen::VectorXd v = s.left.col(q);
    EXPECT_LT((p * v - s.singular_values(q) * v).norm(), 1e-10);
  }
}

TEST(Embedding, SelectsColumnsAndDiagnosesCircle) {
  const int n = 60;
  SvdFactor f;
  f.singular_values = Eigen::VectorXd::LinSpaced(3, 3.0, 1.0);
  f.left = Eigen::MatrixXd::Zero(n, 3);
  f.right = f.left;
  std::vector<double> ref(n);
  for (int i = 0; i < n; ++i) {
    ref[i] = kTwoPi * i / n;
    f.left(i, 0) = 1.0;
    f.left(i, 1) = 2.0 + 0.5 * std::cos(ref[i]);
    f.left(i, 2) = -1.0 + 0.5 * std::sin(ref[i]);
  }
  const EmbeddingResult e = eigenfunction_map(f, 2, 2, KernelCase::C1);
  ASSERT_EQ(e.coords.cols(), 2);
  const CircleReport r = circle_diagnostics(e, ref);
  EXPECT_NEAR(r.center_x, 2.0, 1e-12);
  EXPECT_NEAR(r.center_y, -1.0, 1e-12);
  EXPECT_NEAR(r.radius, 0.5, 1e-12);
  EXPECT_LT(r.radial_rms_relative, 1e-12);
  EXPECT_EQ(r.inversion_fraction, 0.0);
}

TEST(Embedding, ScrambledOrderIsReported) {
  const int n = 40;
  EmbeddingResult e;
  e.coords.resize(n, 2);
  std::vector<double> ref(n);
  for (int i = 0; i < n; ++i) {
    ref[i] = kTwoPi * i / n;
    const double a = kTwoPi * (i ^ 1) / n;
    e.coords(i, 0) = std::cos(a);
    e.coords(i, 1) = std::sin(a);
  }
  EXPECT_NEAR(circle_diagnostics(e, ref).inversion_fraction, 0.5, 1e-12);
}
