#include <gtest/gtest.h>

#include <cmath>

#include "specrecon/singular_detect.hpp"

using namespace specrecon;

namespace {

RStar three_slices() {
  RStar r;
  r.eta = 1.0;
  r.slices = {{{{1, 3}}, 1.0, 0.1}, {{{2, 2}}, 1.0, 0.1}, {{{3, 1}}, 1.0, 0.1}};
  return r;
}

}  // namespace

TEST(Select, MatchesRecordWithinThreeSigma) {
  ReconParams rp;
  rp.eta = 1.0;
  rp.sigma = 0.2;
  CutData cut;
  cut.records.push_back({0, 1, 0, 3.0, 1.0});
  const auto s = select_singular_slices(three_slices(), cut, rp);
  ASSERT_EQ(s.size(), 1u);
  EXPECT_EQ(s[0].beta, (std::vector<int>{3, 1}));
  cut.records[0].rho_plus_s = 3.7;
  EXPECT_TRUE(select_singular_slices(three_slices(), cut, rp).empty());
}

TEST(Classify, FarIffBeyondBound) {
  ReconParams rp;
  rp.eta = 1.0;
  rp.sigma = 0.2;  // bound 3 sqrt(0.2) = 1.34
  Eigen::MatrixXd d(2, 2);
  d << 0.0, 2.0, 2.0, 0.0;
  const SingularSelection sel = classify_net(three_slices(), {{{3, 1}}}, d, rp);
  EXPECT_EQ(sel.far_indices, (std::vector<std::size_t>{0}));
  EXPECT_EQ(sel.near_indices, (std::vector<std::size_t>{1}));
  EXPECT_EQ(sel.assigned[0].beta, (std::vector<int>{1, 3}));

  const SingularSelection none = classify_net(three_slices(), {}, d, rp);
  EXPECT_EQ(none.far_indices.size(), 2u);
  EXPECT_THROW(classify_net(RStar{}, {}, d, rp), std::invalid_argument);
}

// N = X(U_y, s + eps) minus X(U_x, rho + s), checked against a direct count.
TEST(NSet, MatchesGeometry) {
  const Circle c(1.0);
  const PointCloud pc = equispaced_circle(2048);
  const SpectralData sd = circle_spectrum(c, 64, pc);
  std::vector<std::size_t> amb;
  for (std::size_t k = 0; k < 512; ++k) amb.push_back(k);
  const NetWithPatches net = max_separated_net(c, pc, 0.5, amb);
  ASSERT_GE(net.size(), 3u);
  ConstraintParams cp;
  cp.E1 = 1000.0;
  cp.eps1 = 1e-3;
  const MeasureOracle oracle(sd, net, kPi, cp);
  const CutProbe probe{0, 2, 0.5, 0.4, 0.6};
  std::size_t inside = 0;
  for (const Coord& z : pc.points) {
    const bool a = distance_to_patch(c, pc, net.patches[2], z) < probe.s + probe.eps;
    const bool b = distance_to_patch(c, pc, net.patches[0], z) < probe.rho + probe.s;
    inside += a && !b;
  }
  const double truth = static_cast<double>(inside) / pc.size();
  EXPECT_NEAR(n_set_measure(oracle, probe), truth, 0.03);
}
