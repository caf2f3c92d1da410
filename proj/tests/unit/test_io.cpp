#include <gtest/gtest.h>

#include <cmath>
#include <cstring>
#include <filesystem>
#include <limits>

#include "specrecon/io.hpp"
#include "specrecon/rng.hpp"

using namespace specrecon;

TEST(Numbers, ShortestRoundTrip) {
  SplitMix64 rng(1);
  for (int i = 0; i < 2000; ++i) {
    std::uint64_t bits = rng.next();
    double v;
    std::memcpy(&v, &bits, sizeof v);
    if (!std::isfinite(v)) continue;
    const double back = parse_double(format_double(v));
    EXPECT_EQ(std::memcmp(&v, &back, sizeof v), 0) << format_double(v);
  }
  EXPECT_EQ(format_double(0.1), "0.1");
  EXPECT_EQ(format_double(-2.0), "-2");
  EXPECT_EQ(parse_double(" +1.5e3 "), 1500.0);
  EXPECT_THROW(parse_double("1.5x"), std::invalid_argument);
  EXPECT_THROW(parse_double(""), std::invalid_argument);
}

TEST(Hash, KnownDigest) {
  EXPECT_EQ(sha256_hex("abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  EXPECT_EQ(sha256_hex(""), "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
}

TEST(Files, AtomicWriteLeavesNoTemporaries) {
  const auto dir = std::filesystem::temp_directory_path() / "specrecon_io_test";
  std::filesystem::remove_all(dir);
  write_file_atomic(dir / "a.txt", "hello");
  write_file_atomic(dir / "a.txt", "world");
  EXPECT_EQ(read_file(dir / "a.txt"), "world");
  EXPECT_EQ(sha256_file(dir / "a.txt"), sha256_hex("world"));
  std::size_t count = 0;
  for (const auto& e : std::filesystem::directory_iterator(dir)) {
    (void)e;
    ++count;
  }
  EXPECT_EQ(count, 1u);
  std::filesystem::remove_all(dir);
}

TEST(Csv, MetaHeaderRows) {
  CsvTable t;
  t.meta = {{"k", "v=1"}};
  t.header = {"a", "b"};
  t.rows = {{"1", "2"}, {"3", ""}};
  const std::string s = t.to_string();
  EXPECT_EQ(s, "# k=v=1\na,b\n1,2\n3,\n");
  const CsvTable back = CsvTable::parse(s);
  EXPECT_EQ(back.meta_value("k"), "v=1");
  EXPECT_EQ(back.header, t.header);
  EXPECT_EQ(back.rows, t.rows);
}

TEST(Csv, MatrixAndCloudRoundTrip) {
  Eigen::MatrixXd m = Eigen::MatrixXd::Random(4, 3) * 1e-7;
  m(0, 0) = 1.0 / 3.0;
  EXPECT_EQ(csv_matrix(CsvTable::parse(matrix_csv(m).to_string()), 1), m);

  const PointCloud pc = sample_uniform(FlatCone(3, 2.0), 20, 77);
  const PointCloud back = csv_point_cloud(CsvTable::parse(point_cloud_csv(pc).to_string()), SpaceKind::Cone);
  EXPECT_EQ(back.points, pc.points);
  EXPECT_EQ(back.seed, pc.seed);
}

TEST(Spectral, TextRoundTripIsExact) {
  const FlatCone c(3, 2.0);
  const WeightedCloud wc = cone_polar_grid(c, 6, 5);
  const SpectralData sd = cone_spectrum(c, 7, wc.cloud, wc.weights);
  const SpectralData back = spectral_from_text(spectral_to_text(sd));
  EXPECT_EQ(back.eigenvalues, sd.eigenvalues);
  EXPECT_EQ(back.eigfun, sd.eigfun);
  EXPECT_EQ(back.weights, sd.weights);
  EXPECT_EQ(back.points.points, sd.points.points);
  EXPECT_EQ(back.points.kind, SpaceKind::Cone);
  EXPECT_EQ(back.provenance, sd.provenance);

  SpectralFiles broken = spectral_to_text(sd);
  broken.eigfun_csv += "99,1\n";
  EXPECT_THROW(spectral_from_text(broken), std::invalid_argument);
}
