#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "specrecon/model_spaces.hpp"
#include "specrecon/spectral.hpp"

namespace specrecon {

/// Shortest decimal string that parses back to the same binary64.
std::string format_double(double v);
double parse_double(std::string_view s);

/// Lowercase hex SHA-256.
std::string sha256_hex(std::string_view data);
std::string sha256_file(const std::filesystem::path& path);

/// Writes to a sibling temporary file and renames it into place.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);
std::string read_file(const std::filesystem::path& path);

/// Comma-separated table. Lines starting with '#' are comments; `meta`
/// lines are written as "# key=value" before the header.
struct CsvTable {
  std::vector<std::pair<std::string, std::string>> meta;
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::string meta_value(const std::string& key) const;
  std::string to_string() const;
  static CsvTable parse(std::string_view text);
};

CsvTable matrix_csv(const Eigen::MatrixXd& m, const std::string& prefix = "c");
Eigen::MatrixXd csv_matrix(const CsvTable& t, std::size_t skip_columns = 0);

CsvTable point_cloud_csv(const PointCloud& cloud);
PointCloud csv_point_cloud(const CsvTable& t, SpaceKind kind);

/// JSON header (eigenvalues, weights, provenance, points) and eigenfunction
/// CSV (row j = phi_j at every point).
struct SpectralFiles {
  std::string header_json;
  std::string eigfun_csv;
};
SpectralFiles spectral_to_text(const SpectralData& sd);
SpectralData spectral_from_text(const SpectralFiles& files);

}  // namespace specrecon
