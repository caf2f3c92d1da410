#include "specrecon/io.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <stdexcept>
#include <system_error>

#include <openssl/evp.h>
#include <unistd.h>

#include "json.hpp"

namespace specrecon {

using nlohmann::json;

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  if (res.ec != std::errc()) throw std::runtime_error("format_double: conversion failed");
  return std::string(buf, res.ptr);
}

double parse_double(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  double v = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
    throw std::invalid_argument("parse_double: not a number: '" + std::string(s) + "'");
  }
  return v;
}

std::string sha256_hex(std::string_view data) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), md, &len, EVP_sha256(), nullptr) != 1) {
    throw std::runtime_error("sha256_hex: digest failed");
  }
  std::ostringstream out;
  for (unsigned int i = 0; i < len; ++i) {
    out << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(md[i]);
  }
  return out.str();
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string sha256_file(const std::filesystem::path& path) { return sha256_hex(read_file(path)); }

void write_file_atomic(const std::filesystem::path& path, std::string_view content) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::filesystem::path tmp = path;
  tmp += ".tmp." + std::to_string(::getpid());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    out.flush();
    if (!out) {
      out.close();
      std::filesystem::remove(tmp);
      throw std::runtime_error("short write to " + tmp.string());
    }
  }
  std::filesystem::rename(tmp, path);
}

std::string CsvTable::meta_value(const std::string& key) const {
  for (const auto& [k, v] : meta) {
    if (k == key) return v;
  }
  return {};
}

std::string CsvTable::to_string() const {
  std::string out;
  for (const auto& [k, v] : meta) out += "# " + k + "=" + v + "\n";
  auto line = [&out](const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i) out += ',';
      out += cells[i];
    }
    out += '\n';
  };
  line(header);
  for (const auto& r : rows) line(r);
  return out;
}

CsvTable CsvTable::parse(std::string_view text) {
  CsvTable t;
  bool have_header = false;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty()) continue;
    if (line.front() == '#') {
      line.remove_prefix(1);
      while (!line.empty() && line.front() == ' ') line.remove_prefix(1);
      const auto eq = line.find('=');
      if (eq != std::string_view::npos) {
        t.meta.emplace_back(std::string(line.substr(0, eq)), std::string(line.substr(eq + 1)));
      }
      continue;
    }
    std::vector<std::string> cells;
    std::size_t c = 0;
    for (;;) {
      const auto comma = line.find(',', c);
      cells.emplace_back(line.substr(c, comma == std::string_view::npos ? line.npos : comma - c));
      if (comma == std::string_view::npos) break;
      c = comma + 1;
    }
    if (!have_header) {
      t.header = std::move(cells);
      have_header = true;
    } else {
      t.rows.push_back(std::move(cells));
    }
  }
  return t;
}

CsvTable matrix_csv(const Eigen::MatrixXd& m, const std::string& prefix) {
  CsvTable t;
  t.header.push_back("index");
  for (Eigen::Index j = 0; j < m.cols(); ++j) t.header.push_back(prefix + std::to_string(j));
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    std::vector<std::string> r{std::to_string(i)};
    for (Eigen::Index j = 0; j < m.cols(); ++j) r.push_back(format_double(m(i, j)));
    t.rows.push_back(std::move(r));
  }
  return t;
}

Eigen::MatrixXd csv_matrix(const CsvTable& t, std::size_t skip_columns) {
  if (t.header.size() < skip_columns) throw std::invalid_argument("csv_matrix: too few columns");
  const auto cols = static_cast<Eigen::Index>(t.header.size() - skip_columns);
  Eigen::MatrixXd m(static_cast<Eigen::Index>(t.rows.size()), cols);
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    if (t.rows[i].size() != t.header.size()) {
      throw std::invalid_argument("csv_matrix: row " + std::to_string(i) + " has the wrong width");
    }
    for (Eigen::Index j = 0; j < cols; ++j) {
      m(static_cast<Eigen::Index>(i), j) = parse_double(t.rows[i][skip_columns + j]);
    }
  }
  return m;
}

CsvTable point_cloud_csv(const PointCloud& cloud) {
  CsvTable t;
  t.meta.emplace_back("space", to_string(cloud.kind));
  t.meta.emplace_back("seed", std::to_string(cloud.seed));
  t.header = {"index", "u", "v"};
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    t.rows.push_back({std::to_string(i), format_double(cloud.points[i][0]),
                      format_double(cloud.points[i][1])});
  }
  return t;
}

PointCloud csv_point_cloud(const CsvTable& t, SpaceKind kind) {
  PointCloud cloud;
  cloud.kind = kind;
  const std::string seed = t.meta_value("seed");
  if (!seed.empty()) cloud.seed = std::stoull(seed);
  const Eigen::MatrixXd m = csv_matrix(t, 1);
  if (m.cols() != 2) throw std::invalid_argument("csv_point_cloud: expected two coordinates");
  for (Eigen::Index i = 0; i < m.rows(); ++i) cloud.points.push_back({m(i, 0), m(i, 1)});
  return cloud;
}

namespace {

SpaceKind kind_from_string(const std::string& s) {
  if (s == "torus") return SpaceKind::Torus;
  if (s == "circle") return SpaceKind::Circle;
  if (s == "cone") return SpaceKind::Cone;
  throw std::invalid_argument("unknown space tag '" + s + "'");
}

// Doubles travel as shortest round-trip strings so the JSON library's own
// formatting cannot lose bits.
json doubles_json(const Eigen::VectorXd& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(format_double(v(i)));
  return a;
}

Eigen::VectorXd json_doubles(const json& a) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(a.size()));
  for (std::size_t i = 0; i < a.size(); ++i) v(static_cast<Eigen::Index>(i)) = parse_double(a[i].get<std::string>());
  return v;
}

}  // namespace

SpectralFiles spectral_to_text(const SpectralData& sd) {
  json h;
  h["provenance"] = sd.provenance;
  h["J"] = sd.J();
  h["K"] = sd.K();
  h["eigenvalues"] = doubles_json(sd.eigenvalues);
  h["weights"] = doubles_json(sd.weights);
  h["space"] = to_string(sd.points.kind);
  h["seed"] = sd.points.seed;
  json pts = json::array();
  for (const Coord& p : sd.points.points) pts.push_back({format_double(p[0]), format_double(p[1])});
  h["points"] = std::move(pts);

  CsvTable t;
  t.header.push_back("j");
  for (std::size_t k = 0; k < sd.K(); ++k) t.header.push_back("x" + std::to_string(k));
  for (Eigen::Index j = 0; j < sd.eigfun.rows(); ++j) {
    std::vector<std::string> r{std::to_string(j)};
    for (Eigen::Index k = 0; k < sd.eigfun.cols(); ++k) r.push_back(format_double(sd.eigfun(j, k)));
    t.rows.push_back(std::move(r));
  }
  return {h.dump(1) + "\n", t.to_string()};
}

SpectralData spectral_from_text(const SpectralFiles& files) {
  const json h = json::parse(files.header_json);
  SpectralData sd;
  sd.provenance = h.at("provenance").get<std::string>();
  sd.eigenvalues = json_doubles(h.at("eigenvalues"));
  sd.weights = json_doubles(h.at("weights"));
  sd.points.kind = kind_from_string(h.at("space").get<std::string>());
  sd.points.seed = h.at("seed").get<std::uint64_t>();
  for (const json& p : h.at("points")) {
    sd.points.points.push_back({parse_double(p.at(0).get<std::string>()),
                                parse_double(p.at(1).get<std::string>())});
  }
  sd.eigfun = csv_matrix(CsvTable::parse(files.eigfun_csv), 1);
  if (sd.eigfun.rows() != sd.eigenvalues.size() ||
      sd.eigfun.cols() != static_cast<Eigen::Index>(sd.points.size()) ||
      sd.weights.size() != sd.eigfun.cols()) {
    throw std::invalid_argument("spectral_from_text: inconsistent dimensions");
  }
  return sd;
}

}  // namespace specrecon
