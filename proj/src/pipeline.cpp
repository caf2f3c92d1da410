#include "specrecon/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <sstream>

#include "json.hpp"
#include "specrecon/errors.hpp"
#include "specrecon/finite_metric.hpp"
#include "specrecon/io.hpp"
#include "specrecon/parallel.hpp"
#include "specrecon/rng.hpp"
#include "specrecon/singular_detect.hpp"
#include "specrecon/spectral.hpp"

namespace specrecon {

using nlohmann::json;

namespace {

std::atomic<bool> g_cancel{false};

}  // namespace

void request_cancel() noexcept { g_cancel.store(true); }
bool cancel_requested() noexcept { return g_cancel.load(); }
void reset_cancel() noexcept { g_cancel.store(false); }

// ---------------------------------------------------------------------------
// Configuration

namespace {

std::string to_string(SamplingScheme s) {
  switch (s) {
    case SamplingScheme::Helix: return "helix";
    case SamplingScheme::Uniform: return "uniform";
    case SamplingScheme::Equispaced: return "equispaced";
    case SamplingScheme::PolarGrid: return "polar_grid";
  }
  return "?";
}

std::string to_string(SpectralBackend b) { return b == SpectralBackend::Exact ? "exact" : "graph"; }

// 1-based line of the key at `path`, found by walking the raw text for each
// quoted key in turn; 0 when it cannot be located.
int line_of(const std::string& text, const std::vector<std::string>& path) {
  std::size_t pos = 0;
  for (const std::string& key : path) {
    const std::string quoted = "\"" + key + "\"";
    std::size_t at = pos;
    for (;;) {
      at = text.find(quoted, at);
      if (at == std::string::npos) return 0;
      std::size_t after = at + quoted.size();
      while (after < text.size() && std::isspace(static_cast<unsigned char>(text[after]))) ++after;
      if (after < text.size() && text[after] == ':') break;
      at += quoted.size();
    }
    pos = at + 1;
  }
  return 1 + static_cast<int>(std::count(text.begin(), text.begin() + static_cast<long>(pos - 1), '\n'));
}

class Reader {
 public:
  Reader(const json& j, std::vector<std::string> path, const std::string& text,
         const std::string& source)
      : j_(j), path_(std::move(path)), text_(text), source_(source) {}

  [[noreturn]] void fail(const std::string& key, const std::string& msg) const {
    std::vector<std::string> p = path_;
    if (!key.empty()) p.push_back(key);
    std::string dotted;
    for (const auto& k : p) dotted += (dotted.empty() ? "" : ".") + k;
    const int line = line_of(text_, p);
    std::ostringstream out;
    out << source_;
    if (line > 0) out << ":" << line;
    out << ": " << (dotted.empty() ? "<root>" : dotted) << ": " << msg;
    throw ConfigError(out.str());
  }

  void allow(std::initializer_list<const char*> keys) const {
    for (auto it = j_.begin(); it != j_.end(); ++it) {
      bool known = false;
      for (const char* k : keys) known = known || it.key() == k;
      if (!known) fail(it.key(), "unknown key");
    }
  }

  bool has(const char* key) const { return j_.contains(key); }

  Reader sub(const char* key) const {
    const json& v = j_.at(key);
    if (!v.is_object()) fail(key, "expected an object");
    std::vector<std::string> p = path_;
    p.emplace_back(key);
    return Reader(v, std::move(p), text_, source_);
  }

  double num(const char* key, double def) const {
    if (!has(key)) return def;
    const json& v = j_.at(key);
    if (!v.is_number()) fail(key, "expected a number");
    const double x = v.get<double>();
    if (!std::isfinite(x)) fail(key, "expected a finite number");
    return x;
  }

  std::int64_t integer(const char* key, std::int64_t def) const {
    if (!has(key)) return def;
    const json& v = j_.at(key);
    if (!v.is_number_integer()) fail(key, "expected an integer");
    return v.get<std::int64_t>();
  }

  std::uint64_t u64(const char* key, std::uint64_t def) const {
    if (!has(key)) return def;
    const json& v = j_.at(key);
    if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<std::int64_t>() >= 0)) {
      fail(key, "expected a nonnegative integer");
    }
    return v.get<std::uint64_t>();
  }

  std::string str(const char* key, const std::string& def) const {
    if (!has(key)) return def;
    const json& v = j_.at(key);
    if (!v.is_string()) fail(key, "expected a string");
    return v.get<std::string>();
  }

  bool boolean(const char* key, bool def) const {
    if (!has(key)) return def;
    const json& v = j_.at(key);
    if (!v.is_boolean()) fail(key, "expected true or false");
    return v.get<bool>();
  }

  std::optional<std::array<double, 2>> range(const char* key) const {
    if (!has(key)) return std::nullopt;
    const json& v = j_.at(key);
    if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number()) {
      fail(key, "expected [lo, hi]");
    }
    std::array<double, 2> r{v[0].get<double>(), v[1].get<double>()};
    if (!(r[0] <= r[1])) fail(key, "expected lo <= hi");
    return r;
  }

  void require(bool ok, const char* key, const std::string& msg) const {
    if (!ok) fail(key, msg);
  }

 private:
  const json& j_;
  std::vector<std::string> path_;
  const std::string& text_;
  const std::string& source_;
};

Space read_space(const Reader& r) {
  const std::string kind = r.str("kind", "");
  try {
    if (kind == "torus") {
      r.allow({"kind", "R", "r"});
      return FlatTorus(r.num("R", 10.0), r.num("r", 0.5));
    }
    if (kind == "circle") {
      r.allow({"kind", "R"});
      return Circle(r.num("R", 1.0));
    }
    if (kind == "cone") {
      r.allow({"kind", "m", "rho_max"});
      return FlatCone(static_cast<int>(r.integer("m", 3)), r.num("rho_max", 3.0));
    }
  } catch (const std::invalid_argument& e) {
    r.fail("", e.what());
  }
  r.fail("kind", "expected \"torus\", \"circle\" or \"cone\"");
}

SamplingScheme default_scheme(const Space& space) {
  switch (kind_of(space)) {
    case SpaceKind::Torus: return SamplingScheme::Helix;
    case SpaceKind::Circle: return SamplingScheme::Equispaced;
    case SpaceKind::Cone: return SamplingScheme::Uniform;
  }
  return SamplingScheme::Uniform;
}

}  // namespace

ExperimentConfig parse_config(const std::string& text, const std::string& source) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(source + ": " + e.what());
  }
  if (!root.is_object()) throw ConfigError(source + ": top level must be an object");
  const Reader r(root, {}, text, source);
  r.allow({"schema_version", "seed", "space", "sampling", "spectral", "embedding", "net", "recon",
           "constraints", "output"});

  ExperimentConfig cfg;
  r.require(r.has("schema_version"), "schema_version", "missing");
  cfg.schema_version = static_cast<int>(r.integer("schema_version", 0));
  r.require(cfg.schema_version == kSchemaVersion, "schema_version",
            "unsupported version (expected " + std::to_string(kSchemaVersion) + ")");
  cfg.seed = r.u64("seed", cfg.seed);

  r.require(r.has("space"), "space", "missing");
  cfg.space = read_space(r.sub("space"));

  cfg.sampling.scheme = default_scheme(cfg.space);
  if (r.has("sampling")) {
    const Reader s = r.sub("sampling");
    s.allow({"scheme", "n", "m", "n_rho", "n_theta"});
    const std::string scheme = s.str("scheme", to_string(cfg.sampling.scheme));
    if (scheme == "helix") cfg.sampling.scheme = SamplingScheme::Helix;
    else if (scheme == "uniform") cfg.sampling.scheme = SamplingScheme::Uniform;
    else if (scheme == "equispaced") cfg.sampling.scheme = SamplingScheme::Equispaced;
    else if (scheme == "polar_grid") cfg.sampling.scheme = SamplingScheme::PolarGrid;
    else s.fail("scheme", "expected helix, uniform, equispaced or polar_grid");
    const std::int64_t n = s.integer("n", static_cast<std::int64_t>(cfg.sampling.n));
    s.require(n >= 4, "n", "need at least 4 samples");
    cfg.sampling.n = static_cast<std::size_t>(n);
    cfg.sampling.m = static_cast<int>(s.integer("m", cfg.sampling.m));
    cfg.sampling.n_rho = static_cast<int>(s.integer("n_rho", cfg.sampling.n_rho));
    cfg.sampling.n_theta = static_cast<int>(s.integer("n_theta", cfg.sampling.n_theta));
    s.require(cfg.sampling.n_rho >= 1, "n_rho", "must be >= 1");
    s.require(cfg.sampling.n_theta >= 1, "n_theta", "must be >= 1");
    const SpaceKind k = kind_of(cfg.space);
    const bool fits = cfg.sampling.scheme == SamplingScheme::Uniform ||
                      (cfg.sampling.scheme == SamplingScheme::Helix && k == SpaceKind::Torus) ||
                      (cfg.sampling.scheme == SamplingScheme::Equispaced && k == SpaceKind::Circle) ||
                      (cfg.sampling.scheme == SamplingScheme::PolarGrid && k == SpaceKind::Cone);
    s.require(fits, "scheme", "scheme '" + scheme + "' does not apply to a " + to_string(k));
  }

  if (r.has("spectral")) {
    const Reader s = r.sub("spectral");
    s.allow({"backend", "J", "bandwidth"});
    const std::string b = s.str("backend", "exact");
    if (b == "exact") cfg.spectral.backend = SpectralBackend::Exact;
    else if (b == "graph") cfg.spectral.backend = SpectralBackend::Graph;
    else s.fail("backend", "expected exact or graph");
    cfg.spectral.J = static_cast<int>(s.integer("J", cfg.spectral.J));
    s.require(cfg.spectral.J >= 1, "J", "must be >= 1");
    cfg.spectral.bandwidth = s.num("bandwidth", cfg.spectral.bandwidth);
  }

  if (r.has("embedding")) {
    const Reader s = r.sub("embedding");
    s.allow({"case", "t", "K", "J", "theta_tol", "symmetric"});
    const std::string c = s.str("case", "C1");
    if (c == "C1") cfg.embedding.kernel = KernelCase::C1;
    else if (c == "C2") cfg.embedding.kernel = KernelCase::C2;
    else s.fail("case", "expected C1 or C2");
    cfg.embedding.t = s.num("t", cfg.embedding.t);
    s.require(cfg.embedding.t > 0.0, "t", "must be > 0");
    cfg.embedding.K = static_cast<int>(s.integer("K", cfg.embedding.K));
    cfg.embedding.J = static_cast<int>(s.integer("J", cfg.embedding.J));
    s.require(cfg.embedding.K >= 1, "K", "must be >= 1");
    s.require(cfg.embedding.J >= 1, "J", "must be >= 1");
    cfg.embedding.theta_tol = s.num("theta_tol", cfg.embedding.theta_tol);
    s.require(cfg.embedding.theta_tol > 0.0, "theta_tol", "must be > 0");
    cfg.embedding.symmetric = s.boolean("symmetric", cfg.embedding.symmetric);
  }

  if (r.has("net")) {
    const Reader s = r.sub("net");
    s.allow({"eta", "region"});
    cfg.net.eta = s.num("eta", cfg.net.eta);
    s.require(cfg.net.eta > 0.0, "eta", "must be > 0");
    if (s.has("region")) {
      const Reader g = s.sub("region");
      g.allow({"u", "v"});
      cfg.net.region.u = g.range("u");
      cfg.net.region.v = g.range("v");
    }
  }
  cfg.recon.eta = cfg.net.eta;

  if (r.has("recon")) {
    const Reader s = r.sub("recon");
    s.allow({"c_star", "sigma", "dimY", "C_s", "tau", "probe_eps", "max_active", "probe_points",
             "calibration_points", "beam_radius"});
    ReconParams& p = cfg.recon;
    p.c_star = s.num("c_star", p.c_star);
    p.sigma = s.num("sigma", p.sigma);
    s.require(p.sigma > 0.0, "sigma", "must be > 0");
    p.dimY = static_cast<int>(s.integer("dimY", p.dimY));
    p.C_s = s.num("C_s", p.C_s);
    s.require(p.C_s > 0.0, "C_s", "must be > 0");
    p.tau = s.num("tau", p.tau);
    p.probe_eps = s.num("probe_eps", p.probe_eps);
    const std::int64_t ma = s.integer("max_active", static_cast<std::int64_t>(p.max_active));
    s.require(ma >= 1 && ma <= 16, "max_active", "must be in [1, 16]");
    p.max_active = static_cast<std::size_t>(ma);
    const std::int64_t pp = s.integer("probe_points", static_cast<std::int64_t>(p.probe_points));
    s.require(pp >= 1, "probe_points", "must be >= 1");
    p.probe_points = static_cast<std::size_t>(pp);
    const std::int64_t cp =
        s.integer("calibration_points", static_cast<std::int64_t>(p.calibration_points));
    s.require(cp >= 1, "calibration_points", "must be >= 1");
    p.calibration_points = static_cast<std::size_t>(cp);
    p.beam_radius = static_cast<int>(s.integer("beam_radius", p.beam_radius));
    s.require(p.beam_radius >= 0, "beam_radius", "must be >= 0");
  }

  if (r.has("constraints")) {
    const Reader s = r.sub("constraints");
    s.allow({"E1", "eps1", "time_grid", "max_iter"});
    ConstraintParams& c = cfg.constraints;
    c.E1 = s.num("E1", c.E1);
    c.eps1 = s.num("eps1", c.eps1);
    s.require(c.eps1 > 0.0, "eps1", "must be > 0");
    c.time_grid = static_cast<int>(s.integer("time_grid", c.time_grid));
    c.max_iter = static_cast<int>(s.integer("max_iter", c.max_iter));
    s.require(c.max_iter >= 1, "max_iter", "must be >= 1");
  }

  if (r.has("output")) {
    const Reader s = r.sub("output");
    s.allow({"dir", "write_spectral"});
    cfg.output_dir = s.str("dir", cfg.output_dir);
    cfg.write_spectral = s.boolean("write_spectral", cfg.write_spectral);
  }
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::string text;
  try {
    text = read_file(path);
  } catch (const std::exception& e) {
    throw ConfigError(e.what());
  }
  return parse_config(text, path.string());
}

namespace {

json space_json(const Space& space) {
  return std::visit(
      [](const auto& s) -> json {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, FlatTorus>) return {{"kind", "torus"}, {"R", s.R()}, {"r", s.r()}};
        else if constexpr (std::is_same_v<T, Circle>) return {{"kind", "circle"}, {"R", s.R()}};
        else return {{"kind", "cone"}, {"m", s.m()}, {"rho_max", s.rho_max()}};
      },
      space);
}

json region_json(const NetRegion& r) {
  json j = json::object();
  if (r.u) j["u"] = {(*r.u)[0], (*r.u)[1]};
  if (r.v) j["v"] = {(*r.v)[0], (*r.v)[1]};
  return j;
}

}  // namespace

std::string ExperimentConfig::canonical_json() const {
  json j;
  j["schema_version"] = schema_version;
  j["seed"] = seed;
  j["space"] = space_json(space);
  j["sampling"] = {{"scheme", to_string(sampling.scheme)}, {"n", sampling.n}, {"m", sampling.m},
                   {"n_rho", sampling.n_rho}, {"n_theta", sampling.n_theta}};
  j["spectral"] = {{"backend", to_string(spectral.backend)}, {"J", spectral.J},
                   {"bandwidth", spectral.bandwidth}};
  j["embedding"] = {{"case", to_string(embedding.kernel)}, {"t", embedding.t}, {"K", embedding.K},
                    {"J", embedding.J}, {"theta_tol", embedding.theta_tol},
                    {"symmetric", embedding.symmetric}};
  j["net"] = {{"eta", net.eta},
              {"region", region_json(net.region)}};
  j["recon"] = {{"c_star", recon.c_star},
                {"sigma", recon.sigma},
                {"dimY", recon.dimY},
                {"C_s", recon.C_s},
                {"tau", recon.tau},
                {"probe_eps", recon.probe_eps},
                {"max_active", recon.max_active},
                {"probe_points", recon.probe_points},
                {"calibration_points", recon.calibration_points},
                {"beam_radius", recon.beam_radius}};
  j["constraints"] = {{"E1", constraints.E1}, {"eps1", constraints.eps1},
                      {"time_grid", constraints.time_grid}, {"max_iter", constraints.max_iter}};
  // The output directory does not affect any artifact and stays out of the hash.
  j["output"] = {{"write_spectral", write_spectral}};
  return j.dump();
}

std::string ExperimentConfig::hash() const { return sha256_hex(canonical_json()); }

// ---------------------------------------------------------------------------
// Stages

namespace {

template <class Fn>
auto stage(const char* name, Fn&& fn) {
  if (cancel_requested()) throw Cancelled();
  try {
    return fn();
  } catch (const Cancelled&) {
    throw;
  } catch (const StageError&) {
    throw;
  } catch (const NumericalError& e) {
    throw StageError(name, e.what(), true);
  } catch (const std::exception& e) {
    throw StageError(name, e.what(), false);
  }
}

struct Seeds {
  std::uint64_t sampling;
  std::uint64_t recon;
};

Seeds derive_seeds(std::uint64_t seed) {
  SplitMix64 root(seed);
  Seeds s;
  s.sampling = root.next();
  s.recon = root.next();
  return s;
}

struct Samples {
  PointCloud cloud;
  Eigen::VectorXd weights;  // empty: uniform
};

Samples make_samples(const ExperimentConfig& cfg, std::uint64_t seed) {
  Samples out;
  const SamplingSpec& s = cfg.sampling;
  switch (s.scheme) {
    case SamplingScheme::Helix:
      out.cloud = sample_helix(std::get<FlatTorus>(cfg.space), s.n, s.m, seed);
      break;
    case SamplingScheme::Uniform:
      out.cloud = sample_uniform(cfg.space, s.n, seed);
      break;
    case SamplingScheme::Equispaced:
      out.cloud = equispaced_circle(s.n);
      break;
    case SamplingScheme::PolarGrid: {
      WeightedCloud wc = cone_polar_grid(std::get<FlatCone>(cfg.space), s.n_rho, s.n_theta);
      out.cloud = std::move(wc.cloud);
      out.weights = std::move(wc.weights);
      break;
    }
  }
  return out;
}

SpectralData make_spectral(const ExperimentConfig& cfg, const Samples& smp) {
  const int J = cfg.spectral.J;
  if (cfg.spectral.backend == SpectralBackend::Graph) {
    const Eigen::MatrixXd d = pairwise_distances(cfg.space, smp.cloud);
    const double bw = cfg.spectral.bandwidth > 0.0 ? cfg.spectral.bandwidth : default_bandwidth(d);
    return graph_laplacian_spectrum(d, smp.cloud, bw, J);
  }
  return std::visit(
      [&](const auto& s) -> SpectralData {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, FlatTorus>) return torus_spectrum(s, J, smp.cloud);
        else if constexpr (std::is_same_v<T, Circle>) return circle_spectrum(s, J, smp.cloud);
        else return cone_spectrum(s, J, smp.cloud, smp.weights);
      },
      cfg.space);
}

bool in_range(const std::optional<std::array<double, 2>>& r, double x) {
  return !r || (x >= (*r)[0] && x <= (*r)[1]);
}

std::vector<std::size_t> region_indices(const ExperimentConfig& cfg, const PointCloud& cloud) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    if (in_range(cfg.net.region.u, cloud.points[i][0]) && in_range(cfg.net.region.v, cloud.points[i][1])) {
      out.push_back(i);
    }
  }
  return out;
}

class Bundle {
 public:
  explicit Bundle(std::string hash) : hash_(std::move(hash)) {}

  void csv(const std::string& name, CsvTable t) {
    t.meta.insert(t.meta.begin(), {"config_sha256", hash_});
    arts_.push_back({name, t.to_string()});
  }
  void raw_csv(const std::string& name, const std::string& body) {
    arts_.push_back({name, "# config_sha256=" + hash_ + "\n" + body});
  }
  void json_doc(const std::string& name, json j) {
    j["config_sha256"] = hash_;
    arts_.push_back({name, j.dump(2) + "\n"});
  }
  std::vector<Artifact> take() { return std::move(arts_); }
  const std::string& hash() const { return hash_; }

 private:
  std::string hash_;
  std::vector<Artifact> arts_;
};

std::string fmt(double v) { return format_double(v); }

// JSON numbers must be finite; non-finite diagnostics become null.
json jnum(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

}  // namespace

RunResult cmd_embed(const ExperimentConfig& cfg, const RunOptions&) {
  const auto* torus = std::get_if<FlatTorus>(&cfg.space);
  if (!torus) throw ConfigError("embed requires a torus space");
  const Seeds seeds = derive_seeds(cfg.seed);
  Bundle out(cfg.hash());
  const EmbeddingSpec& es = cfg.embedding;

  const Samples smp = stage("sample", [&] { return make_samples(cfg, seeds.sampling); });
  const KernelMatrix k = stage("kernel", [&] {
    if (es.kernel == KernelCase::C1) return heat_kernel_matrix(*torus, smp.cloud, es.t, es.theta_tol);
    return exp_kernel_matrix(pairwise_distances(cfg.space, smp.cloud), es.t);
  });
  const SvdFactor f = stage("factor", [&] {
    if (es.symmetric) return symmetric_factor(k);
    return svd_factor(row_normalize(k), static_cast<Eigen::Index>(es.K + es.J - 1));
  });
  const EmbeddingResult e = stage("embed", [&] { return eigenfunction_map(f, es.K, es.J, es.kernel); });

  std::vector<double> s2(smp.cloud.size());
  for (std::size_t i = 0; i < s2.size(); ++i) s2[i] = smp.cloud.points[i][1];
  json diag;
  diag["case"] = to_string(es.kernel);
  diag["n"] = smp.cloud.size();
  diag["K"] = es.K;
  diag["J"] = es.J;
  json sv = json::array();
  for (Eigen::Index p = 0; p < f.singular_values.size(); ++p) sv.push_back(jnum(f.singular_values(p)));
  diag["leading_singular_values"] = sv;
  if (es.J == 2) {
    const CircleReport rep = stage("diagnostics", [&] { return circle_diagnostics(e, s2); });
    diag["center"] = {jnum(rep.center_x), jnum(rep.center_y)};
    diag["radius"] = jnum(rep.radius);
    diag["radial_rms_relative"] = jnum(rep.radial_rms_relative);
    diag["inversion_fraction"] = jnum(rep.inversion_fraction);
  }
  if (cancel_requested()) throw Cancelled();

  out.csv("samples.csv", point_cloud_csv(smp.cloud));
  CsvTable helix;
  helix.header = {"index", "x", "y", "z"};
  for (std::size_t i = 0; i < smp.cloud.size(); ++i) {
    const auto p = embed_torus_r3(*torus, smp.cloud.points[i]);
    helix.rows.push_back({std::to_string(i), fmt(p[0]), fmt(p[1]), fmt(p[2])});
  }
  out.csv("helix_3d.csv", std::move(helix));
  CsvTable emb;
  emb.header.push_back("index");
  for (int j = 1; j <= es.J; ++j) emb.header.push_back("coord_" + std::to_string(j));
  emb.header.push_back("s1");
  emb.header.push_back("s2");
  for (Eigen::Index i = 0; i < e.coords.rows(); ++i) {
    std::vector<std::string> row{std::to_string(i)};
    for (Eigen::Index j = 0; j < e.coords.cols(); ++j) row.push_back(fmt(e.coords(i, j)));
    row.push_back(fmt(smp.cloud.points[i][0]));
    row.push_back(fmt(smp.cloud.points[i][1]));
    emb.rows.push_back(std::move(row));
  }
  out.csv("embedding.csv", std::move(emb));
  out.json_doc("diagnostics.json", diag);

  RunResult r;
  r.command = "embed";
  r.artifacts = out.take();
  diag["command"] = "embed";
  diag["config_sha256"] = cfg.hash();
  r.summary_json = diag.dump(2) + "\n";
  return r;
}

namespace {

RunResult recon_run(const ExperimentConfig& cfg, const RunOptions& opt, bool full) {
  const Seeds seeds = derive_seeds(cfg.seed);
  Bundle out(cfg.hash());
  ReconParams rp = cfg.recon;
  rp.eta = cfg.net.eta;
  rp.seed = seeds.recon;
  rp.threads = opt.threads;

  const Samples smp = stage("sample", [&] { return make_samples(cfg, seeds.sampling); });
  const SpectralData sd = stage("spectral", [&] { return make_spectral(cfg, smp); });
  const NetWithPatches net = stage("net", [&] {
    const std::vector<std::size_t> amb = region_indices(cfg, smp.cloud);
    if (amb.empty()) throw NumericalError("no sample points inside the net region");
    return max_separated_net(cfg.space, smp.cloud, cfg.net.eta, amb);
  });
  const MeasureOracle oracle(sd, net, diameter(cfg.space), cfg.constraints);
  const RStar rstar = stage("rstar", [&] { return build_rstar(oracle, cfg.space, smp.cloud, rp); });
  const std::size_t n = net.size();
  const Eigen::MatrixXd D = stage("distances", [&] { return net_distance_matrix(rstar, n); });
  Eigen::MatrixXd truth(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t k = 0; k < n; ++k) {
      truth(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) =
          distance(cfg.space, smp.cloud.points[net.anchors[i]], smp.cloud.points[net.anchors[k]]);
    }
  }
  const int dim = effective_dim(cfg.space, rp);
  const CutData cut = stage("scan", [&] { return scan_cut_data(oracle, D, rstar.c_star, dim, rp); });
  const std::vector<SliceIndex> s_star = stage("select", [&] { return select_singular_slices(rstar, cut, rp); });
  const SingularSelection sel = stage("classify", [&] { return classify_net(rstar, s_star, D, rp); });

  json summary;
  summary["command"] = full ? "reconstruct" : "singular";
  summary["config_sha256"] = out.hash();
  summary["space"] = space_json(cfg.space);
  summary["samples"] = smp.cloud.size();
  summary["spectral"] = {{"provenance", sd.provenance}, {"J", sd.J()}, {"lambda_J", jnum(sd.eigenvalues(sd.J()))}};
  summary["net_size"] = n;
  summary["eta"] = rp.eta;
  summary["c_star"] = jnum(rstar.c_star);
  summary["admission_threshold"] = jnum(rstar.threshold);
  summary["rstar"] = {{"admitted", rstar.slices.size()}, {"candidates", rstar.candidates},
                      {"probes_covered", rstar.probes_covered}, {"probes", rstar.probes},
                      {"max_measure", jnum(rstar.max_measure)}};
  const double sup_err = n > 0 ? (D - truth).cwiseAbs().maxCoeff() : 0.0;
  summary["sup_distance_error"] = jnum(sup_err);
  summary["bound_8eta"] = 8.0 * rp.eta;
  summary["cut_records"] = cut.records.size();
  summary["s_star"] = s_star.size();
  summary["far"] = sel.far_indices.size();
  summary["near"] = sel.near_indices.size();
  if (const auto* cone = std::get_if<FlatCone>(&cfg.space)) {
    (void)cone;
    // The apex is the singular set; rho is the distance to it.
    double near_max = 0.0;
    double far_min = std::numeric_limits<double>::infinity();
    for (std::size_t i : sel.near_indices) near_max = std::max(near_max, smp.cloud.points[net.anchors[i]][0]);
    for (std::size_t i : sel.far_indices) far_min = std::min(far_min, smp.cloud.points[net.anchors[i]][0]);
    summary["ground_truth"] = {{"near_max_apex_distance", sel.near_indices.empty() ? json(nullptr) : jnum(near_max)},
                               {"far_min_apex_distance", sel.far_indices.empty() ? json(nullptr) : jnum(far_min)}};
  }

  if (full && !sel.far_indices.empty()) {
    const auto& far = sel.far_indices;
    const auto m = static_cast<Eigen::Index>(far.size());
    Eigen::MatrixXd dfar(m, m), tfar(m, m);
    for (Eigen::Index i = 0; i < m; ++i) {
      for (Eigen::Index k = 0; k < m; ++k) {
        dfar(i, k) = D(static_cast<Eigen::Index>(far[i]), static_cast<Eigen::Index>(far[k]));
        tfar(i, k) = truth(static_cast<Eigen::Index>(far[i]), static_cast<Eigen::Index>(far[k]));
      }
    }
    const RepairResult rep = stage("repair", [&] { return repair_metric(dfar); });
    const RepairResult true_metric = stage("repair", [&] { return repair_metric(tfar); });
    const GhBound gh = stage("gh", [&] {
      if (far.size() <= kGhExactCap) return gh_exact_small(rep.metric, true_metric.metric, opt.threads);
      return gh_upper_bound(rep.metric, true_metric.metric, seeds.recon);
    });
    summary["repair_max_deviation"] = jnum(rep.max_deviation);
    summary["repaired_is_metric"] = is_metric(rep.metric.d);
    summary["gh"] = {{"lower", jnum(gh.lower)}, {"upper", jnum(gh.upper)},
                     {"exact", far.size() <= kGhExactCap}};
    CsvTable mt = matrix_csv(rep.metric.d, "d");
    out.csv("metric_far.csv", std::move(mt));
    json ghj;
    ghj["lower"] = jnum(gh.lower);
    ghj["upper"] = jnum(gh.upper);
    ghj["exact"] = far.size() <= kGhExactCap;
    json w = json::array();
    for (const auto& [i, j] : gh.witness) w.push_back({far[i], far[j]});
    ghj["witness"] = w;
    ghj["far_indices"] = far;
    out.json_doc("gh.json", ghj);
  }
  if (cancel_requested()) throw Cancelled();

  out.csv("samples.csv", point_cloud_csv(smp.cloud));
  CsvTable nt;
  nt.header = {"index", "sample", "u", "v", "patch_size"};
  for (std::size_t i = 0; i < n; ++i) {
    const Coord& p = smp.cloud.points[net.anchors[i]];
    nt.rows.push_back({std::to_string(i), std::to_string(net.anchors[i]), fmt(p[0]), fmt(p[1]),
                       std::to_string(net.patches[i].size())});
  }
  out.csv("net.csv", std::move(nt));
  CsvTable rt;
  for (std::size_t i = 0; i < n; ++i) rt.header.push_back("beta_" + std::to_string(i));
  rt.header.push_back("measure");
  for (const SliceFunction& f : rstar.slices) {
    std::vector<std::string> row;
    for (int b : f.index.beta) row.push_back(std::to_string(b));
    row.push_back(fmt(f.measure));
    rt.rows.push_back(std::move(row));
  }
  out.csv("rstar.csv", std::move(rt));
  out.csv("distance.csv", matrix_csv(D, "d"));
  out.csv("distance_true.csv", matrix_csv(truth, "d"));
  CsvTable ct;
  ct.header = {"x", "y", "midpoint", "rho_plus_s", "s"};
  for (const CutRecord& c : cut.records) {
    ct.rows.push_back({std::to_string(c.x), std::to_string(c.y), std::to_string(c.midpoint),
                       fmt(c.rho_plus_s), fmt(c.s)});
  }
  out.csv("cut_data.csv", std::move(ct));
  CsvTable lt;
  lt.header = {"note"};
  for (std::string d : cut.diagnostics) {
    std::replace(d.begin(), d.end(), ',', ';');
    lt.rows.push_back({d});
  }
  out.csv("scan_log.csv", std::move(lt));
  CsvTable cl;
  cl.header = {"index", "class", "nearest_beta"};
  std::vector<bool> is_far(n, false);
  for (std::size_t i : sel.far_indices) is_far[i] = true;
  for (std::size_t i = 0; i < n; ++i) {
    std::string beta;
    for (int b : sel.assigned[i].beta) beta += (beta.empty() ? "" : " ") + std::to_string(b);
    cl.rows.push_back({std::to_string(i), is_far[i] ? "far" : "near", beta});
  }
  out.csv("classification.csv", std::move(cl));
  if (cfg.write_spectral) {
    const SpectralFiles sf = spectral_to_text(sd);
    json h = json::parse(sf.header_json);
    out.json_doc("spectral.json", h);
    out.raw_csv("spectral_eigfun.csv", sf.eigfun_csv);
  }

  RunResult r;
  r.command = full ? "reconstruct" : "singular";
  r.artifacts = out.take();
  r.summary_json = summary.dump(2) + "\n";
  return r;
}

}  // namespace

RunResult cmd_reconstruct(const ExperimentConfig& cfg, const RunOptions& opt) {
  return recon_run(cfg, opt, true);
}

RunResult cmd_singular(const ExperimentConfig& cfg, const RunOptions& opt) {
  return recon_run(cfg, opt, false);
}

// ---------------------------------------------------------------------------
// Artifacts

void write_run(const std::filesystem::path& dir, const ExperimentConfig& cfg, const RunResult& run) {
  if (cancel_requested()) throw Cancelled();
  json manifest;
  manifest["schema_version"] = kSchemaVersion;
  manifest["command"] = run.command;
  manifest["config_sha256"] = cfg.hash();
  json files = json::object();
  for (const Artifact& a : run.artifacts) {
    write_file_atomic(dir / a.name, a.content);
    files[a.name] = sha256_hex(a.content);
  }
  write_file_atomic(dir / "summary.json", run.summary_json);
  files["summary.json"] = sha256_hex(run.summary_json);
  manifest["artifacts"] = files;
  write_file_atomic(dir / "manifest.json", manifest.dump(2) + "\n");
}

namespace {

std::string embedded_hash(const std::string& name, const std::string& content) {
  if (name.size() > 4 && name.substr(name.size() - 4) == ".csv") {
    return CsvTable::parse(content).meta_value("config_sha256");
  }
  const json j = json::parse(content, nullptr, false);
  if (j.is_object() && j.contains("config_sha256") && j["config_sha256"].is_string()) {
    return j["config_sha256"].get<std::string>();
  }
  return {};
}

}  // namespace

VerifyReport verify_run(const std::filesystem::path& dir, const std::optional<ExperimentConfig>& cfg) {
  VerifyReport rep;
  auto problem = [&rep](std::string s) {
    rep.ok = false;
    rep.problems.push_back(std::move(s));
  };
  json manifest;
  try {
    manifest = json::parse(read_file(dir / "manifest.json"));
  } catch (const std::exception& e) {
    problem(std::string("manifest.json unreadable: ") + e.what());
    return rep;
  }
  const std::string want = manifest.value("config_sha256", std::string());
  if (want.empty()) problem("manifest.json has no config hash");
  if (cfg && cfg->hash() != want) problem("config hash differs from the manifest");
  if (!manifest.contains("artifacts") || !manifest["artifacts"].is_object()) {
    problem("manifest.json lists no artifacts");
    return rep;
  }
  for (auto it = manifest["artifacts"].begin(); it != manifest["artifacts"].end(); ++it) {
    const std::string& name = it.key();
    std::string content;
    try {
      content = read_file(dir / name);
    } catch (const std::exception&) {
      problem(name + ": missing");
      continue;
    }
    if (sha256_hex(content) != it.value().get<std::string>()) problem(name + ": content hash mismatch");
    if (embedded_hash(name, content) != want) problem(name + ": embedded config hash mismatch");
  }
  return rep;
}

}  // namespace specrecon
