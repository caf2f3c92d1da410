#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "specrecon/diffusion_map.hpp"
#include "specrecon/distance_recon.hpp"
#include "specrecon/model_spaces.hpp"
#include "specrecon/wave_control.hpp"

namespace specrecon {

inline constexpr int kSchemaVersion = 1;

enum class SamplingScheme { Helix, Uniform, Equispaced, PolarGrid };
enum class SpectralBackend { Exact, Graph };

struct SamplingSpec {
  SamplingScheme scheme = SamplingScheme::Helix;
  std::size_t n = 2048;
  int m = 35;        // helix winding
  int n_rho = 60;    // polar grid
  int n_theta = 60;
};

struct SpectralSpec {
  SpectralBackend backend = SpectralBackend::Exact;
  int J = 64;
  double bandwidth = 0.0;  // graph backend; <= 0 selects the default heuristic
};

struct EmbeddingSpec {
  KernelCase kernel = KernelCase::C1;
  double t = 100.0;
  int K = 2;
  int J = 2;
  double theta_tol = 1e-14;
  bool symmetric = false;  // symmetric-conjugation factor instead of the SVD
};

/// Inclusive coordinate box restricting where net anchors may lie.
struct NetRegion {
  std::optional<std::array<double, 2>> u;
  std::optional<std::array<double, 2>> v;
};

struct NetSpec {
  double eta = 0.5;
  NetRegion region;
};

struct ExperimentConfig {
  int schema_version = kSchemaVersion;
  std::uint64_t seed = 1;
  Space space = FlatTorus(10.0, 0.5);
  SamplingSpec sampling;
  SpectralSpec spectral;
  EmbeddingSpec embedding;
  NetSpec net;
  ReconParams recon;
  ConstraintParams constraints;
  std::string output_dir = "out";
  bool write_spectral = false;

  /// Canonical JSON of every field (defaults filled in); hashed into artifacts.
  std::string canonical_json() const;
  std::string hash() const;
};

/// Parses and validates a config. Unknown keys, wrong types and bad values
/// raise ConfigError naming `source` and the line of the offending key.
ExperimentConfig parse_config(const std::string& text, const std::string& source = "<config>");
ExperimentConfig load_config(const std::filesystem::path& path);

/// A failure inside a named pipeline stage.
class StageError : public std::runtime_error {
 public:
  StageError(std::string stage, const std::string& what, bool numerical)
      : std::runtime_error(what), stage_(std::move(stage)), numerical_(numerical) {}
  const std::string& stage() const { return stage_; }
  bool numerical() const { return numerical_; }

 private:
  std::string stage_;
  bool numerical_;
};

class Cancelled : public std::runtime_error {
 public:
  Cancelled() : std::runtime_error("cancelled") {}
};

/// Async-signal-safe; checked between stages.
void request_cancel() noexcept;
bool cancel_requested() noexcept;
void reset_cancel() noexcept;

struct Artifact {
  std::string name;
  std::string content;
};

struct RunResult {
  std::string command;
  std::vector<Artifact> artifacts;  // summary and manifest excluded
  std::string summary_json;
};

struct RunOptions {
  unsigned threads = 0;  // 0: default_threads()
};

RunResult cmd_embed(const ExperimentConfig& cfg, const RunOptions& opt = {});
RunResult cmd_reconstruct(const ExperimentConfig& cfg, const RunOptions& opt = {});
RunResult cmd_singular(const ExperimentConfig& cfg, const RunOptions& opt = {});

/// Writes every artifact, summary.json and finally manifest.json (name ->
/// sha256, plus the config hash), each via temp-then-rename.
void write_run(const std::filesystem::path& dir, const ExperimentConfig& cfg, const RunResult& run);

struct VerifyReport {
  bool ok = true;
  std::vector<std::string> problems;
};

/// Re-hashes the artifacts listed in the manifest, checks that each one
/// carries the manifest's config hash, and, when a config is given, that
/// its hash matches too.
VerifyReport verify_run(const std::filesystem::path& dir,
                        const std::optional<ExperimentConfig>& cfg = std::nullopt);

}  // namespace specrecon
