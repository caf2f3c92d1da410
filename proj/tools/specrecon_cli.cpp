#include <csignal>
#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "specrecon/errors.hpp"
#include "specrecon/pipeline.hpp"

namespace {

enum Exit { kOk = 0, kFailure = 1, kConfig = 2, kNumerical = 3, kInterrupted = 130 };

extern "C" void on_interrupt(int) { specrecon::request_cancel(); }

struct Args {
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
  unsigned threads = 0;
};

void add_common(CLI::App* sub, Args& a, bool config_required) {
  auto* c = sub->add_option("--config", a.config, "experiment config (JSON)")->check(CLI::ExistingFile);
  if (config_required) c->required();
  sub->add_option("--out", a.out, "output directory (overrides output.dir)");
  sub->add_option("--seed", a.seed, "master seed (overrides the config)");
  sub->add_option("--threads", a.threads, "worker threads (default: SPECRECON_THREADS or all cores)");
}

int run_command(const std::string& name, const Args& a) {
  using namespace specrecon;
  ExperimentConfig cfg;
  try {
    cfg = load_config(a.config);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfig;
  }
  if (a.seed) cfg.seed = *a.seed;
  if (!a.out.empty()) cfg.output_dir = a.out;

  RunOptions opt;
  opt.threads = a.threads;
  try {
    RunResult run;
    if (name == "embed") {
      run = cmd_embed(cfg, opt);
    } else if (name == "reconstruct") {
      run = cmd_reconstruct(cfg, opt);
    } else {
      run = cmd_singular(cfg, opt);
    }
    write_run(cfg.output_dir, cfg, run);
    std::cout << run.summary_json;
    std::cerr << "wrote " << run.artifacts.size() + 2 << " files to " << cfg.output_dir << "\n";
    return kOk;
  } catch (const Cancelled&) {
    std::cerr << "interrupted\n";
    return kInterrupted;
  } catch (const StageError& e) {
    std::cerr << "stage '" << e.stage() << "' failed: " << e.what() << "\n";
    return e.numerical() ? kNumerical : kFailure;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kFailure;
  }
}

int run_verify(const Args& a) {
  using namespace specrecon;
  std::optional<ExperimentConfig> cfg;
  if (!a.config.empty()) {
    try {
      cfg = load_config(a.config);
    } catch (const ConfigError& e) {
      std::cerr << "config error: " << e.what() << "\n";
      return kConfig;
    }
    if (a.seed) cfg->seed = *a.seed;
  }
  const std::string dir = !a.out.empty() ? a.out : (cfg ? cfg->output_dir : std::string("out"));
  try {
    const VerifyReport rep = verify_run(dir, cfg);
    for (const auto& p : rep.problems) std::cerr << p << "\n";
    std::cout << (rep.ok ? "OK " : "FAILED ") << dir << "\n";
    return rep.ok ? kOk : kFailure;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kFailure;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Spectral reconstruction of collapsed spaces"};
  app.require_subcommand(1);

  Args args;
  CLI::App* embed = app.add_subcommand("embed", "diffusion-map embedding of the flat torus");
  CLI::App* recon = app.add_subcommand("reconstruct", "distances, singular set and finite metric");
  CLI::App* sing = app.add_subcommand("singular", "singular-set detection only");
  CLI::App* verify = app.add_subcommand("verify", "re-check artifact and config hashes");
  add_common(embed, args, true);
  add_common(recon, args, true);
  add_common(sing, args, true);
  add_common(verify, args, false);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kOk : kConfig;
  }

  std::signal(SIGINT, on_interrupt);
  std::signal(SIGTERM, on_interrupt);

  if (verify->parsed()) return run_verify(args);
  if (embed->parsed()) return run_command("embed", args);
  if (recon->parsed()) return run_command("reconstruct", args);
  return run_command("singular", args);
}
