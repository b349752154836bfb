// Command-line driver for the convergence and verification studies.
//
// Subcommands: eps-sweep, h-sweep, maxwellian, stability, identities.
// Each loads a key/value config file, runs the study, writes one CSV table,
// a machine-readable pass/fail summary, and one SVG plot per slope fit.
// Exit code 0 iff every assertion passed.

#include <cstdio>
#include <cstdlib>
#include <memory>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "semidg/config.hpp"

namespace {

int run(const std::string& kind, const std::string& config_path, const std::string& out,
        std::uint64_t seed, bool seed_set, int threads) {
  semidg::StudyConfig cfg = semidg::load_config(config_path);
  if (cfg.kind.empty()) cfg.kind = kind;
  if (cfg.kind != kind)
    throw std::invalid_argument("config study kind '" + cfg.kind +
                                "' does not match subcommand '" + kind + "'");
  // environment defaults for output path and thread count; flags win
  if (const char* env_out = std::getenv("SEMIDG_OUT_DIR")) cfg.out_dir = env_out;
  if (const char* env_thr = std::getenv("SEMIDG_THREADS")) cfg.threads = std::atoi(env_thr);
  if (!out.empty()) cfg.out_dir = out;
  if (seed_set) cfg.seed = seed;
  if (threads > 0) cfg.threads = threads;

  semidg::validate(cfg);
  const semidg::StudyResult result = semidg::run_study(cfg);
  semidg::emit_outputs(result, cfg);

  int failed = 0;
  for (const auto& a : result.assertions) {
    std::printf("%-60s lhs=%.6g rhs=%.6g %s\n", a.name.c_str(), a.lhs, a.rhs,
                a.pass ? "pass" : "FAIL");
    if (!a.pass) ++failed;
  }
  for (const auto& f : result.fits)
    std::printf("%-60s slope=%.4f R2=%.4f\n", ("fit:" + f.name).c_str(), f.slope, f.r2);
  if (!result.pass()) {
    std::printf("study %s: FAILED (%d failing assertions%s)\n", cfg.kind.c_str(), failed,
                failed == 0 ? ", non-finite values present" : "");
    return 1;
  }
  std::printf("study %s: all assertions passed; outputs in %s\n", cfg.kind.c_str(),
              cfg.out_dir.c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"asymptotic-preserving kinetic DG verification studies"};
  app.require_subcommand(1);

  struct Common {
    std::string config;
    std::string out;
    std::uint64_t seed = 0;
    bool seed_set = false;
    int threads = 0;
  };

  const std::vector<std::pair<std::string, std::string>> kinds = {
      {"eps-sweep", "eps_sweep"},
      {"h-sweep", "h_sweep"},
      {"maxwellian", "maxwellian"},
      {"stability", "stability"},
      {"identities", "identities"}};

  std::vector<std::shared_ptr<Common>> opts;
  for (const auto& [name, kind] : kinds) {
    auto common = std::make_shared<Common>();
    opts.push_back(common);
    CLI::App* sub = app.add_subcommand(name, "run the " + kind + " study");
    sub->add_option("--config", common->config, "study configuration file")
        ->required()
        ->check(CLI::ExistingFile);
    sub->add_option("--out", common->out, "output directory");
    sub->add_option("--seed", common->seed, "random seed for property checks")
        ->each([common](const std::string&) { common->seed_set = true; });
    sub->add_option("--threads", common->threads, "worker threads for sweep points");
    const std::string k = kind;
    sub->callback([common, k] {
      const int rc = run(k, common->config, common->out, common->seed, common->seed_set,
                         common->threads);
      if (rc != 0) throw CLI::RuntimeError(rc);
    });
  }

  CLI11_PARSE(app, argc, argv);
  return 0;
}
