// ddep: run pricing experiments, fit convergence diagnostics, re-aggregate tables.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include "ddep/ddep.hpp"

namespace {

constexpr int kOk = 0;
constexpr int kConfigError = 1;
constexpr int kDrawFailure = 2;

struct RunFlags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> firms, n_prime, horizon, draws, workers;
  std::optional<double> kappa;
  std::optional<std::string> mode, demand;
  std::string out = "results";
};

ddep::ExperimentSpec build_spec(const RunFlags& f) {
  ddep::ExperimentSpec spec = f.config.empty() ? ddep::ExperimentSpec{} : ddep::config::load_spec(f.config);
  if (f.seed) spec.master_seed = *f.seed;
  if (f.firms) spec.n_firms = *f.firms;
  if (f.n_prime) spec.n_prime = *f.n_prime;
  if (f.kappa) spec.kappa = *f.kappa;
  if (f.draws) spec.n_draws = *f.draws;
  if (f.workers) spec.workers = *f.workers;
  if (f.mode) {
    if (*f.mode == "full") {
      spec.n_prime.reset();
    } else if (!spec.n_prime) {
      throw ddep::ConfigError("--mode partial requires --n-prime");
    }
  }
  if (f.demand) spec.demand = *f.demand == "linear" ? ddep::DemandFamily::linear : ddep::DemandFamily::mnl;
  if (f.horizon) {
    // An explicit horizon drops the checkpoints beyond it.
    spec.horizon = *f.horizon;
    std::erase_if(spec.checkpoints, [&](std::size_t c) { return c > *f.horizon; });
    if (spec.checkpoints.empty()) spec.checkpoints.push_back(*f.horizon);
  }
  spec.validate();
  return spec;
}

int cmd_run(const RunFlags& flags) {
  const ddep::ExperimentSpec spec = build_spec(flags);
  const auto result = ddep::run_experiment(spec);
  ddep::io::write_outputs(result, flags.out);
  std::cout << ddep::io::table_csv(result.table);
  for (const auto& d : result.draws)
    if (!d.ok) std::cerr << "draw " << d.draw << " failed: " << d.error << "\n";
  if (result.diagnostics)
    std::cerr << "gap slope " << result.diagnostics->gap_slope << ", regret slope "
              << result.diagnostics->regret_slope << "\n";
  std::cerr << "wrote results to " << flags.out << " (" << result.failures << " of "
            << result.draws.size() << " draws failed)\n";
  return result.failed() ? kDrawFailure : kOk;
}

int cmd_diagnose(const std::string& dir) {
  const auto summaries = ddep::io::read_summaries(dir);
  std::string error;
  std::optional<ddep::ConvergenceDiagnostics> diag;
  try {
    diag = ddep::convergence_diagnostics(summaries);
  } catch (const ddep::InsufficientData& e) {
    error = e.what();
  }
  std::cout << ddep::io::diagnostics_json(diag, error).dump(2) << "\n";
  return diag ? kOk : kConfigError;
}

int cmd_table(const std::string& dir) {
  const auto table = ddep::io::reaggregate(dir);
  ddep::io::write_file(std::filesystem::path(dir) / "table.csv", ddep::io::table_csv(table));
  std::cout << ddep::io::table_csv(table);
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Data-driven equilibrium pricing experiments"};
  app.require_subcommand(1);

  RunFlags flags;
  auto* run = app.add_subcommand("run", "Simulate every parameter draw and write result tables");
  run->add_option("--config", flags.config, "JSON experiment config")->envname("DDEP_CONFIG");
  run->add_option("--seed", flags.seed, "Master seed")->envname("DDEP_SEED");
  run->add_option("--firms", flags.firms, "Number of firms N")->envname("DDEP_FIRMS");
  run->add_option("--n-prime", flags.n_prime, "Uninformed firms N' (partial mode)")
      ->envname("DDEP_N_PRIME");
  run->add_option("--kappa", flags.kappa, "Noise ratio sigma / mean demand")->envname("DDEP_KAPPA");
  run->add_option("--horizon", flags.horizon, "Periods T")->envname("DDEP_HORIZON");
  run->add_option("--draws", flags.draws, "Parameter draws")->envname("DDEP_DRAWS");
  run->add_option("--workers", flags.workers, "Worker threads (0 = all cores)")
      ->envname("DDEP_WORKERS");
  run->add_option("--out", flags.out, "Output directory")->envname("DDEP_OUT");
  run->add_option("--mode", flags.mode, "full or partial")
      ->check(CLI::IsMember({"full", "partial"}))
      ->envname("DDEP_MODE");
  run->add_option("--demand", flags.demand, "True demand family")
      ->check(CLI::IsMember({"mnl", "linear"}))
      ->envname("DDEP_DEMAND");

  std::string traces_dir, results_dir;
  auto* diagnose = app.add_subcommand("diagnose", "Fit gap and regret slopes from a results directory");
  diagnose->add_option("--traces", traces_dir, "Results directory of a previous run")
      ->required()
      ->envname("DDEP_TRACES");
  auto* table = app.add_subcommand("table", "Re-aggregate draws.csv into table.csv");
  table->add_option("--results", results_dir, "Results directory of a previous run")
      ->required()
      ->envname("DDEP_RESULTS");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfigError;
  }

  try {
    if (*run) return cmd_run(flags);
    if (*diagnose) return cmd_diagnose(traces_dir);
    if (*table) return cmd_table(results_dir);
  } catch (const ddep::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfigError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kConfigError;
  }
  return kOk;
}
