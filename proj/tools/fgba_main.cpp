#include <CLI11.hpp>
#include <cstdint>
#include <iostream>
#include <string>

#include "fgba/fgba.hpp"

namespace {

void add_config_options(CLI::App& app, fgba::ExperimentConfig& config) {
  app.add_option("--rates.k_M", config.k_M, "Methylation rate k_M [1/gen]");
  app.add_option("--rates.k_H", config.k_H, "Hemimethylation rate k_H [1/gen]");
  app.add_option("--rates.ratio_O", config.ratio_O, "Ratio k_O/k_-O");
  app.add_option("--rates.k_O_multiplier", config.k_O_multiplier, "k_O = multiplier * k_H");
  app.add_option("--rates.gamma", config.gamma, "Degradation rate [1/gen]");
  app.add_option("--rates.beta_f_on", config.beta_f_on, "Fluorescence rate, On state [a.u./gen]");
  app.add_option("--rates.beta_f_partial", config.beta_f_partial,
                 "Fluorescence rate, Partial state [a.u./gen]");
  app.add_option("--rates.beta_f_off", config.beta_f_off,
                 "Fluorescence rate, Off state [a.u./gen]");
  app.add_option("--rates.replication_rate", config.replication_rate,
                 "Cell replication rate [1/gen]");

  app.add_option("--grid.decades", config.grid_decades, "Fluorescence grid span in decades");
  app.add_option("--grid.bins_per_decade", config.bins_per_decade, "Grid bins per decade");

  app.add_option("--run.t_end", config.t_end, "Run length, e.g. 20h or 14.12gen");
  app.add_option("--run.replication_mode", config.replication_mode,
                 "continuous | discrete-halving | discrete-binomial");
  app.add_option("--run.bin_representative", config.bin_representative, "lower | midpoint");
  app.add_option("--run.initial_phase", config.initial_phase, "Founding cell phase");
  app.add_option("--run.initial_bin", config.initial_bin, "Founding cell fluorescence bin");

  app.add_option("--mutants.ratios", config.mutant_ratios, "k_R/k_-R of each colony");

  app.add_option("--solver.method", config.solver_method, "uniformization | rk4");
  app.add_option("--solver.tol", config.solver_tol, "Uniformization tail bound");
  app.add_option("--solver.dt", config.solver_dt, "RK4 step [gen]");

  app.add_option("--compare.ratio", config.compare_ratio,
                 "k_R/k_-R used by replication-compare");

  app.add_option("--ssa.trajectories", config.ssa_trajectories, "Ensemble size");
  app.add_option("--ssa.mu", config.ssa_mu, "Fluorescence per protein [a.u.]");
  app.add_option("--ssa.ratio", config.ssa_ratio, "k_R/k_-R used by ssa");
  app.add_option("--ssa.mode", config.ssa_mode,
                 "continuous | discrete-halving | discrete-binomial");

  app.add_option("--error_bound.beta", config.eb_beta, "Single-phase production rate");
  app.add_option("--error_bound.gamma", config.eb_gamma, "Single-phase degradation rate");
  app.add_option("--error_bound.levels", config.eb_levels, "Protein levels in the full chain");
  app.add_option("--error_bound.group_size", config.eb_group_size, "Levels per group");
  app.add_option("--error_bound.mu", config.eb_mu, "Fluorescence per protein [a.u.]");
  app.add_option("--error_bound.checkpoints", config.eb_checkpoints, "Checkpoint times [gen]");

  app.add_option("--out", config.out_dir, "Output directory");
  app.add_option("--seed", config.seed, "RNG seed");
  app.add_option("--threads", config.threads, "Worker threads for ensembles");
}

}  // namespace

int main(int argc, char** argv) {
  fgba::ExperimentConfig config;
  bool dump = false;

  // The config file loads before flag parsing, so command-line flags
  // override file values which override the built-in defaults.
  std::string config_path;
  for (int i = 1; i < argc; ++i) {
    const std::string arg = argv[i];
    if (arg == "--config" && i + 1 < argc) config_path = argv[i + 1];
    else if (arg.rfind("--config=", 0) == 0) config_path = arg.substr(9);
  }
  if (!config_path.empty()) {
    try {
      fgba::apply_config_file(config, config_path);
    } catch (const fgba::config_error& e) {
      std::cerr << "fgba: config error: " << e.what() << "\n";
      return 2;
    }
  }

  CLI::App app{"Fluorescence-grid-based aggregation of gene-protein master equations"};
  std::string config_path_sink;
  app.add_option("--config", config_path_sink,
                 "Configuration file (INI sections, applied before flags)");
  add_config_options(app, config);
  app.require_subcommand(1);

  auto* cmd_mutants = app.add_subcommand(
      "mutants", "Solve the six-colony fluorescence histograms");
  auto* cmd_compare = app.add_subcommand(
      "replication-compare", "Compare continuous vs discrete replication variance");
  auto* cmd_ssa = app.add_subcommand("ssa", "Stochastic-simulation ensemble histogram");
  auto* cmd_error = app.add_subcommand(
      "error-bound", "Empirical aggregation error against the printed bound");
  auto* cmd_build = app.add_subcommand("build", "Assemble and inspect the generators");
  cmd_build->add_flag("--dump", dump, "Write generator triplet files");
  auto* cmd_rates = app.add_subcommand("rates", "Print the resolved kinetic constants");
  for (auto* sub : {cmd_mutants, cmd_compare, cmd_ssa, cmd_error, cmd_build, cmd_rates})
    sub->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (*cmd_mutants) {
      const auto out = fgba::run_mutants(config);
      for (const auto& run : out.runs)
        std::cout << "wrote " << run.file.string() << "\n";
      std::cout << "wrote " << out.manifest_file.string() << "\n";
    } else if (*cmd_compare) {
      const auto out = fgba::run_replication_compare(config);
      std::cout << "continuous variance        " << out.variance_continuous << "\n"
                << "discrete-halving variance  " << out.variance_discrete_halving << "\n"
                << "discrete-binomial variance " << out.variance_discrete_binomial << "\n"
                << "wrote " << out.comparison_file.string() << "\n";
    } else if (*cmd_ssa) {
      const auto out = fgba::run_ssa(config);
      std::cout << "wrote " << out.file.string() << "\n";
    } else if (*cmd_error) {
      const auto out = fgba::run_error_bound(config);
      std::cout << "wrote " << out.file.string() << "\n";
    } else if (*cmd_build) {
      const auto out = fgba::run_build(config, dump);
      for (const auto& f : out.generator_files) std::cout << "wrote " << f.string() << "\n";
      std::cout << "wrote " << out.manifest_file.string() << "\n";
    } else if (*cmd_rates) {
      std::cout << fgba::rates_report(config);
      std::cout << "wrote " << fgba::run_rates(config).string() << "\n";
    }
  } catch (const fgba::config_error& e) {
    std::cerr << "fgba: config error: " << e.what() << "\n";
    return 2;
  } catch (const std::domain_error& e) {
    std::cerr << "fgba: config error: " << e.what() << "\n";
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "fgba: config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "fgba: numerical failure: " << e.what() << "\n";
    return 3;
  }
  return 0;
}
