#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "fgba/aggregation.hpp"
#include "fgba/cme_builder.hpp"
#include "fgba/error_bound.hpp"
#include "fgba/grid.hpp"
#include "fgba/io.hpp"
#include "fgba/phase_model.hpp"
#include "fgba/solver.hpp"
#include "fgba/ssa.hpp"
#include "fgba/state_space.hpp"

namespace fgba {

// Thrown for malformed configuration values; the CLI maps it to its own
// exit code, distinct from numerical failures.
struct config_error : std::runtime_error {
  explicit config_error(const std::string& what) : std::runtime_error(what) {}
};

// Durations accept an `h` (hours) or `gen` (generations) suffix; a bare
// number is read as generations.
inline double parse_duration_generations(const std::string& text) {
  std::size_t pos = 0;
  double value = 0.0;
  try {
    value = std::stod(text, &pos);
  } catch (const std::exception&) {
    throw config_error("cannot parse duration: " + text);
  }
  std::string suffix = text.substr(pos);
  if (suffix == "h") return hours_to_generations(value);
  if (suffix == "gen" || suffix.empty()) return value;
  throw config_error("unknown duration suffix '" + suffix + "' in: " + text);
}

// Full experiment configuration. The defaults reproduce the published
// six-mutant experiment: an empty config runs it unchanged.
struct ExperimentConfig {
  // Kinetic constants and derivation inputs.
  double k_M = 4.3;
  double k_H = 0.4;
  double ratio_O = 3.7;
  double k_O_multiplier = 1000.0;
  double gamma = 0.0378;
  double beta_f_on = 238.0;
  double beta_f_partial = 3.0;
  double beta_f_off = 0.37;
  double replication_rate = 1.0;

  // Mutant panel: k_R/k_{-R} of the six colonies.
  std::vector<double> mutant_ratios = {15.8, 8.9, 5.5, 4.3, 1.0, 0.1};

  // Fluorescence grid.
  double grid_decades = 4.0;
  std::size_t bins_per_decade = 10;

  // Run length (suffix h or gen).
  std::string t_end = "20h";

  // Replication handling in CME runs.
  std::string replication_mode = "continuous";  // continuous | discrete-halving | discrete-binomial
  std::string bin_representative = "lower";     // lower | midpoint

  // Initial condition: a single founding cell.
  std::string initial_phase = "O";
  std::size_t initial_bin = 0;

  // Solver.
  std::string solver_method = "uniformization";  // uniformization | rk4
  double solver_tol = 1e-8;
  double solver_dt = 1e-3;

  // replication-compare subcommand.
  double compare_ratio = 1.0;

  // ssa subcommand.
  std::size_t ssa_trajectories = 10000;
  double ssa_mu = 1.0;
  double ssa_ratio = 15.8;
  std::string ssa_mode = "continuous";

  // error-bound subcommand: the single-phase harness instance.
  double eb_beta = 5.0;
  double eb_gamma = 0.1;
  std::size_t eb_levels = 200;
  std::size_t eb_group_size = 10;
  double eb_mu = 1.0;
  std::vector<double> eb_checkpoints = {1.0, 5.0, 14.12};

  // Global.
  std::string out_dir = "out";
  std::uint64_t seed = 1;
  unsigned threads = 1;

  double t_end_generations() const { return parse_duration_generations(t_end); }

  RateSet resolved_rates(double mutant_ratio) const {
    RateSet r;
    try {
      r = derive_rate_set(k_M, k_H, ratio_O, mutant_ratio, k_O_multiplier);
    } catch (const std::domain_error& e) {
      throw config_error(e.what());
    }
    r.gamma = gamma;
    r.beta_f_on = beta_f_on;
    r.beta_f_partial = beta_f_partial;
    r.beta_f_off = beta_f_off;
    r.replication_rate = replication_rate;
    try {
      r.validate();
    } catch (const std::domain_error& e) {
      throw config_error(e.what());
    }
    return r;
  }

  FluorescenceGrid grid() const {
    try {
      return default_experiment_grid(grid_decades, bins_per_decade);
    } catch (const std::domain_error& e) {
      throw config_error(e.what());
    }
  }

  BinRepresentative representative() const {
    if (bin_representative == "lower") return BinRepresentative::LowerEdge;
    if (bin_representative == "midpoint") return BinRepresentative::Midpoint;
    throw config_error("unknown bin representative: " + bin_representative);
  }

  SolveOptions solve_options(double t, std::vector<double> checkpoints = {}) const {
    SolveOptions o;
    if (solver_method == "uniformization")
      o.method = SolveMethod::Uniformization;
    else if (solver_method == "rk4")
      o.method = SolveMethod::RK4;
    else
      throw config_error("unknown solver method: " + solver_method);
    o.t_end = t;
    o.dt = solver_dt;
    o.tol = solver_tol;
    o.checkpoint_times = std::move(checkpoints);
    return o;
  }

  ReplicationMode ssa_replication_mode() const {
    if (ssa_mode == "continuous") return ReplicationMode::ContinuousHalving;
    if (ssa_mode == "discrete-halving") return ReplicationMode::DiscreteHalving;
    if (ssa_mode == "discrete-binomial") return ReplicationMode::DiscreteBinomial;
    throw config_error("unknown ssa replication mode: " + ssa_mode);
  }

  void describe(Manifest& m) const {
    m.add("k_M", k_M);
    m.add("k_H", k_H);
    m.add("ratio_O", ratio_O);
    m.add("k_O_multiplier", k_O_multiplier);
    m.add("gamma", gamma);
    m.add("beta_f_on", beta_f_on);
    m.add("beta_f_partial", beta_f_partial);
    m.add("beta_f_off", beta_f_off);
    m.add("replication_rate", replication_rate);
    m.add("grid_decades", grid_decades);
    m.add("bins_per_decade", bins_per_decade);
    m.add("t_end", t_end);
    m.add("t_end_generations", t_end_generations());
    m.add("replication_mode", replication_mode);
    m.add("bin_representative", bin_representative);
    m.add("initial_phase", initial_phase);
    m.add("initial_bin", initial_bin);
    m.add("solver_method", solver_method);
    m.add("solver_tol", solver_tol);
    m.add("solver_dt", solver_dt);
    m.add("seed", std::to_string(seed));
    m.add("threads", std::to_string(threads));
  }
};

namespace detail {

inline std::vector<double> parse_number_list(const std::string& raw, const std::string& where) {
  std::string text = raw;
  for (char& c : text)
    if (c == '[' || c == ']' || c == ',') c = ' ';
  std::istringstream in(text);
  std::vector<double> out;
  double v = 0.0;
  while (in >> v) out.push_back(v);
  std::string rest;
  if (in.clear(), in >> rest)
    throw config_error(where + ": cannot parse number list '" + raw + "'");
  if (out.empty()) throw config_error(where + ": empty number list");
  return out;
}

template <typename T>
T parse_number(const std::string& raw, const std::string& where) {
  std::istringstream in(raw);
  T v{};
  std::string rest;
  if (!(in >> v) || (in >> rest))
    throw config_error(where + ": cannot parse value '" + raw + "'");
  return v;
}

}  // namespace detail

// Applies an INI-style configuration ([section] blocks of key = value
// lines, # or ; comments) on top of the current values. Unknown sections,
// unknown keys and malformed values are reported with file:line context.
inline void apply_config_text(ExperimentConfig& config, const std::string& text,
                              const std::string& filename) {
  std::istringstream in(text);
  std::string line;
  std::string section;
  std::size_t line_no = 0;

  auto trim = [](std::string s) {
    const auto from = s.find_first_not_of(" \t\r");
    const auto to = s.find_last_not_of(" \t\r");
    return from == std::string::npos ? std::string{} : s.substr(from, to - from + 1);
  };

  while (std::getline(in, line)) {
    ++line_no;
    const std::string where = filename + ":" + std::to_string(line_no);
    std::string stripped = trim(line);
    if (stripped.empty() || stripped.front() == '#' || stripped.front() == ';') continue;
    if (stripped.front() == '[') {
      if (stripped.back() != ']') throw config_error(where + ": unterminated section header");
      section = trim(stripped.substr(1, stripped.size() - 2));
      continue;
    }
    const auto eq = stripped.find('=');
    if (eq == std::string::npos) throw config_error(where + ": expected key = value");
    const std::string key = trim(stripped.substr(0, eq));
    const std::string value = trim(stripped.substr(eq + 1));
    if (key.empty()) throw config_error(where + ": empty key");
    const std::string qualified = section.empty() ? key : section + "." + key;

    auto num = [&](double& slot) { slot = detail::parse_number<double>(value, where); };
    auto count = [&](std::size_t& slot) {
      slot = detail::parse_number<std::size_t>(value, where);
    };

    if (qualified == "rates.k_M") num(config.k_M);
    else if (qualified == "rates.k_H") num(config.k_H);
    else if (qualified == "rates.ratio_O") num(config.ratio_O);
    else if (qualified == "rates.k_O_multiplier") num(config.k_O_multiplier);
    else if (qualified == "rates.gamma") num(config.gamma);
    else if (qualified == "rates.beta_f_on") num(config.beta_f_on);
    else if (qualified == "rates.beta_f_partial") num(config.beta_f_partial);
    else if (qualified == "rates.beta_f_off") num(config.beta_f_off);
    else if (qualified == "rates.replication_rate") num(config.replication_rate);
    else if (qualified == "grid.decades") num(config.grid_decades);
    else if (qualified == "grid.bins_per_decade") count(config.bins_per_decade);
    else if (qualified == "run.t_end") config.t_end = value;
    else if (qualified == "run.replication_mode") config.replication_mode = value;
    else if (qualified == "run.bin_representative") config.bin_representative = value;
    else if (qualified == "run.initial_phase") config.initial_phase = value;
    else if (qualified == "run.initial_bin") count(config.initial_bin);
    else if (qualified == "mutants.ratios")
      config.mutant_ratios = detail::parse_number_list(value, where);
    else if (qualified == "solver.method") config.solver_method = value;
    else if (qualified == "solver.tol") num(config.solver_tol);
    else if (qualified == "solver.dt") num(config.solver_dt);
    else if (qualified == "compare.ratio") num(config.compare_ratio);
    else if (qualified == "ssa.trajectories") count(config.ssa_trajectories);
    else if (qualified == "ssa.mu") num(config.ssa_mu);
    else if (qualified == "ssa.ratio") num(config.ssa_ratio);
    else if (qualified == "ssa.mode") config.ssa_mode = value;
    else if (qualified == "error_bound.beta") num(config.eb_beta);
    else if (qualified == "error_bound.gamma") num(config.eb_gamma);
    else if (qualified == "error_bound.levels") count(config.eb_levels);
    else if (qualified == "error_bound.group_size") count(config.eb_group_size);
    else if (qualified == "error_bound.mu") num(config.eb_mu);
    else if (qualified == "error_bound.checkpoints")
      config.eb_checkpoints = detail::parse_number_list(value, where);
    else if (qualified == "output.dir") config.out_dir = value;
    else if (qualified == "output.seed")
      config.seed = detail::parse_number<std::uint64_t>(value, where);
    else if (qualified == "output.threads")
      config.threads = detail::parse_number<unsigned>(value, where);
    else
      throw config_error(where + ": unknown configuration key '" + qualified + "'");
  }
}

inline void apply_config_file(ExperimentConfig& config, const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw config_error("cannot open config file: " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  apply_config_text(config, ss.str(), path.filename().string());
}

namespace detail {

// Division map for a fluorescence chain with binomially partitioned
// protein: bin representatives are rounded to integer protein-equivalents
// (one a.u. per protein), the Binomial(n, 1/2) mass is folded back onto the
// grid, and each column is normalized to keep divisions mass-preserving.
inline SparseMatrix binomial_bin_map(const FluorescenceGrid& grid, BinRepresentative rep,
                                     std::size_t n_phases) {
  const Eigen::MatrixXd pm = replication_phase_map(n_phases);
  const StateSpace space = StateSpace::fluorescence(grid, n_phases);
  const double ln2 = std::log(2.0);
  std::vector<Triplet> ts;
  for (std::size_t b = 0; b < grid.n_bins(); ++b) {
    const double value =
        rep == BinRepresentative::LowerEdge ? grid.lower_edge(b) : grid.midpoint(b);
    const auto n = static_cast<std::uint64_t>(std::llround(value));
    std::vector<double> bin_weight(grid.n_bins(), 0.0);
    const double nd = static_cast<double>(n);
    double weight_total = 0.0;
    for (std::uint64_t k = 0; k <= n; ++k) {
      const double kd = static_cast<double>(k);
      const double logw = std::lgamma(nd + 1.0) - std::lgamma(kd + 1.0) -
                          std::lgamma(nd - kd + 1.0) - nd * ln2;
      const double w = std::exp(logw);
      if (w == 0.0) continue;
      bin_weight[grid.bin_of(kd)] += w;
      weight_total += w;
    }
    if (n == 0) {
      bin_weight[0] = 1.0;
      weight_total = 1.0;
    }
    for (std::size_t target = 0; target < grid.n_bins(); ++target) {
      const double w = bin_weight[target] / weight_total;
      if (w == 0.0) continue;
      for (std::size_t pj = 0; pj < n_phases; ++pj)
        for (std::size_t pi = 0; pi < n_phases; ++pi) {
          const double e = pm(static_cast<Eigen::Index>(pi), static_cast<Eigen::Index>(pj));
          if (e != 0.0) ts.push_back({space.index(target, pi), space.index(b, pj), w * e});
        }
    }
  }
  return SparseMatrix(space.dimension(), ts);
}

inline void report_warnings(const SolveResult& result) {
  for (const auto& w : result.warnings) std::cerr << "fgba: warning: " << w << "\n";
}

// Evolves a fluorescence-chain distribution with divisions applied as a
// map at every integer time: integrate one generation, apply the map,
// repeat, then integrate the fractional remainder.
inline ProbabilityVector evolve_with_discrete_divisions(const SparseGenerator& a,
                                                        const SparseMatrix& division_map,
                                                        ProbabilityVector p,
                                                        double t_end,
                                                        const SolveOptions& base_opts) {
  const auto n_divisions = static_cast<std::size_t>(std::floor(t_end));
  SolveOptions opts = base_opts;
  opts.checkpoint_times.clear();
  // The series deficiency accumulates over the stepped segments; split the
  // budget so the final distribution still conserves mass to base tol.
  opts.tol = base_opts.tol / static_cast<double>(n_divisions + 1);
  for (std::size_t k = 0; k < n_divisions; ++k) {
    opts.t_end = 1.0;
    auto res = solve(a, p, opts);
    report_warnings(res);
    p = std::move(res.checkpoints.back().distribution);
    p.values = division_map.apply(p.values);
  }
  const double remainder = t_end - static_cast<double>(n_divisions);
  if (remainder > 0.0) {
    opts.t_end = remainder;
    auto res = solve(a, p, opts);
    report_warnings(res);
    p = std::move(res.checkpoints.back().distribution);
  }
  return p;
}

}  // namespace detail

// One solved mutant colony.
struct MutantRun {
  double ratio = 0.0;
  ProbabilityVector distribution;
  std::filesystem::path file;
};

struct MutantsOutput {
  FluorescenceGrid grid;
  std::vector<MutantRun> runs;
  std::filesystem::path manifest_file;
};

// Solves one colony configuration on the fluorescence grid.
inline ProbabilityVector solve_colony(const ExperimentConfig& config, double ratio) {
  const RateSet rates = config.resolved_rates(ratio);
  const FluorescenceGrid grid = config.grid();
  const StateSpace space = StateSpace::fluorescence(grid, kNumPhases);
  const Eigen::MatrixXd k = phase_generator(rates);
  const auto beta_f = rates.beta_f_by_phase();
  const SparseGenerator a_f = build_fgba_generator(k, beta_f, grid, rates.gamma);

  Phase phase;
  try {
    phase = parse_phase(config.initial_phase);
  } catch (const std::invalid_argument& e) {
    throw config_error(e.what());
  }
  if (config.initial_bin >= grid.n_bins()) throw config_error("initial bin outside the grid");
  const auto p0 =
      ProbabilityVector::point_mass(space, config.initial_bin, static_cast<std::size_t>(phase));
  const double t_end = config.t_end_generations();

  if (config.replication_mode == "continuous") {
    const SparseGenerator d_f =
        build_replication_matrix(space, PartitionRule::Halving, config.representative())
            .scaled(rates.replication_rate);
    const SparseGenerator combined = assemble_final_generator(a_f, d_f);
    auto res = solve(combined, p0, config.solve_options(t_end));
    detail::report_warnings(res);
    return std::move(res.checkpoints.back().distribution);
  }
  SparseMatrix map;
  if (config.replication_mode == "discrete-halving")
    map = build_replication_map(space, PartitionRule::Halving, config.representative());
  else if (config.replication_mode == "discrete-binomial")
    map = detail::binomial_bin_map(grid, config.representative(), kNumPhases);
  else
    throw config_error("unknown replication mode: " + config.replication_mode);
  return detail::evolve_with_discrete_divisions(a_f, map, p0, t_end,
                                                config.solve_options(t_end));
}

// Reproduces the six-colony experiment: one histogram CSV per mutant ratio
// plus a manifest with the resolved parameters and summary statistics.
inline MutantsOutput run_mutants(const ExperimentConfig& config) {
  if (config.mutant_ratios.empty()) throw config_error("mutant ratio list is empty");
  const FluorescenceGrid grid = config.grid();
  const std::filesystem::path out(config.out_dir);
  std::filesystem::create_directories(out);

  MutantsOutput result;
  result.grid = grid;
  Manifest manifest;
  manifest.add("command", "mutants");
  config.describe(manifest);

  for (double ratio : config.mutant_ratios) {
    ProbabilityVector p = solve_colony(config, ratio);
    const auto file = out / ("hist_mutant_" + format_value(ratio) + ".csv");
    write_histogram_csv(file, p, grid);

    const std::string key = "ratio_" + format_value(ratio);
    manifest.add(key + "_file", file.filename().string());
    manifest.add(key + "_total_mass", p.total());
    manifest.add(key + "_mean_au", expected_fluorescence(p, grid));
    manifest.add(key + "_variance_au2", variance_fluorescence(p, grid));
    const auto marginal = p.level_marginal();
    manifest.add(key + "_top_bin_mass", marginal.back());
    result.runs.push_back({ratio, std::move(p), file});
  }

  result.manifest_file = out / "mutants_manifest.txt";
  manifest.write(result.manifest_file);
  return result;
}

struct ReplicationCompareOutput {
  double variance_continuous = 0.0;
  double variance_discrete_halving = 0.0;
  double variance_discrete_binomial = 0.0;
  std::filesystem::path comparison_file;
  std::filesystem::path manifest_file;
};

// Solves the compare-ratio colony under continuous-generator replication,
// discrete halving, and discrete binomial replication, and reports the
// fluorescence variance of each final distribution.
inline ReplicationCompareOutput run_replication_compare(const ExperimentConfig& config) {
  const FluorescenceGrid grid = config.grid();
  const std::filesystem::path out(config.out_dir);
  std::filesystem::create_directories(out);

  ReplicationCompareOutput result;
  Manifest manifest;
  manifest.add("command", "replication-compare");
  manifest.add("compare_ratio", config.compare_ratio);
  config.describe(manifest);

  std::ostringstream csv;
  csv << "mode,mean_au,variance_au2\n";
  const char* modes[] = {"continuous", "discrete-halving", "discrete-binomial"};
  for (const char* mode : modes) {
    ExperimentConfig c = config;
    c.replication_mode = mode;
    const ProbabilityVector p = solve_colony(c, config.compare_ratio);
    const double mean = expected_fluorescence(p, grid);
    const double var = variance_fluorescence(p, grid);
    csv << mode << ',' << format_value(mean) << ',' << format_value(var) << '\n';
    const auto file = out / ("hist_replication_" + std::string(mode) + ".csv");
    write_histogram_csv(file, p, grid);
    manifest.add(std::string(mode) + "_file", file.filename().string());
    manifest.add(std::string(mode) + "_variance_au2", var);
    if (std::string(mode) == "continuous") result.variance_continuous = var;
    if (std::string(mode) == "discrete-halving") result.variance_discrete_halving = var;
    if (std::string(mode) == "discrete-binomial") result.variance_discrete_binomial = var;
  }

  result.comparison_file = out / "replication_compare.csv";
  write_text_file(result.comparison_file, csv.str());
  result.manifest_file = out / "replication_compare_manifest.txt";
  manifest.write(result.manifest_file);
  return result;
}

struct SsaOutput {
  ProbabilityVector histogram;
  std::filesystem::path file;
  std::filesystem::path manifest_file;
};

// Ensemble SSA histogram of the configured colony. Protein production rates
// are beta_f/mu per the linear fluorescence-protein relation.
inline SsaOutput run_ssa(const ExperimentConfig& config) {
  if (config.ssa_trajectories < 1) throw config_error("need at least one trajectory");
  if (!(config.ssa_mu > 0.0)) throw config_error("ssa mu must be positive");
  const FluorescenceGrid grid = config.grid();
  const RateSet rates = config.resolved_rates(config.ssa_ratio);
  std::array<double, kNumPhases> beta{};
  const auto beta_f = rates.beta_f_by_phase();
  for (std::size_t i = 0; i < kNumPhases; ++i) beta[i] = beta_f[i] / config.ssa_mu;

  Phase phase;
  try {
    phase = parse_phase(config.initial_phase);
  } catch (const std::invalid_argument& e) {
    throw config_error(e.what());
  }
  if (config.initial_bin >= grid.n_bins()) throw config_error("initial bin outside the grid");
  const auto initial_protein = static_cast<std::uint64_t>(
      std::llround(grid.lower_edge(config.initial_bin) / config.ssa_mu));
  const CellState initial{phase, initial_protein, 0.0};

  const std::filesystem::path out(config.out_dir);
  std::filesystem::create_directories(out);

  SsaOutput result;
  result.histogram = ensemble_histogram(
      config.ssa_trajectories, rates, beta, config.ssa_replication_mode(),
      config.t_end_generations(), grid, config.ssa_mu, config.seed, config.threads, initial);
  result.file = out / "hist_ssa.csv";
  write_histogram_csv(result.file, result.histogram, grid);

  Manifest manifest;
  manifest.add("command", "ssa");
  manifest.add("ssa_ratio", config.ssa_ratio);
  manifest.add("ssa_trajectories", config.ssa_trajectories);
  manifest.add("ssa_mu", config.ssa_mu);
  manifest.add("ssa_mode", config.ssa_mode);
  config.describe(manifest);
  manifest.add("file", result.file.filename().string());
  manifest.add("mean_au", expected_fluorescence(result.histogram, grid));
  manifest.add("variance_au2", variance_fluorescence(result.histogram, grid));
  result.manifest_file = out / "ssa_manifest.txt";
  manifest.write(result.manifest_file);
  return result;
}

struct ErrorBoundOutput {
  std::vector<ErrorSample> samples;
  std::vector<double> e1_bounds;
  ErrorBoundInputs inputs;
  std::filesystem::path file;
  std::filesystem::path manifest_file;
};

// Error harness on the configured single-phase instance: a birth-death
// chain aggregated in uniform groups against its fluorescence chain, with
// the printed e1 bound evaluated alongside the measured decomposition.
inline ErrorBoundOutput run_error_bound(const ExperimentConfig& config) {
  if (config.eb_levels < 2) throw config_error("error-bound instance needs >= 2 levels");
  if (config.eb_group_size < 1 || config.eb_levels % config.eb_group_size != 0)
    throw config_error("group size must divide the level count");
  if (!(config.eb_mu > 0.0)) throw config_error("mu must be positive");

  const std::size_t n_groups = config.eb_levels / config.eb_group_size;
  const Eigen::MatrixXd k1 = Eigen::MatrixXd::Zero(1, 1);
  const std::vector<double> beta{config.eb_beta};
  const SparseGenerator full =
      build_full_generator(k1, beta, config.eb_gamma, config.eb_levels - 1);

  const double width = config.eb_mu * static_cast<double>(config.eb_group_size);
  const FluorescenceGrid grid =
      FluorescenceGrid::from_widths(std::vector<double>(n_groups, width));
  const std::vector<double> beta_f{config.eb_mu * config.eb_beta};
  const SparseGenerator fgba = build_fgba_generator(k1, beta_f, grid, config.eb_gamma);

  const AggregationPlan plan = AggregationPlan::uniform(n_groups, config.eb_group_size, 1);
  const auto p0 =
      ProbabilityVector::point_mass(StateSpace::protein_counts(config.eb_levels, 1), 0, 0);

  SolveOptions opts = config.solve_options(0.0);
  const auto samples = empirical_error(full, fgba, plan, config.eb_mu, p0, grid,
                                       config.eb_checkpoints, opts);

  ErrorBoundOutput result;
  result.samples = samples;
  result.inputs = error_bound_inputs(grid, plan, config.eb_mu, config.eb_gamma);
  for (const auto& s : samples)
    result.e1_bounds.push_back(e1_bound(s.t, result.inputs, s.expected_agg));

  const std::filesystem::path out(config.out_dir);
  std::filesystem::create_directories(out);
  result.file = out / "error_trace.csv";
  write_text_file(result.file, error_trace_csv(result.samples, result.e1_bounds));

  Manifest manifest;
  manifest.add("command", "error-bound");
  manifest.add("eb_beta", config.eb_beta);
  manifest.add("eb_gamma", config.eb_gamma);
  manifest.add("eb_levels", config.eb_levels);
  manifest.add("eb_group_size", config.eb_group_size);
  manifest.add("eb_mu", config.eb_mu);
  manifest.add("epsilon", result.inputs.epsilon);
  manifest.add("grid_growth_ratio", result.inputs.r);
  manifest.add("r_hat", r_hat(result.inputs.r, result.inputs.epsilon, result.inputs.delta_min));
  manifest.add("file", result.file.filename().string());
  result.manifest_file = out / "error_bound_manifest.txt";
  manifest.write(result.manifest_file);
  return result;
}

struct BuildOutput {
  std::vector<std::filesystem::path> generator_files;
  std::filesystem::path manifest_file;
};

// Assembles the combined fluorescence generator for each mutant ratio and
// reports dimensions, sparsity and the truncation diagnostic; with `dump`
// the triplet text of each generator is written as well.
inline BuildOutput run_build(const ExperimentConfig& config, bool dump) {
  if (config.mutant_ratios.empty()) throw config_error("mutant ratio list is empty");
  const FluorescenceGrid grid = config.grid();
  const StateSpace space = StateSpace::fluorescence(grid, kNumPhases);
  const std::filesystem::path out(config.out_dir);
  std::filesystem::create_directories(out);

  BuildOutput result;
  Manifest manifest;
  manifest.add("command", "build");
  config.describe(manifest);
  manifest.add("dimension", space.dimension());
  manifest.add("bins", grid.n_bins());

  for (double ratio : config.mutant_ratios) {
    const RateSet rates = config.resolved_rates(ratio);
    const Eigen::MatrixXd k = phase_generator(rates);
    const SparseGenerator a_f =
        build_fgba_generator(k, rates.beta_f_by_phase(), grid, rates.gamma);
    const SparseGenerator d_f =
        build_replication_matrix(space, PartitionRule::Halving, config.representative())
            .scaled(rates.replication_rate);
    const SparseGenerator combined = assemble_final_generator(a_f, d_f);

    const std::string key = "ratio_" + format_value(ratio);
    manifest.add(key + "_nnz", combined.nnz());
    manifest.add(key + "_clamped_rate", combined.clamped_rate());
    manifest.add(key + "_max_column_sum", max_column_sum_magnitude(combined));
    if (dump) {
      const auto file = out / ("generator_" + format_value(ratio) + ".txt");
      write_triplet_text(file, combined);
      manifest.add(key + "_file", file.filename().string());
      result.generator_files.push_back(file);
    }
  }

  result.manifest_file = out / "build_manifest.txt";
  manifest.write(result.manifest_file);
  return result;
}

// Resolved kinetic constants, one block per mutant ratio, with the
// stationary phase distribution implied by each.
inline std::string rates_report(const ExperimentConfig& config) {
  Manifest m;
  m.add("command", "rates");
  const RateSet base = config.resolved_rates(config.mutant_ratios.empty()
                                                 ? 15.8
                                                 : config.mutant_ratios.front());
  m.add("k_M", base.k_M);
  m.add("k_H", base.k_H);
  m.add("k_O", base.k_O);
  m.add("k_neg_O", base.k_neg_O);
  m.add("k_R", base.k_R);
  m.add("gamma", base.gamma);
  m.add("beta_f_on", base.beta_f_on);
  m.add("beta_f_partial", base.beta_f_partial);
  m.add("beta_f_off", base.beta_f_off);
  m.add("replication_rate", base.replication_rate);
  for (double ratio : config.mutant_ratios) {
    const RateSet r = config.resolved_rates(ratio);
    const std::string key = "ratio_" + format_value(ratio);
    m.add(key + "_k_neg_R", r.k_neg_R);
    const Eigen::VectorXd pi =
        phase_steady_state(phase_generator(r), replication_phase_map(), r.replication_rate);
    for (std::size_t p = 0; p < kNumPhases; ++p)
      m.add(key + "_stationary_" + phase_name(static_cast<Phase>(p)),
            pi(static_cast<Eigen::Index>(p)));
  }
  return m.text();
}

inline std::filesystem::path run_rates(const ExperimentConfig& config) {
  const std::filesystem::path out(config.out_dir);
  std::filesystem::create_directories(out);
  const auto file = out / "rates.txt";
  write_text_file(file, rates_report(config));
  return file;
}

}  // namespace fgba
