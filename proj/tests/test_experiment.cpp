#include <algorithm>
#include <catch2/catch_amalgamated.hpp>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "fgba/experiment.hpp"
#include "fgba/io.hpp"

using namespace fgba;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  REQUIRE(in);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::filesystem::path fresh_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / "fgba_tests" / name;
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace

TEST_CASE("durations parse with h and gen suffixes") {
  CHECK_THAT(parse_duration_generations("20h"), WithinRel(14.117647058823529, 1e-12));
  CHECK(parse_duration_generations("5gen") == 5.0);
  CHECK(parse_duration_generations("3.5") == 3.5);
  CHECK_THROWS_AS(parse_duration_generations("20min"), config_error);
  CHECK_THROWS_AS(parse_duration_generations("abc"), config_error);
}

TEST_CASE("histogram CSV carries the pinned schema") {
  const auto grid = default_experiment_grid(1.0, 2);
  const auto space = StateSpace::fluorescence(grid, 5);
  auto p = ProbabilityVector::uniform(space);
  const std::string csv = histogram_csv(p, grid);

  std::istringstream lines(csv);
  std::string header;
  std::getline(lines, header);
  CHECK(header == "bin_lower_au,bin_upper_au,p_MF,p_MH,p_UN,p_UO,p_O,p_total");
  std::size_t rows = 0;
  std::string line;
  while (std::getline(lines, line)) ++rows;
  CHECK(rows == grid.n_bins());
}

TEST_CASE("triplet text round trip preserves the matrix") {
  const RateSet r = default_rates();
  const auto grid = default_experiment_grid(2.0, 4);
  const auto m = build_fgba_generator(phase_generator(r), r.beta_f_by_phase(), grid, r.gamma);
  const std::string text = triplet_text(m);

  // Header: dim nnz.
  std::istringstream in(text);
  const auto parsed = read_triplet_text(in);
  CHECK(parsed.dimension() == m.dimension());
  CHECK(parsed.nnz() == m.nnz());
  CHECK(max_entry_difference(parsed, m) == 0.0);
}

TEST_CASE("mutants command writes one conserving histogram per ratio") {
  ExperimentConfig config;
  config.mutant_ratios = {15.8, 1.0};
  config.out_dir = fresh_dir("mutants").string();
  const auto out = run_mutants(config);

  REQUIRE(out.runs.size() == 2);
  for (const auto& run : out.runs) {
    CHECK(std::filesystem::exists(run.file));
    CHECK_THAT(run.distribution.total(), WithinAbs(1.0, 1e-8));
    CHECK(run.distribution.min_entry() >= -1e-12);
  }
  CHECK(std::filesystem::exists(out.manifest_file));
  const std::string manifest = slurp(out.manifest_file);
  CHECK(manifest.find("ratio_15.8_mean_au") != std::string::npos);
  CHECK(manifest.find("command = mutants") != std::string::npos);
}

TEST_CASE("emitted histogram rows are well-formed probabilities over monotone bins") {
  ExperimentConfig config;
  config.mutant_ratios = {1.0};
  config.out_dir = fresh_dir("csv_check").string();
  const auto out = run_mutants(config);

  std::ifstream in(out.runs.front().file);
  std::string header;
  std::getline(in, header);
  double prev_upper = 0.0;
  double total = 0.0;
  std::size_t rows = 0;
  std::string line;
  while (std::getline(in, line)) {
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream fields(line);
    double lower = 0.0;
    double upper = 0.0;
    double p_total = 0.0;
    double p = 0.0;
    fields >> lower >> upper;
    CHECK(lower == prev_upper);
    CHECK(upper > lower);
    double phase_sum = 0.0;
    for (int ph = 0; ph < 5; ++ph) {
      fields >> p;
      CHECK(p >= 0.0);
      CHECK(p <= 1.0);
      phase_sum += p;
    }
    fields >> p_total;
    CHECK_THAT(p_total, WithinAbs(phase_sum, 1e-9));
    total += p_total;
    prev_upper = upper;
    ++rows;
  }
  CHECK(rows == out.grid.n_bins());
  CHECK_THAT(total, WithinAbs(1.0, 1e-8));
}

TEST_CASE("mutants command is deterministic at the byte level") {
  ExperimentConfig config;
  config.mutant_ratios = {15.8};
  config.out_dir = fresh_dir("det_a").string();
  const auto first = run_mutants(config);
  const std::string csv_a = slurp(first.runs.front().file);
  const std::string man_a = slurp(first.manifest_file);

  config.out_dir = fresh_dir("det_b").string();
  const auto second = run_mutants(config);
  CHECK(slurp(second.runs.front().file) == csv_a);
  CHECK(slurp(second.manifest_file) == man_a);
}

TEST_CASE("replication comparison orders the variances") {
  ExperimentConfig config;
  config.out_dir = fresh_dir("compare").string();
  const auto out = run_replication_compare(config);

  CHECK(out.variance_continuous >= 0.0);
  CHECK(out.variance_discrete_halving >= 0.0);
  CHECK(out.variance_discrete_binomial >= 0.0);
  CHECK(out.variance_continuous > out.variance_discrete_halving);
  CHECK(out.variance_discrete_binomial >= out.variance_discrete_halving);

  const std::string csv = slurp(out.comparison_file);
  CHECK(csv.rfind("mode,mean_au,variance_au2\n", 0) == 0);
}

TEST_CASE("discrete replication modes keep the distribution normalized") {
  for (const char* mode : {"discrete-halving", "discrete-binomial"}) {
    ExperimentConfig config;
    config.replication_mode = mode;
    const auto p = solve_colony(config, 1.0);
    CHECK_THAT(p.total(), WithinAbs(1.0, 1e-8));
    CHECK(p.min_entry() >= -1e-12);
  }
}

TEST_CASE("ssa command emits the shared histogram schema deterministically") {
  ExperimentConfig config;
  config.ssa_trajectories = 400;
  config.threads = 2;
  config.out_dir = fresh_dir("ssa_a").string();
  const auto a = run_ssa(config);
  CHECK_THAT(a.histogram.total(), WithinAbs(1.0, 1e-12));
  const std::string csv_a = slurp(a.file);

  config.out_dir = fresh_dir("ssa_b").string();
  config.threads = 1;  // schedule must not matter
  const auto b = run_ssa(config);
  CHECK(slurp(b.file) == csv_a);

  std::istringstream lines(csv_a);
  std::string header;
  std::getline(lines, header);
  CHECK(header == "bin_lower_au,bin_upper_au,p_MF,p_MH,p_UN,p_UO,p_O,p_total");
}

TEST_CASE("error-bound command writes the trace schema") {
  ExperimentConfig config;
  config.out_dir = fresh_dir("eb").string();
  const auto out = run_error_bound(config);

  REQUIRE(out.samples.size() == config.eb_checkpoints.size());
  const std::string csv = slurp(out.file);
  CHECK(csv.rfind("t,e1,e2,e,e1_bound\n", 0) == 0);
  for (std::size_t i = 0; i < out.samples.size(); ++i) {
    CHECK(std::isfinite(out.samples[i].e2));
    CHECK(std::abs(out.samples[i].e1) <= out.e1_bounds[i]);
  }
}

TEST_CASE("build command reports and dumps the assembled generators") {
  ExperimentConfig config;
  config.mutant_ratios = {15.8};
  config.out_dir = fresh_dir("build").string();
  const auto out = run_build(config, true);

  REQUIRE(out.generator_files.size() == 1);
  std::ifstream in(out.generator_files.front());
  std::size_t dim = 0;
  std::size_t nnz = 0;
  in >> dim >> nnz;
  CHECK(dim == 5 * config.grid().n_bins());
  CHECK(nnz > 0);

  const std::string manifest = slurp(out.manifest_file);
  CHECK(manifest.find("clamped_rate") != std::string::npos);
}

TEST_CASE("config validation failures raise config errors") {
  ExperimentConfig config;
  config.replication_mode = "sometimes";
  CHECK_THROWS_AS(solve_colony(config, 1.0), config_error);

  config = ExperimentConfig{};
  config.initial_bin = 4000;
  CHECK_THROWS_AS(solve_colony(config, 1.0), config_error);

  config = ExperimentConfig{};
  config.mutant_ratios = {};
  CHECK_THROWS_AS(run_mutants(config), config_error);

  config = ExperimentConfig{};
  config.eb_group_size = 7;  // does not divide 200
  CHECK_THROWS_AS(run_error_bound(config), config_error);

  config = ExperimentConfig{};
  config.k_H = -1.0;
  CHECK_THROWS_AS(run_mutants(config), config_error);
}

TEST_CASE("config text applies sections and reports line diagnostics") {
  ExperimentConfig config;
  apply_config_text(config,
                    "# comment\n"
                    "[rates]\n"
                    "gamma = 0.05\n"
                    "beta_f_on = 100\n"
                    "\n"
                    "[grid]\n"
                    "decades = 3\n"
                    "bins_per_decade = 5\n"
                    "[mutants]\n"
                    "ratios = [15.8, 1.0]\n"
                    "[run]\n"
                    "t_end = 10h\n"
                    "[output]\n"
                    "seed = 99\n",
                    "test.ini");
  CHECK(config.gamma == 0.05);
  CHECK(config.beta_f_on == 100.0);
  CHECK(config.grid_decades == 3.0);
  CHECK(config.bins_per_decade == 5);
  CHECK(config.mutant_ratios == std::vector<double>{15.8, 1.0});
  CHECK(config.t_end == "10h");
  CHECK(config.seed == 99);
  // Untouched keys keep their defaults.
  CHECK(config.beta_f_off == 0.37);

  ExperimentConfig fresh;
  try {
    apply_config_text(fresh, "[rates]\nnot_a_rate = 1\n", "bad.ini");
    FAIL("expected config_error");
  } catch (const config_error& e) {
    CHECK(std::string(e.what()).find("bad.ini:2") != std::string::npos);
    CHECK(std::string(e.what()).find("not_a_rate") != std::string::npos);
  }
  CHECK_THROWS_AS(apply_config_text(fresh, "[rates]\ngamma = fast\n", "bad.ini"),
                  config_error);
  CHECK_THROWS_AS(apply_config_text(fresh, "gamma 0.1\n", "bad.ini"), config_error);
}

TEST_CASE("rates report resolves the derived constants") {
  ExperimentConfig config;
  const std::string report = rates_report(config);
  CHECK(report.find("k_O = 400") != std::string::npos);
  CHECK(report.find("ratio_15.8_k_neg_R") != std::string::npos);
  CHECK(report.find("stationary_O") != std::string::npos);
}
