#include <catch2/catch_amalgamated.hpp>
#include <cmath>

#include "fgba/cme_builder.hpp"
#include "fgba/solver.hpp"
#include "fgba/ssa.hpp"
#include "helpers.hpp"

using namespace fgba;
using Catch::Matchers::WithinAbs;

namespace {

// Scaled-down five-phase system that stays well inside 20 protein levels.
RateSet small_system() {
  RateSet r = derive_rate_set(0.9, 0.1, 3.7, 15.8, 40.0);
  r.gamma = 0.5;
  r.replication_rate = 1.0;
  return r;
}

constexpr std::array<double, 5> kSmallBeta{2.0, 2.0, 0.6, 0.6, 0.05};

}  // namespace

TEST_CASE("frozen system produces no events") {
  RateSet r;  // all rates zero
  r.replication_rate = 0.0;
  const auto events = simulate_trajectory(r, {0, 0, 0, 0, 0},
                                          ReplicationMode::ContinuousHalving, 5.0, 42,
                                          CellState{Phase::UO, 3, 0.0});
  REQUIRE(events.size() == 1);
  CHECK(events.front().phase == Phase::UO);
  CHECK(events.front().protein == 3);
}

TEST_CASE("pure death never increases the protein count") {
  RateSet r;
  r.gamma = 0.8;
  r.replication_rate = 0.0;
  const auto events = simulate_trajectory(r, {0, 0, 0, 0, 0},
                                          ReplicationMode::ContinuousHalving, 30.0, 7,
                                          CellState{Phase::O, 25, 0.0});
  std::uint64_t prev = 25;
  for (const auto& e : events) {
    CHECK(e.protein <= prev);
    prev = e.protein;
  }
  CHECK(events.back().protein == 0);
}

TEST_CASE("same seed reproduces the trajectory and histogram bit for bit") {
  const RateSet r = small_system();
  const auto a = simulate_trajectory(r, kSmallBeta, ReplicationMode::DiscreteBinomial, 8.0, 99);
  const auto b = simulate_trajectory(r, kSmallBeta, ReplicationMode::DiscreteBinomial, 8.0, 99);
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].phase == b[i].phase);
    CHECK(a[i].protein == b[i].protein);
    CHECK(a[i].t == b[i].t);
  }

  const auto grid = FluorescenceGrid::from_widths(std::vector<double>(20, 1.0));
  const auto h1 = ensemble_histogram(500, r, kSmallBeta, ReplicationMode::ContinuousHalving,
                                     5.0, grid, 1.0, 1234);
  const auto h2 = ensemble_histogram(500, r, kSmallBeta, ReplicationMode::ContinuousHalving,
                                     5.0, grid, 1.0, 1234);
  CHECK(h1.values == h2.values);
}

TEST_CASE("histogram is independent of the thread schedule") {
  const RateSet r = small_system();
  const auto grid = FluorescenceGrid::from_widths(std::vector<double>(20, 1.0));
  const auto serial = ensemble_histogram(2000, r, kSmallBeta,
                                         ReplicationMode::ContinuousHalving, 4.0, grid, 1.0,
                                         777, 1);
  const auto threaded = ensemble_histogram(2000, r, kSmallBeta,
                                           ReplicationMode::ContinuousHalving, 4.0, grid,
                                           1.0, 777, 4);
  CHECK(serial.values == threaded.values);
}

TEST_CASE("single trajectory gives a point mass that sums to one") {
  const RateSet r = small_system();
  const auto grid = FluorescenceGrid::from_widths(std::vector<double>(20, 1.0));
  const auto h = ensemble_histogram(1, r, kSmallBeta, ReplicationMode::ContinuousHalving,
                                    2.0, grid, 1.0, 5);
  CHECK(h.total() == 1.0);
  int nonzero = 0;
  for (double v : h.values)
    if (v > 0.0) ++nonzero;
  CHECK(nonzero == 1);
}

TEST_CASE("single-phase ensemble mean approaches beta/gamma") {
  // Birth-death only: all phase rates zero, no replication.
  RateSet r;
  r.gamma = 0.1;
  r.replication_rate = 0.0;
  const std::array<double, 5> beta{0, 0, 0, 0, 5.0};  // production in the O phase

  const std::size_t n = 30000;
  const auto grid = FluorescenceGrid::from_widths(std::vector<double>(120, 1.0));
  const auto h = ensemble_histogram(n, r, beta, ReplicationMode::ContinuousHalving, 150.0,
                                    grid, 1.0, 2024, 4);
  double mean = 0.0;
  for (std::size_t b = 0; b < grid.n_bins(); ++b)
    mean += grid.lower_edge(b) * (h.values[h.space.index(b, 4)]);
  // Stationary law is Poisson(50): the ensemble mean sits within 3 sigma.
  const double sigma_mean = std::sqrt(50.0 / static_cast<double>(n));
  CHECK_THAT(mean, WithinAbs(50.0, 3.0 * sigma_mean));
}

TEST_CASE("phase marginal at large t matches the stationary distribution") {
  const RateSet r = small_system();
  const std::size_t n = 20000;
  const auto grid = FluorescenceGrid::from_widths(std::vector<double>(25, 1.0));
  const auto h = ensemble_histogram(n, r, kSmallBeta, ReplicationMode::ContinuousHalving,
                                    40.0, grid, 1.0, 31, 4);
  const auto marginal = h.phase_marginal();

  const Eigen::VectorXd pi = phase_steady_state(phase_generator(r), replication_phase_map(),
                                                r.replication_rate);
  for (std::size_t p = 0; p < 5; ++p) {
    const double expect = pi(static_cast<Eigen::Index>(p));
    const double sigma = std::sqrt(expect * (1.0 - expect) / static_cast<double>(n));
    CHECK_THAT(marginal[p], WithinAbs(expect, 3.0 * sigma + 1e-4));
  }
}

TEST_CASE("ensemble histogram agrees with the replicating CME") {
  // Five-phase system on 20 protein levels with continuous replication.
  const RateSet r = small_system();
  const std::size_t levels = 20;
  const auto space = StateSpace::protein_counts(levels, 5);
  const auto a = build_full_generator(phase_generator(r),
                                      std::span<const double>(kSmallBeta), r.gamma,
                                      levels - 1);
  const auto d = build_replication_matrix(space, PartitionRule::Halving)
                     .scaled(r.replication_rate);
  const auto m = assemble_final_generator(a, d);

  SolveOptions opts;
  opts.t_end = 5.0;
  const auto cme = solve(m, ProbabilityVector::point_mass(space, 0, 4), opts)
                       .checkpoints.back()
                       .distribution;

  // Unit-width grid with mu = 1 makes fluorescence bins protein counts.
  const auto grid = FluorescenceGrid::from_widths(std::vector<double>(levels, 1.0));
  const auto ssa = ensemble_histogram(30000, r, kSmallBeta,
                                      ReplicationMode::ContinuousHalving, 5.0, grid, 1.0,
                                      97, 4);
  CHECK(total_variation(ssa.values, cme.values) < 0.05);
}

TEST_CASE("replication-mode variance ordering on the ratio-1 colony") {
  RateSet r = derive_rate_set(4.3, 0.4, 3.7, 1.0, 1000.0);
  r.gamma = 0.0378;
  r.beta_f_on = 238.0;
  r.beta_f_partial = 3.0;
  r.beta_f_off = 0.37;
  const auto grid = default_experiment_grid(4.0, 10);

  // Simulate at mu = 10 a.u./protein: the binomial division spread scales
  // with mu, so the binomial-vs-halving gap resolves above the Monte Carlo
  // noise at an ensemble size a unit test can afford.
  const double mu = 10.0;
  std::array<double, 5> beta = r.beta_f_by_phase();
  for (auto& b : beta) b /= mu;

  const std::size_t n = 8000;
  const double t_end = hours_to_generations(20.0);
  const auto cont = ensemble_histogram(n, r, beta, ReplicationMode::ContinuousHalving,
                                       t_end, grid, mu, 11, 4);
  const auto halv = ensemble_histogram(n, r, beta, ReplicationMode::DiscreteHalving, t_end,
                                       grid, mu, 11, 4);
  const auto binom = ensemble_histogram(n, r, beta, ReplicationMode::DiscreteBinomial,
                                        t_end, grid, mu, 11, 4);

  const double v_cont = variance_fluorescence(cont, grid);
  const double v_halv = variance_fluorescence(halv, grid);
  const double v_binom = variance_fluorescence(binom, grid);
  CHECK(v_cont > v_binom);
  CHECK(v_binom >= v_halv);
}
