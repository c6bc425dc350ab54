#include <catch2/catch_amalgamated.hpp>

#include "fgba/cme_builder.hpp"
#include "fgba/error_bound.hpp"
#include "helpers.hpp"

using namespace fgba;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

TEST_CASE("grid growth ratio") {
  CHECK(grid_growth_ratio(FluorescenceGrid::from_widths({2.0, 2.0, 2.0})) == 1.0);
  CHECK_THAT(grid_growth_ratio(default_experiment_grid(4.0, 10)),
             WithinRel(1.2589254117941673, 1e-12));
  CHECK(grid_growth_ratio(FluorescenceGrid::from_widths({1.0, 3.0, 2.0})) == 3.0);
  CHECK_THROWS_AS(grid_growth_ratio(FluorescenceGrid::from_widths({1.0})),
                  std::invalid_argument);
}

TEST_CASE("epsilon from plan") {
  const auto exact = FluorescenceGrid::from_widths({10.0, 10.0});
  CHECK(epsilon_from_plan(exact, plan_from_grid(exact, 1.0, 1), 1.0) == 0.0);

  const auto g9 = FluorescenceGrid::from_widths({9.0});
  CHECK(epsilon_from_plan(g9, AggregationPlan{{4}, 1}, 2.0) == 1.0);

  const auto g2 = FluorescenceGrid::from_widths({10.0, 100.0});
  CHECK(epsilon_from_plan(g2, AggregationPlan{{3, 33}, 1}, 3.0) == 1.0);

  CHECK_THROWS_AS(epsilon_from_plan(g2, AggregationPlan{{3}, 1}, 3.0),
                  std::invalid_argument);
}

TEST_CASE("r_hat formula and monotonicity") {
  CHECK(r_hat(1.0, 0.0, 1.0) == 0.0);
  CHECK(r_hat(2.0, 0.0, 5.0) == 0.5);
  CHECK_THAT(r_hat(1.2589254117941673, 0.5, 1.0), WithinRel(0.5813075803748949, 1e-12));

  Xoshiro256StarStar rng(19);
  for (int rep = 0; rep < 100; ++rep) {
    const double r = 1.0 + 4.0 * rng.uniform01();
    const double eps = 2.0 * rng.uniform01();
    const double dmin = 0.2 + 5.0 * rng.uniform01();
    const double base = r_hat(r, eps, dmin);
    CHECK(r_hat(r * 1.1, eps, dmin) >= base);
    CHECK(r_hat(r, eps + 0.1, dmin) >= base);
    CHECK(r_hat(r, eps, dmin * 1.1) <= base);
  }
}

TEST_CASE("e1 bound endpoints") {
  ErrorBoundInputs in;
  in.mu = 2.0;
  in.epsilon = 1.0;
  in.r = 1.5;
  in.delta_min = 4.0;
  in.delta_max = 9.0;
  in.gamma = 0.3;
  // At t = 0 only the boundary term survives.
  CHECK_THAT(e1_bound(0.0, in, 123.0), WithinRel((9.0 + 1.0) / 2.0, 1e-12));

  // epsilon = 0, r = 1 kills the r_hat term entirely.
  ErrorBoundInputs uniform = in;
  uniform.epsilon = 0.0;
  uniform.r = 1.0;
  const double t = 3.0;
  CHECK_THAT(e1_bound(t, uniform, 123.0),
             WithinRel(9.0 / 2.0 * std::exp(0.3 * t), 1e-12));
}

namespace {

struct Instance {
  SparseGenerator full;
  SparseGenerator fgba;
  AggregationPlan plan;
  FluorescenceGrid grid;
  ProbabilityVector p0;
};

Instance single_phase_instance(std::size_t levels, std::size_t group, double mu,
                               double beta, double gamma) {
  Instance inst{
      build_full_generator(Eigen::MatrixXd::Zero(1, 1), std::vector<double>{beta}, gamma,
                           levels - 1),
      SparseGenerator{},
      AggregationPlan::uniform(levels / group, group, 1),
      FluorescenceGrid::from_widths(
          std::vector<double>(levels / group, mu * static_cast<double>(group))),
      ProbabilityVector::point_mass(StateSpace::protein_counts(levels, 1), 0, 0)};
  inst.fgba = build_fgba_generator(Eigen::MatrixXd::Zero(1, 1),
                                   std::vector<double>{mu * beta}, inst.grid, gamma);
  return inst;
}

}  // namespace

TEST_CASE("identity plan with exact mu alignment gives vanishing error") {
  const auto inst = single_phase_instance(120, 1, 1.0, 5.0, 0.1);
  SolveOptions opts;
  opts.tol = 1e-10;
  const auto samples =
      empirical_error(inst.full, inst.fgba, inst.plan, 1.0, inst.p0, inst.grid,
                      {0.5, 2.0, 8.0}, opts);
  for (const auto& s : samples) CHECK(std::abs(s.e) < 10.0 * opts.tol * 120.0);
}

TEST_CASE("empirical e1 stays below the printed bound on the oracle instance") {
  const auto inst = single_phase_instance(200, 10, 1.0, 5.0, 0.1);
  const auto inputs = error_bound_inputs(inst.grid, inst.plan, 1.0, 0.1);
  CHECK(inputs.epsilon == 0.0);
  CHECK(inputs.r == 1.0);
  CHECK(inputs.delta_max == 10.0);

  const std::vector<double> checkpoints{1.0, 5.0, 14.12};
  const auto samples = empirical_error(inst.full, inst.fgba, inst.plan, 1.0, inst.p0,
                                       inst.grid, checkpoints);
  REQUIRE(samples.size() == 3);
  CHECK(samples.front().t == 1.0);
  for (const auto& s : samples) {
    const double bound = e1_bound(s.t, inputs, s.expected_agg);
    CHECK(std::abs(s.e1) <= bound);
    CHECK(std::isfinite(s.e2));
    CHECK_THAT(s.e, WithinAbs(1.0 * s.e1 + s.e2, 1e-12));
  }
}

TEST_CASE("e1 vanishes at t = 0 for a point mass at zero") {
  const auto inst = single_phase_instance(60, 6, 1.0, 2.0, 0.2);
  const auto samples =
      empirical_error(inst.full, inst.fgba, inst.plan, 1.0, inst.p0, inst.grid, {0.0, 1.0});
  CHECK(samples.front().e1 == 0.0);
  CHECK(samples.front().e2 == 0.0);
}

TEST_CASE("empirical_error validates its dimensions") {
  const auto inst = single_phase_instance(60, 6, 1.0, 2.0, 0.2);
  const auto bad_plan = AggregationPlan::uniform(5, 6, 1);
  CHECK_THROWS_AS(empirical_error(inst.full, inst.fgba, bad_plan, 1.0, inst.p0, inst.grid,
                                  {1.0}),
                  std::invalid_argument);
  CHECK_THROWS_AS(empirical_error(inst.full, inst.fgba, inst.plan, 0.0, inst.p0, inst.grid,
                                  {1.0}),
                  std::domain_error);
}

TEST_CASE("error bound inputs derived from a log grid") {
  const auto grid = default_experiment_grid(4.0, 10);
  const auto plan = plan_from_grid(grid, 1.0, 1);
  const auto in = error_bound_inputs(grid, plan, 1.0, 0.0378);
  CHECK_THAT(in.r, WithinRel(1.2589254117941673, 1e-12));
  // Thinnest bin is [1, 10^0.1).
  CHECK_THAT(in.delta_min, WithinRel(std::pow(10.0, 0.1) - 1.0, 1e-12));
  CHECK_THAT(in.delta_max, WithinRel(std::pow(10.0, 4.0) - std::pow(10.0, 3.9), 1e-12));
  // Flooring keeps each group within one protein of its bin width.
  CHECK(in.epsilon <= 1.0);
}
