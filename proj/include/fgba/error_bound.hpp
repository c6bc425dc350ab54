#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

#include "fgba/aggregation.hpp"
#include "fgba/grid.hpp"
#include "fgba/solver.hpp"
#include "fgba/sparse.hpp"
#include "fgba/state_space.hpp"

namespace fgba {

// Quantities entering the aggregation error bound: the fluorescence-GFP
// ratio mu, the group-size rounding slack epsilon, the grid growth ratio r,
// and the extreme grid widths.
struct ErrorBoundInputs {
  double mu = 1.0;
  double epsilon = 0.0;
  double r = 1.0;
  double delta_min = 0.0;
  double delta_max = 0.0;
  double gamma = 0.0;

  void validate() const {
    if (!(mu > 0.0)) throw std::domain_error("mu must be positive");
    if (!(epsilon >= 0.0)) throw std::domain_error("epsilon must be nonnegative");
    if (!(r > 0.0)) throw std::domain_error("r must be positive");
    if (!(delta_min > 0.0 && delta_max >= delta_min))
      throw std::domain_error("need 0 < delta_min <= delta_max");
    if (!(gamma >= 0.0)) throw std::domain_error("gamma must be nonnegative");
  }
};

// Smallest r with width_i <= r * width_{i-1} for all i.
inline double grid_growth_ratio(const FluorescenceGrid& grid) {
  if (grid.n_bins() < 2)
    throw std::invalid_argument("grid_growth_ratio needs at least two bins");
  double r = 0.0;
  for (std::size_t i = 1; i < grid.n_bins(); ++i)
    r = std::max(r, grid.width(i) / grid.width(i - 1));
  return r;
}

// Largest |mu * m_i - width_i|: how far the integer group sizes sit from
// the grid widths.
inline double epsilon_from_plan(const FluorescenceGrid& grid, const AggregationPlan& plan,
                                double mu) {
  if (!(mu > 0.0)) throw std::domain_error("mu must be positive");
  if (grid.n_bins() != plan.n_groups())
    throw std::invalid_argument("epsilon_from_plan: grid and plan lengths differ");
  double eps = 0.0;
  for (std::size_t i = 0; i < grid.n_bins(); ++i)
    eps = std::max(eps, std::abs(mu * static_cast<double>(plan.group_sizes[i]) - grid.width(i)));
  return eps;
}

// r_hat = 1 - delta_min / (r*delta_min + r*epsilon + epsilon): the bound on
// max_i (m_i - m_{i-1})/m_i under the grid growth and rounding assumptions.
inline double r_hat(double r, double epsilon, double delta_min) {
  if (!(r > 0.0) || !(epsilon >= 0.0) || !(delta_min > 0.0))
    throw std::domain_error("r_hat needs r > 0, epsilon >= 0, delta_min > 0");
  return 1.0 - delta_min / (r * delta_min + r * epsilon + epsilon);
}

// Printed upper bound on the aggregation error e1(t) in protein counts:
//   (delta_max + epsilon)/mu * e^{gamma t}
//     + r_hat * (1 - e^{-gamma t}) * gamma * E[P_a(t)],
// where expected_pa is the aggregated-chain mean under cumulative
// group-size weights at time t.
inline double e1_bound(double t, const ErrorBoundInputs& inputs, double expected_pa) {
  if (!(t >= 0.0)) throw std::domain_error("t must be nonnegative");
  inputs.validate();
  const double rh = r_hat(inputs.r, inputs.epsilon, inputs.delta_min);
  return (inputs.delta_max + inputs.epsilon) / inputs.mu * std::exp(inputs.gamma * t) +
         rh * (1.0 - std::exp(-inputs.gamma * t)) * inputs.gamma * expected_pa;
}

inline ErrorBoundInputs error_bound_inputs(const FluorescenceGrid& grid,
                                           const AggregationPlan& plan, double mu,
                                           double gamma) {
  ErrorBoundInputs in;
  in.mu = mu;
  in.epsilon = epsilon_from_plan(grid, plan, mu);
  in.r = grid.n_bins() >= 2 ? grid_growth_ratio(grid) : 1.0;
  in.delta_min = *std::min_element(grid.widths().begin(), grid.widths().end());
  in.delta_max = *std::max_element(grid.widths().begin(), grid.widths().end());
  in.gamma = gamma;
  return in;
}

struct ErrorSample {
  double t = 0.0;
  double e1 = 0.0;  // E[P(t)] - E[P_a(t)], protein counts
  double e2 = 0.0;  // mu E[P_a(t)] - E[P_f(t)], a.u.
  double e = 0.0;   // mu e1 + e2, a.u.
  double expected_full = 0.0;   // counts
  double expected_agg = 0.0;    // counts
  double expected_fgba = 0.0;   // a.u.
};

namespace detail {

inline double expectation_under(std::span<const double> level_weights,
                                const ProbabilityVector& p) {
  const auto marginal = p.level_marginal();
  if (marginal.size() != level_weights.size())
    throw std::invalid_argument("expectation weight length mismatch");
  double mean = 0.0;
  for (std::size_t i = 0; i < marginal.size(); ++i) mean += level_weights[i] * marginal[i];
  return mean;
}

}  // namespace detail

// Empirical error decomposition of the grid-based aggregation: solves the
// full chain, its aggregated chain E A F, and the fluorescence chain, and
// reports e1 (aggregation error, count units), e2 (grid-rounding error,
// a.u.) and e = mu*e1 + e2 at each checkpoint. Expectations use weights
// (0, 1, 2, ...) on the full chain, cumulative group sizes on the
// aggregated chain, and lower bin edges on the fluorescence chain.
inline std::vector<ErrorSample> empirical_error(const SparseGenerator& full,
                                                const SparseGenerator& fgba,
                                                const AggregationPlan& plan, double mu,
                                                const ProbabilityVector& p0_full,
                                                const FluorescenceGrid& grid,
                                                const std::vector<double>& checkpoints,
                                                SolveOptions opts = {}) {
  if (!(mu > 0.0)) throw std::domain_error("mu must be positive");
  if (full.dimension() != plan.source_dimension())
    throw std::invalid_argument("empirical_error: full chain does not match plan");
  if (fgba.dimension() != plan.aggregated_dimension())
    throw std::invalid_argument("empirical_error: fluorescence chain does not match plan");
  if (grid.n_bins() != plan.n_groups())
    throw std::invalid_argument("empirical_error: grid does not match plan");
  if (p0_full.values.size() != full.dimension())
    throw std::invalid_argument("empirical_error: initial distribution dimension mismatch");

  opts.checkpoint_times = checkpoints;
  opts.t_end = checkpoints.empty() ? 0.0 : checkpoints.back();

  const SparseMatrix agg = aggregate_generator(full, plan);
  const ProbabilityVector p0_agg = aggregate_vector(p0_full, plan);
  const ProbabilityVector p0_fgba{
      StateSpace::fluorescence(grid, plan.per_level_block), p0_agg.values};

  const auto sol_full = solve(full, p0_full, opts);
  const auto sol_agg = solve(agg, p0_agg, opts);
  const auto sol_fgba = solve(fgba, p0_fgba, opts);

  std::vector<double> count_weights(p0_full.space.n_levels);
  for (std::size_t i = 0; i < count_weights.size(); ++i)
    count_weights[i] = static_cast<double>(i);
  const auto agg_weights = plan.group_offsets();
  std::vector<double> edge_weights(grid.n_bins());
  for (std::size_t i = 0; i < edge_weights.size(); ++i) edge_weights[i] = grid.lower_edge(i);

  std::vector<ErrorSample> out;
  out.reserve(checkpoints.size());
  for (std::size_t k = 0; k < checkpoints.size(); ++k) {
    ErrorSample s;
    s.t = checkpoints[k];
    s.expected_full =
        detail::expectation_under(count_weights, sol_full.checkpoints[k].distribution);
    s.expected_agg =
        detail::expectation_under(agg_weights, sol_agg.checkpoints[k].distribution);
    s.expected_fgba =
        detail::expectation_under(edge_weights, sol_fgba.checkpoints[k].distribution);
    s.e1 = s.expected_full - s.expected_agg;
    s.e2 = mu * s.expected_agg - s.expected_fgba;
    s.e = mu * s.e1 + s.e2;
    out.push_back(s);
  }
  return out;
}

}  // namespace fgba
