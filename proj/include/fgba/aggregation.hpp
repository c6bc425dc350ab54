#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <span>
#include <stdexcept>
#include <vector>

#include "fgba/grid.hpp"
#include "fgba/sparse.hpp"
#include "fgba/state_space.hpp"

namespace fgba {

// Grouping of consecutive levels into groups of m_1, m_2, ... levels.
// per_level_block is the number of phases carried by each level (5 when
// lumping along the level axis of a phase-resolved chain, 1 for scalar
// chains); phases are never lumped.
struct AggregationPlan {
  std::vector<std::size_t> group_sizes;
  std::size_t per_level_block = 5;

  void validate() const {
    if (group_sizes.empty()) throw std::invalid_argument("aggregation plan has no groups");
    if (per_level_block == 0) throw std::invalid_argument("per_level_block must be >= 1");
    for (auto m : group_sizes)
      if (m < 1) throw std::invalid_argument("group sizes must be >= 1");
  }

  std::size_t n_groups() const { return group_sizes.size(); }
  std::size_t source_levels() const {
    return std::accumulate(group_sizes.begin(), group_sizes.end(), std::size_t{0});
  }
  std::size_t source_dimension() const { return source_levels() * per_level_block; }
  std::size_t aggregated_dimension() const { return n_groups() * per_level_block; }

  // level -> group lookup table.
  std::vector<std::size_t> level_groups() const {
    std::vector<std::size_t> lg;
    lg.reserve(source_levels());
    for (std::size_t g = 0; g < group_sizes.size(); ++g)
      lg.insert(lg.end(), group_sizes[g], g);
    return lg;
  }

  // Cumulative group sizes (0, m_1, m_1+m_2, ...): the level offset of each
  // group, used as expectation weights on the aggregated chain.
  std::vector<double> group_offsets() const {
    std::vector<double> off(n_groups(), 0.0);
    for (std::size_t g = 1; g < n_groups(); ++g)
      off[g] = off[g - 1] + static_cast<double>(group_sizes[g - 1]);
    return off;
  }

  static AggregationPlan identity(std::size_t n_levels, std::size_t per_level_block = 5) {
    return AggregationPlan{std::vector<std::size_t>(n_levels, 1), per_level_block};
  }

  static AggregationPlan uniform(std::size_t n_groups, std::size_t group_size,
                                 std::size_t per_level_block = 5) {
    return AggregationPlan{std::vector<std::size_t>(n_groups, group_size), per_level_block};
  }
};

// m_i = floor(width_i / mu), clamped to >= 1: the number of proteins whose
// fluorescence fits in one grid bin.
inline AggregationPlan plan_from_grid(const FluorescenceGrid& grid, double mu,
                                      std::size_t per_level_block = 5) {
  if (!(mu > 0.0)) throw std::domain_error("mu must be positive");
  std::vector<std::size_t> m(grid.n_bins());
  for (std::size_t i = 0; i < grid.n_bins(); ++i) {
    const double q = std::floor(grid.width(i) / mu);
    m[i] = q < 1.0 ? std::size_t{1} : static_cast<std::size_t>(q);
  }
  return AggregationPlan{std::move(m), per_level_block};
}

inline bool is_state_partitioning(const AggregationPlan& plan, std::size_t source_dim) {
  if (plan.group_sizes.empty() || plan.per_level_block == 0) return false;
  for (auto m : plan.group_sizes)
    if (m < 1) return false;
  return plan.source_dimension() == source_dim;
}

// P_agg[g] = sum of P over the levels of group g, phase by phase.
inline std::vector<double> aggregate_values(std::span<const double> p,
                                            const AggregationPlan& plan) {
  plan.validate();
  if (p.size() != plan.source_dimension())
    throw std::invalid_argument("aggregate: dimension mismatch");
  const std::size_t block = plan.per_level_block;
  std::vector<double> out(plan.aggregated_dimension(), 0.0);
  const auto lg = plan.level_groups();
  for (std::size_t i = 0; i < p.size(); ++i)
    out[lg[i / block] * block + i % block] += p[i];
  return out;
}

// Each level of group g receives P_agg[g]/m_g (uniform disaggregation).
inline std::vector<double> disaggregate_values(std::span<const double> p_agg,
                                               const AggregationPlan& plan) {
  plan.validate();
  if (p_agg.size() != plan.aggregated_dimension())
    throw std::invalid_argument("disaggregate: dimension mismatch");
  const std::size_t block = plan.per_level_block;
  std::vector<double> out(plan.source_dimension(), 0.0);
  const auto lg = plan.level_groups();
  for (std::size_t i = 0; i < out.size(); ++i) {
    const std::size_t g = lg[i / block];
    out[i] = p_agg[g * block + i % block] / static_cast<double>(plan.group_sizes[g]);
  }
  return out;
}

inline ProbabilityVector aggregate_vector(const ProbabilityVector& p,
                                          const AggregationPlan& plan) {
  if (plan.per_level_block != p.space.n_phases)
    throw std::invalid_argument("aggregation block must equal the phase count");
  StateSpace space{plan.n_groups(), p.space.n_phases, p.space.axis, std::nullopt};
  return ProbabilityVector{space, aggregate_values(p.values, plan)};
}

inline ProbabilityVector disaggregate_vector(const ProbabilityVector& p_agg,
                                             const AggregationPlan& plan) {
  if (plan.per_level_block != p_agg.space.n_phases)
    throw std::invalid_argument("aggregation block must equal the phase count");
  StateSpace space{plan.source_levels(), p_agg.space.n_phases, p_agg.space.axis, std::nullopt};
  return ProbabilityVector{space, disaggregate_values(p_agg.values, plan)};
}

// The approximated aggregated generator E A F, realized sparsely: entry
// (i, j) of A contributes value/m_{g(j)} to (group(i), group(j)) in the
// matching phase slots. Zero column sums are preserved.
inline SparseMatrix aggregate_generator(const SparseMatrix& a, const AggregationPlan& plan) {
  plan.validate();
  if (a.dimension() != plan.source_dimension())
    throw std::invalid_argument("aggregate_generator: dimension mismatch");
  const std::size_t block = plan.per_level_block;
  const auto lg = plan.level_groups();
  std::vector<Triplet> ts;
  ts.reserve(a.nnz());
  for (const auto& t : a.triplets()) {
    const std::size_t gi = lg[t.row / block];
    const std::size_t gj = lg[t.col / block];
    ts.push_back({gi * block + t.row % block, gj * block + t.col % block,
                  t.value / static_cast<double>(plan.group_sizes[gj])});
  }
  return SparseMatrix(plan.aggregated_dimension(), std::move(ts));
}

// Max-absolute-entry norm of E A - (E A F) E; zero iff the chain aggregates
// exactly (the aggregated process is Markov with generator E A F).
inline double lumpability_residual(const SparseMatrix& a, const AggregationPlan& plan) {
  plan.validate();
  if (a.dimension() != plan.source_dimension())
    throw std::invalid_argument("lumpability_residual: dimension mismatch");
  const std::size_t block = plan.per_level_block;
  const auto lg = plan.level_groups();
  const auto rows = static_cast<Eigen::Index>(plan.aggregated_dimension());
  const auto cols = static_cast<Eigen::Index>(a.dimension());

  Eigen::MatrixXd ea = Eigen::MatrixXd::Zero(rows, cols);
  for (const auto& t : a.triplets()) {
    const std::size_t gi = lg[t.row / block];
    ea(static_cast<Eigen::Index>(gi * block + t.row % block),
       static_cast<Eigen::Index>(t.col)) += t.value;
  }

  Eigen::MatrixXd eafe = Eigen::MatrixXd::Zero(rows, cols);
  const auto eaf = aggregate_generator(a, plan);
  for (const auto& t : eaf.triplets()) {
    const std::size_t gj = t.col / block;
    const std::size_t pj = t.col % block;
    for (std::size_t l = 0; l < lg.size(); ++l)
      if (lg[l] == gj)
        eafe(static_cast<Eigen::Index>(t.row),
             static_cast<Eigen::Index>(l * block + pj)) = t.value;
  }
  return (ea - eafe).cwiseAbs().maxCoeff();
}

}  // namespace fgba
