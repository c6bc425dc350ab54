#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

#include "fgba/grid.hpp"
#include "fgba/phase_model.hpp"
#include "fgba/sparse.hpp"
#include "fgba/state_space.hpp"

namespace fgba {

namespace detail {

inline std::size_t check_phase_matrix(const Eigen::MatrixXd& k,
                                      std::span<const double> beta_by_phase) {
  if (k.rows() != k.cols()) throw std::invalid_argument("phase matrix must be square");
  const auto n_phases = static_cast<std::size_t>(k.rows());
  if (n_phases == 0) throw std::invalid_argument("phase matrix must be nonempty");
  if (beta_by_phase.size() != n_phases)
    throw std::invalid_argument("one production rate per phase required");
  for (Eigen::Index j = 0; j < k.cols(); ++j) {
    if (std::abs(k.col(j).sum()) > 1e-9)
      throw std::invalid_argument("phase matrix must have zero column sums");
    for (Eigen::Index i = 0; i < k.rows(); ++i)
      if (i != j && k(i, j) < 0.0)
        throw std::invalid_argument("phase matrix off-diagonals must be nonnegative");
  }
  for (double b : beta_by_phase)
    if (!(b >= 0.0)) throw std::domain_error("production rates must be nonnegative");
  return n_phases;
}

inline void add_phase_rates(GeneratorBuilder& b, const Eigen::MatrixXd& k,
                            std::size_t n_phases, std::size_t level) {
  for (std::size_t p = 0; p < n_phases; ++p)
    for (std::size_t q = 0; q < n_phases; ++q)
      if (q != p) b.add_rate(level * n_phases + p, level * n_phases + q,
                             k(static_cast<Eigen::Index>(q), static_cast<Eigen::Index>(p)));
}

}  // namespace detail

// Generator of the full protein-count CME on levels 0..n_max: production
// up one level at beta(phase), linear degradation down one level at
// n*gamma, phase transitions within a level. Production out of the top
// level is cancelled into the diagonal (probability-conserving truncation);
// the cancelled rate is reported via clamped_rate() on the result.
inline SparseGenerator build_full_generator(const Eigen::MatrixXd& k,
                                            std::span<const double> beta_by_phase,
                                            double gamma, std::size_t n_max) {
  const std::size_t n_phases = detail::check_phase_matrix(k, beta_by_phase);
  if (!(gamma >= 0.0)) throw std::domain_error("gamma must be nonnegative");
  if (n_max < 1) throw std::invalid_argument("n_max must be >= 1");

  const std::size_t n_levels = n_max + 1;
  GeneratorBuilder b(n_levels * n_phases);
  for (std::size_t l = 0; l < n_levels; ++l) {
    for (std::size_t p = 0; p < n_phases; ++p) {
      const std::size_t from = l * n_phases + p;
      if (l + 1 < n_levels)
        b.add_rate(from, (l + 1) * n_phases + p, beta_by_phase[p]);
      else
        b.note_clamped(beta_by_phase[p]);
      if (l > 0) b.add_rate(from, (l - 1) * n_phases + p, gamma * static_cast<double>(l));
    }
    detail::add_phase_rates(b, k, n_phases, l);
  }
  return b.build();
}

// Fluorescence-based generator: bin widths replace group sizes, so the
// unknown per-protein quantities cancel. Production from bin i up carries
// beta_f(phase)/width(i); degradation from bin i down carries
// gamma*lower_edge(i)/width(i). Top-level production is cancelled into the
// diagonal as in build_full_generator.
inline SparseGenerator build_fgba_generator(const Eigen::MatrixXd& k,
                                            std::span<const double> beta_f_by_phase,
                                            const FluorescenceGrid& grid, double gamma) {
  const std::size_t n_phases = detail::check_phase_matrix(k, beta_f_by_phase);
  if (!(gamma >= 0.0)) throw std::domain_error("gamma must be nonnegative");
  if (grid.n_bins() == 0) throw std::invalid_argument("grid must be nonempty");

  const std::size_t n_bins = grid.n_bins();
  GeneratorBuilder b(n_bins * n_phases);
  for (std::size_t l = 0; l < n_bins; ++l) {
    for (std::size_t p = 0; p < n_phases; ++p) {
      const std::size_t from = l * n_phases + p;
      if (l + 1 < n_bins)
        b.add_rate(from, (l + 1) * n_phases + p, beta_f_by_phase[p] / grid.width(l));
      else
        b.note_clamped(beta_f_by_phase[p] / grid.width(l));
      if (l > 0) b.add_rate(from, (l - 1) * n_phases + p,
                            gamma * grid.lower_edge(l) / grid.width(l));
    }
    detail::add_phase_rates(b, k, n_phases, l);
  }
  return b.build();
}

enum class PartitionRule { Halving, Binomial };
enum class BinRepresentative { LowerEdge, Midpoint };

namespace detail {

// Binomial(n, 1/2) weights via the symmetric recurrence; exact for small n.
inline std::vector<double> binomial_half_weights(std::size_t n) {
  std::vector<double> w(n + 1);
  w[0] = std::exp(-static_cast<double>(n) * std::log(2.0));
  for (std::size_t j = 0; j < n; ++j)
    w[j + 1] = w[j] * static_cast<double>(n - j) / static_cast<double>(j + 1);
  return w;
}

// Target levels and weights for the protein partition at division.
inline std::vector<std::pair<std::size_t, double>> partition_targets(
    const StateSpace& space, PartitionRule rule, BinRepresentative rep, std::size_t level) {
  if (rule == PartitionRule::Halving) {
    if (space.axis == Axis::ProteinCount) return {{level / 2, 1.0}};
    const auto& grid = *space.grid;
    const double value =
        rep == BinRepresentative::LowerEdge ? grid.lower_edge(level) : grid.midpoint(level);
    return {{grid.bin_of(value / 2.0), 1.0}};
  }
  if (space.axis != Axis::ProteinCount)
    throw std::invalid_argument(
        "binomial partition is unsupported on a fluorescence-bin axis");
  const auto weights = binomial_half_weights(level);
  std::vector<std::pair<std::size_t, double>> out;
  out.reserve(weights.size());
  for (std::size_t t = 0; t < weights.size(); ++t) out.emplace_back(t, weights[t]);
  return out;
}

}  // namespace detail

// The column-stochastic division map D+: each source level moves to the
// level(s) holding half its representative value, while the phase block of
// replication_phase_map is applied.
inline SparseMatrix build_replication_map(const StateSpace& space, PartitionRule rule,
                                          BinRepresentative rep = BinRepresentative::LowerEdge) {
  if (space.axis == Axis::FluorescenceBin && !space.grid)
    throw std::invalid_argument("fluorescence state space is missing its grid");
  const Eigen::MatrixXd pm = replication_phase_map(space.n_phases);
  std::vector<Triplet> ts;
  for (std::size_t l = 0; l < space.n_levels; ++l) {
    for (const auto& [target, weight] : detail::partition_targets(space, rule, rep, l)) {
      if (weight == 0.0) continue;
      for (std::size_t pj = 0; pj < space.n_phases; ++pj)
        for (std::size_t pi = 0; pi < space.n_phases; ++pi) {
          const double e = pm(static_cast<Eigen::Index>(pi), static_cast<Eigen::Index>(pj));
          if (e != 0.0) ts.push_back({space.index(target, pi), space.index(l, pj), weight * e});
        }
    }
  }
  return SparseMatrix(space.dimension(), ts);
}

// Replication generator D = -I + D+, assembled as paired rates so columns
// sum to zero exactly.
inline SparseGenerator build_replication_matrix(const StateSpace& space, PartitionRule rule,
                                                BinRepresentative rep = BinRepresentative::LowerEdge) {
  if (space.axis == Axis::FluorescenceBin && !space.grid)
    throw std::invalid_argument("fluorescence state space is missing its grid");
  const Eigen::MatrixXd pm = replication_phase_map(space.n_phases);
  GeneratorBuilder b(space.dimension());
  for (std::size_t l = 0; l < space.n_levels; ++l) {
    for (const auto& [target, weight] : detail::partition_targets(space, rule, rep, l)) {
      if (weight == 0.0) continue;
      for (std::size_t pj = 0; pj < space.n_phases; ++pj)
        for (std::size_t pi = 0; pi < space.n_phases; ++pi) {
          const double e = pm(static_cast<Eigen::Index>(pi), static_cast<Eigen::Index>(pj));
          if (e != 0.0) b.add_rate(space.index(l, pj), space.index(target, pi), weight * e);
        }
    }
  }
  return b.build();
}

// Combined generator A + D of the replicating system.
inline SparseGenerator assemble_final_generator(const SparseGenerator& a,
                                                const SparseGenerator& d) {
  if (a.dimension() != d.dimension())
    throw std::invalid_argument("generator dimensions do not match");
  return SparseMatrix::sum(a, d);
}

}  // namespace fgba
