#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "fgba/grid.hpp"

namespace fgba {

enum class Axis { ProteinCount, FluorescenceBin };

// Indexing of configurations (level, phase) where a level is either a
// protein count or a fluorescence bin. State (level l, phase p) sits at
// index n_phases*l + p: the first n_phases entries of a distribution are
// level 0, the next n_phases entries level 1, and so on.
struct StateSpace {
  std::size_t n_levels = 0;
  std::size_t n_phases = 5;
  Axis axis = Axis::ProteinCount;
  std::optional<FluorescenceGrid> grid;  // present when axis == FluorescenceBin

  static StateSpace protein_counts(std::size_t n_levels, std::size_t n_phases = 5) {
    if (n_levels == 0 || n_phases == 0) throw std::invalid_argument("empty state space");
    return StateSpace{n_levels, n_phases, Axis::ProteinCount, std::nullopt};
  }

  static StateSpace fluorescence(FluorescenceGrid g, std::size_t n_phases = 5) {
    if (n_phases == 0) throw std::invalid_argument("empty state space");
    const std::size_t bins = g.n_bins();
    return StateSpace{bins, n_phases, Axis::FluorescenceBin, std::move(g)};
  }

  std::size_t dimension() const { return n_levels * n_phases; }
  std::size_t index(std::size_t level, std::size_t phase) const {
    return n_phases * level + phase;
  }
  std::size_t level_of(std::size_t index) const { return index / n_phases; }
  std::size_t phase_of(std::size_t index) const { return index % n_phases; }

  bool operator==(const StateSpace& other) const = default;
};

struct ProbabilityVector {
  StateSpace space;
  std::vector<double> values;

  double total() const { return std::accumulate(values.begin(), values.end(), 0.0); }

  double min_entry() const {
    double m = values.empty() ? 0.0 : values.front();
    for (double v : values) m = std::min(m, v);
    return m;
  }

  static ProbabilityVector point_mass(StateSpace space, std::size_t level, std::size_t phase) {
    if (level >= space.n_levels || phase >= space.n_phases)
      throw std::invalid_argument("point mass outside state space");
    std::vector<double> v(space.dimension(), 0.0);
    v[space.index(level, phase)] = 1.0;
    return ProbabilityVector{std::move(space), std::move(v)};
  }

  static ProbabilityVector uniform(StateSpace space) {
    const std::size_t d = space.dimension();
    std::vector<double> v(d, 1.0 / static_cast<double>(d));
    return ProbabilityVector{std::move(space), std::move(v)};
  }

  // Marginal over phases: one entry per level.
  std::vector<double> level_marginal() const {
    std::vector<double> m(space.n_levels, 0.0);
    for (std::size_t i = 0; i < values.size(); ++i) m[space.level_of(i)] += values[i];
    return m;
  }

  // Marginal over levels: one entry per phase.
  std::vector<double> phase_marginal() const {
    std::vector<double> m(space.n_phases, 0.0);
    for (std::size_t i = 0; i < values.size(); ++i) m[space.phase_of(i)] += values[i];
    return m;
  }
};

inline double total_variation(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw std::invalid_argument("total_variation dimension mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += std::abs(a[i] - b[i]);
  return 0.5 * s;
}

inline double total_variation(const ProbabilityVector& a, const ProbabilityVector& b) {
  return total_variation(std::span<const double>(a.values), std::span<const double>(b.values));
}

}  // namespace fgba
