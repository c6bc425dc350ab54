#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <thread>
#include <vector>

#include "fgba/grid.hpp"
#include "fgba/phase_model.hpp"
#include "fgba/rng.hpp"
#include "fgba/state_space.hpp"

namespace fgba {

struct CellState {
  Phase phase = Phase::O;
  std::uint64_t protein = 0;
  double t = 0.0;
};

// How cell division acts on the protein count:
//   ContinuousHalving - division events arrive at replication_rate,
//                       protein -> floor(n/2);
//   DiscreteHalving   - division at every integer time, floor(n/2);
//   DiscreteBinomial  - division at every integer time,
//                       protein' ~ Binomial(n, 1/2).
// Every division also applies the phase map: M_F -> M_H, M_H -> M_H or U_N
// with probability 1/2 each, other phases unchanged.
enum class ReplicationMode { ContinuousHalving, DiscreteHalving, DiscreteBinomial };

namespace detail {

inline Phase divide_phase(Phase p, Xoshiro256StarStar& rng) {
  if (p == Phase::MF) return Phase::MH;
  if (p == Phase::MH) return rng.coin() ? Phase::UN : Phase::MH;
  return p;
}

inline std::uint64_t divide_protein(std::uint64_t n, ReplicationMode mode,
                                    Xoshiro256StarStar& rng) {
  if (mode == ReplicationMode::DiscreteBinomial) return rng.binomial_half(n);
  return n / 2;
}

// Exact jump-process core. Calls on_event(state) after each jump.
template <typename OnEvent>
void run_trajectory(const RateSet& rates, const std::array<double, kNumPhases>& beta_by_phase,
                    ReplicationMode mode, double t_end, CellState state,
                    Xoshiro256StarStar& rng, OnEvent&& on_event) {
  rates.validate();
  if (!(t_end > 0.0)) throw std::domain_error("t_end must be positive");
  const Eigen::MatrixXd k = phase_generator(rates);
  const bool discrete = mode != ReplicationMode::ContinuousHalving;

  while (state.t < t_end) {
    const auto p = static_cast<std::size_t>(state.phase);
    // Reaction list: 4 possible phase moves, birth, death, (division).
    std::array<double, kNumPhases + 3> rate{};
    std::array<int, kNumPhases + 3> target_phase{};
    std::size_t n_reactions = 0;
    for (std::size_t q = 0; q < kNumPhases; ++q) {
      if (q == p) continue;
      const double r = k(static_cast<Eigen::Index>(q), static_cast<Eigen::Index>(p));
      if (r > 0.0) {
        rate[n_reactions] = r;
        target_phase[n_reactions] = static_cast<int>(q);
        ++n_reactions;
      }
    }
    const std::size_t birth = n_reactions++;
    rate[birth] = beta_by_phase[p];
    const std::size_t death = n_reactions++;
    rate[death] = rates.gamma * static_cast<double>(state.protein);
    std::size_t division = n_reactions;
    if (!discrete && rates.replication_rate > 0.0) {
      division = n_reactions++;
      rate[division] = rates.replication_rate;
    }

    double total = 0.0;
    for (std::size_t i = 0; i < n_reactions; ++i) total += rate[i];

    const double next_division =
        discrete ? std::floor(state.t) + 1.0 : std::numeric_limits<double>::infinity();
    double t_jump = total > 0.0 ? state.t + rng.exponential(total)
                                : std::numeric_limits<double>::infinity();

    if (discrete && next_division <= std::min(t_jump, t_end)) {
      // Scheduled division preempts the tentative jump (memorylessness
      // makes discarding it exact).
      state.t = next_division;
      state.protein = divide_protein(state.protein, mode, rng);
      state.phase = divide_phase(state.phase, rng);
      on_event(state);
      continue;
    }
    if (t_jump >= t_end) {
      state.t = t_end;
      break;
    }

    state.t = t_jump;
    double u = rng.uniform01() * total;
    std::size_t chosen = n_reactions - 1;
    for (std::size_t i = 0; i < n_reactions; ++i) {
      u -= rate[i];
      if (u < 0.0) {
        chosen = i;
        break;
      }
    }
    if (chosen == birth) {
      ++state.protein;
    } else if (chosen == death) {
      if (state.protein > 0) --state.protein;
    } else if (chosen == division) {
      state.protein = divide_protein(state.protein, mode, rng);
      state.phase = divide_phase(state.phase, rng);
    } else {
      state.phase = static_cast<Phase>(target_phase[chosen]);
    }
    on_event(state);
  }
}

}  // namespace detail

// Exact-in-law trajectory of the configuration jump process: phase moves at
// the phase-variation rates, protein birth at beta(phase), death at
// gamma*n, division per the replication mode. Returns the initial state
// followed by the state after every jump; reproducible per seed.
inline std::vector<CellState> simulate_trajectory(
    const RateSet& rates, const std::array<double, kNumPhases>& beta_by_phase,
    ReplicationMode mode, double t_end, std::uint64_t seed,
    CellState initial = CellState{Phase::O, 0, 0.0}) {
  std::vector<CellState> events{initial};
  auto rng = trajectory_stream(seed, 0);
  detail::run_trajectory(rates, beta_by_phase, mode, t_end, initial, rng,
                         [&](const CellState& s) { events.push_back(s); });
  return events;
}

// End-state fluorescence histogram of an ensemble: bins mu*protein of each
// trajectory's final state into the grid (values beyond the top edge land
// in the top bin), keeping the phase marginal. Counts are integers, so the
// result is independent of the thread schedule and exact per seed.
inline ProbabilityVector ensemble_histogram(std::size_t n_traj, const RateSet& rates,
                                            const std::array<double, kNumPhases>& beta_by_phase,
                                            ReplicationMode mode, double t_end,
                                            const FluorescenceGrid& grid, double mu,
                                            std::uint64_t seed, unsigned n_threads = 1,
                                            CellState initial = CellState{Phase::O, 0, 0.0}) {
  if (n_traj < 1) throw std::invalid_argument("need at least one trajectory");
  if (!(mu > 0.0)) throw std::domain_error("mu must be positive");

  const StateSpace space = StateSpace::fluorescence(grid, kNumPhases);
  const std::size_t dim = space.dimension();

  auto run_block = [&](std::size_t begin, std::size_t end, std::vector<std::uint64_t>& counts) {
    for (std::size_t traj = begin; traj < end; ++traj) {
      CellState state = initial;
      auto rng = trajectory_stream(seed, traj);
      detail::run_trajectory(rates, beta_by_phase, mode, t_end, state, rng,
                             [&](const CellState& s) { state = s; });
      const std::size_t bin = grid.bin_of(mu * static_cast<double>(state.protein));
      ++counts[space.index(bin, static_cast<std::size_t>(state.phase))];
    }
  };

  std::vector<std::uint64_t> counts(dim, 0);
  const unsigned workers = std::max(1u, n_threads);
  if (workers == 1 || n_traj < 2 * workers) {
    run_block(0, n_traj, counts);
  } else {
    std::vector<std::vector<std::uint64_t>> partial(workers,
                                                    std::vector<std::uint64_t>(dim, 0));
    std::vector<std::thread> pool;
    const std::size_t chunk = (n_traj + workers - 1) / workers;
    for (unsigned w = 0; w < workers; ++w) {
      const std::size_t begin = std::min<std::size_t>(w * chunk, n_traj);
      const std::size_t end = std::min<std::size_t>(begin + chunk, n_traj);
      pool.emplace_back([&, begin, end, w] { run_block(begin, end, partial[w]); });
    }
    for (auto& th : pool) th.join();
    for (const auto& part : partial)
      for (std::size_t i = 0; i < dim; ++i) counts[i] += part[i];
  }

  std::vector<double> values(dim, 0.0);
  for (std::size_t i = 0; i < dim; ++i)
    values[i] = static_cast<double>(counts[i]) / static_cast<double>(n_traj);
  return ProbabilityVector{space, std::move(values)};
}

}  // namespace fgba
