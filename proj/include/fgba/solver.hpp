#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include "fgba/errors.hpp"
#include "fgba/grid.hpp"
#include "fgba/sparse.hpp"
#include "fgba/state_space.hpp"

namespace fgba {

enum class SolveMethod { Uniformization, RK4 };

struct SolveOptions {
  SolveMethod method = SolveMethod::Uniformization;
  double t_end = 0.0;
  double dt = 1e-3;    // RK4 step
  double tol = 1e-8;   // uniformization series tail bound
  std::vector<double> checkpoint_times;  // defaults to {t_end} when empty

  void validate() const {
    if (!(t_end >= 0.0)) throw std::invalid_argument("t_end must be nonnegative");
    if (!(dt > 0.0)) throw std::invalid_argument("dt must be positive");
    if (!(tol > 0.0 && tol < 1.0)) throw std::invalid_argument("tol must lie in (0, 1)");
  }

  std::vector<double> resolved_checkpoints() const {
    std::vector<double> cps = checkpoint_times.empty()
                                  ? std::vector<double>{t_end}
                                  : checkpoint_times;
    double prev = 0.0;
    for (double t : cps) {
      if (t < prev) throw std::invalid_argument("checkpoints must be nondecreasing and >= 0");
      prev = t;
    }
    return cps;
  }
};

struct Checkpoint {
  double t = 0.0;
  ProbabilityVector distribution;
};

struct SolveResult {
  std::vector<Checkpoint> checkpoints;
  std::vector<std::string> warnings;
};

namespace detail {

// Uniformized stochastic matrix S = I + M/lambda. Entries are clamped at
// zero against rounding so S-products stay exactly nonnegative.
inline SparseMatrix uniformized_matrix(const SparseMatrix& m, double lambda) {
  auto ts = m.triplets();
  std::vector<Triplet> out;
  out.reserve(ts.size() + m.dimension());
  std::vector<bool> diag_seen(m.dimension(), false);
  for (auto& t : ts) {
    double v = t.value / lambda;
    if (t.row == t.col) {
      diag_seen[t.row] = true;
      v += 1.0;
    }
    out.push_back({t.row, t.col, std::max(v, 0.0)});
  }
  for (std::size_t r = 0; r < m.dimension(); ++r)
    if (!diag_seen[r]) out.push_back({r, r, 1.0});
  return SparseMatrix(m.dimension(), std::move(out));
}

// Advances v over one interval of length tau by the Poisson-weighted power
// series, splitting into segments so the series stays in representable
// range. Each segment truncates once the accumulated Poisson mass exceeds
// 1 - seg_tol.
inline void uniformization_advance(const SparseMatrix& s, double lambda, double tau,
                                   double tol, std::vector<double>& v,
                                   std::vector<std::string>& warnings) {
  if (tau <= 0.0) return;
  constexpr double kMaxSegmentMass = 350.0;  // keeps exp(-a) normal
  const auto n_segments =
      std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(lambda * tau / kMaxSegmentMass)));
  const double seg_tau = tau / static_cast<double>(n_segments);
  const double seg_tol = tol / static_cast<double>(n_segments);

  std::vector<double> power(v.size());
  std::vector<double> next(v.size());
  for (std::size_t seg = 0; seg < n_segments; ++seg) {
    const double a = lambda * seg_tau;
    double weight = std::exp(-a);
    double mass = weight;
    power = v;
    std::vector<double> acc(v.size(), 0.0);
    for (std::size_t i = 0; i < v.size(); ++i) acc[i] = weight * power[i];
    const auto k_max = static_cast<std::size_t>(a + 60.0 * std::sqrt(a) + 60.0);
    std::size_t k = 0;
    while (1.0 - mass >= seg_tol && k < k_max) {
      ++k;
      s.matvec(power, next);
      power.swap(next);
      weight *= a / static_cast<double>(k);
      mass += weight;
      for (std::size_t i = 0; i < v.size(); ++i) acc[i] += weight * power[i];
    }
    if (1.0 - mass >= seg_tol)
      warnings.push_back("uniformization: series cap reached before tail bound");
    v.swap(acc);
  }
}

inline void rk4_step(const SparseMatrix& m, double h, std::vector<double>& p,
                     std::vector<double>& k1, std::vector<double>& k2,
                     std::vector<double>& k3, std::vector<double>& k4,
                     std::vector<double>& tmp) {
  const std::size_t n = p.size();
  m.matvec(p, k1);
  for (std::size_t i = 0; i < n; ++i) tmp[i] = p[i] + 0.5 * h * k1[i];
  m.matvec(tmp, k2);
  for (std::size_t i = 0; i < n; ++i) tmp[i] = p[i] + 0.5 * h * k2[i];
  m.matvec(tmp, k3);
  for (std::size_t i = 0; i < n; ++i) tmp[i] = p[i] + h * k3[i];
  m.matvec(tmp, k4);
  for (std::size_t i = 0; i < n; ++i)
    p[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
}

}  // namespace detail

// Integrates P' = M P for a CTMC generator M from P0, reporting P(t) at
// each checkpoint. Uniformization is exact to the series tail bound and
// keeps entries nonnegative; RK4 advances with a fixed step and is kept for
// cross-validation. Negative RK4 entries and probability-mass drift are
// flagged as warnings; distributions are clipped and renormalized only at
// checkpoint emission.
inline SolveResult solve(const SparseMatrix& m, const ProbabilityVector& p0,
                         const SolveOptions& opts) {
  opts.validate();
  if (m.dimension() != p0.values.size())
    throw std::invalid_argument("solve: generator and distribution dimensions differ");
  if (std::abs(p0.total() - 1.0) > 1e-6)
    throw std::invalid_argument("solve: initial distribution does not sum to 1");
  validate_generator(m);

  SolveResult result;
  const auto checkpoints = opts.resolved_checkpoints();
  std::vector<double> v = p0.values;

  if (opts.method == SolveMethod::Uniformization) {
    const double lambda = m.max_diagonal_magnitude();
    const SparseMatrix s =
        lambda > 0.0 ? detail::uniformized_matrix(m, lambda) : SparseMatrix{};
    double t_prev = 0.0;
    for (double t : checkpoints) {
      if (lambda > 0.0)
        detail::uniformization_advance(s, lambda, t - t_prev, opts.tol, v, result.warnings);
      t_prev = t;
      result.checkpoints.push_back({t, ProbabilityVector{p0.space, v}});
    }
    // Deduplicate repeated warnings from multi-checkpoint runs.
    std::sort(result.warnings.begin(), result.warnings.end());
    result.warnings.erase(std::unique(result.warnings.begin(), result.warnings.end()),
                          result.warnings.end());
    return result;
  }

  // RK4 path
  const std::size_t n = v.size();
  std::vector<double> k1(n), k2(n), k3(n), k4(n), tmp(n);
  bool warned_negative = false;
  bool warned_drift = false;
  double t_now = 0.0;
  for (double t : checkpoints) {
    double remaining = t - t_now;
    while (remaining > 1e-15) {
      const double h = std::min(opts.dt, remaining);
      detail::rk4_step(m, h, v, k1, k2, k3, k4, tmp);
      remaining -= h;
    }
    t_now = t;

    double mn = 0.0;
    double total = 0.0;
    for (double x : v) {
      mn = std::min(mn, x);
      total += x;
    }
    if (!warned_negative && mn < -1e-12) {
      result.warnings.push_back("rk4: negative probabilities below -1e-12");
      warned_negative = true;
    }
    if (!warned_drift && std::abs(total - 1.0) > 1e-10) {
      result.warnings.push_back("rk4: probability mass drift beyond 1e-10");
      warned_drift = true;
    }

    // Emission-only cleanup; the integration state v is left untouched.
    std::vector<double> emitted = v;
    double clipped_total = 0.0;
    for (double& x : emitted) {
      if (x < 0.0) x = 0.0;
      clipped_total += x;
    }
    if (clipped_total > 0.0)
      for (double& x : emitted) x /= clipped_total;
    result.checkpoints.push_back({t, ProbabilityVector{p0.space, std::move(emitted)}});
  }
  return result;
}

// Mean fluorescence under lower-edge bin representatives.
inline double expected_fluorescence(const ProbabilityVector& p, const FluorescenceGrid& grid) {
  if (p.space.axis != Axis::FluorescenceBin)
    throw std::invalid_argument("expected_fluorescence needs a fluorescence-bin space");
  if (p.space.n_levels != grid.n_bins())
    throw std::invalid_argument("expected_fluorescence: grid does not match space");
  const auto marginal = p.level_marginal();
  double mean = 0.0;
  for (std::size_t b = 0; b < marginal.size(); ++b) mean += grid.lower_edge(b) * marginal[b];
  return mean;
}

// Second central moment under lower-edge bin representatives.
inline double variance_fluorescence(const ProbabilityVector& p, const FluorescenceGrid& grid) {
  if (p.space.axis != Axis::FluorescenceBin)
    throw std::invalid_argument("variance_fluorescence needs a fluorescence-bin space");
  if (p.space.n_levels != grid.n_bins())
    throw std::invalid_argument("variance_fluorescence: grid does not match space");
  const auto marginal = p.level_marginal();
  const double mean = expected_fluorescence(p, grid);
  double var = 0.0;
  for (std::size_t b = 0; b < marginal.size(); ++b) {
    const double d = grid.lower_edge(b) - mean;
    var += d * d * marginal[b];
  }
  return var;
}

}  // namespace fgba
