#pragma once

#include <Eigen/Dense>
#include <array>
#include <cmath>
#include <cstddef>
#include <iostream>
#include <stdexcept>
#include <string>

#include "fgba/errors.hpp"

namespace fgba {

// The five phases of the agn43 epigenetic switch, in state-vector order.
// M_F fully methylated, M_H hemimethylated, U_N unmethylated naked,
// U_O unmethylated with OxyR bound, O locked Off.
enum class Phase { MF = 0, MH = 1, UN = 2, UO = 3, O = 4 };

enum class ExpressionState { On, Partial, Off };

inline constexpr std::size_t kNumPhases = 5;

// One generation (cell division interval) in wall-clock minutes; the
// library's time unit is one generation throughout.
inline constexpr double kGenerationMinutes = 85.0;

inline double hours_to_generations(double hours) {
  return hours * 60.0 / kGenerationMinutes;
}

inline ExpressionState expression_state(Phase p) {
  switch (p) {
    case Phase::MF:
    case Phase::MH:
      return ExpressionState::On;
    case Phase::UN:
    case Phase::UO:
      return ExpressionState::Partial;
    case Phase::O:
      return ExpressionState::Off;
  }
  throw std::invalid_argument("unknown phase");
}

inline std::string phase_name(Phase p) {
  switch (p) {
    case Phase::MF: return "MF";
    case Phase::MH: return "MH";
    case Phase::UN: return "UN";
    case Phase::UO: return "UO";
    case Phase::O:  return "O";
  }
  throw std::invalid_argument("unknown phase");
}

inline Phase parse_phase(const std::string& name) {
  for (auto p : {Phase::MF, Phase::MH, Phase::UN, Phase::UO, Phase::O})
    if (phase_name(p) == name) return p;
  throw std::invalid_argument("unknown phase name: " + name);
}

// All kinetic constants of the gene-protein system, per generation.
struct RateSet {
  // Phase-variation rates [1/generation].
  double k_M = 0.0;
  double k_H = 0.0;
  double k_O = 0.0;
  double k_neg_O = 0.0;
  double k_R = 0.0;
  double k_neg_R = 0.0;
  // Protein/fluorescence degradation rate [1/generation].
  double gamma = 0.0;
  // Fluorescence increase rates per expression state [a.u./generation].
  double beta_f_on = 0.0;
  double beta_f_partial = 0.0;
  double beta_f_off = 0.0;
  // Cell replication rate [1/generation].
  double replication_rate = 1.0;

  std::array<double, kNumPhases> beta_f_by_phase() const {
    return {beta_f_on, beta_f_on, beta_f_partial, beta_f_partial, beta_f_off};
  }

  void validate() const {
    for (double r : {k_M, k_H, k_O, k_neg_O, k_R, k_neg_R, gamma, beta_f_on,
                     beta_f_partial, beta_f_off, replication_rate}) {
      if (!(r >= 0.0)) throw std::domain_error("all rates must be nonnegative");
    }
  }
};

// Derives the full phase-variation rate set from the measured constants:
// k_O = k_O_multiplier * k_H (rare On-Off switching), k_{-O} = k_O/ratio_O,
// k_R = 0.118 k_O (steady-state condition), k_{-R} = k_R/ratio_R.
// gamma and the beta_f fields are left at zero for the caller to fill.
inline RateSet derive_rate_set(double k_M, double k_H, double ratio_O, double ratio_R,
                               double k_O_multiplier) {
  for (double v : {k_M, k_H, ratio_O, ratio_R, k_O_multiplier}) {
    if (!(v > 0.0)) throw std::domain_error("derive_rate_set needs positive inputs");
  }
  RateSet r;
  r.k_M = k_M;
  r.k_H = k_H;
  r.k_O = k_O_multiplier * k_H;
  r.k_neg_O = r.k_O / ratio_O;
  r.k_R = 0.118 * r.k_O;
  r.k_neg_R = r.k_R / ratio_R;
  return r;
}

// Degradation rate from a protein half-life in hours, in 1/generation.
inline double gamma_from_half_life(double tau_hours, double generation_minutes) {
  if (!(tau_hours > 0.0) || !(generation_minutes > 0.0))
    throw std::domain_error("gamma_from_half_life needs positive inputs");
  const double tau_generations = tau_hours * 60.0 / generation_minutes;
  return std::log(2.0) / tau_generations;
}

// beta_f = gamma * x_{f,inf}: the fluorescence increase rate that balances
// degradation at the observed steady-state intensity.
inline double beta_f_from_steady_state(double gamma, double x_f_inf) {
  if (!(gamma > 0.0)) throw std::domain_error("gamma must be positive");
  if (!(x_f_inf >= 0.0)) throw std::domain_error("steady-state intensity must be nonnegative");
  return gamma * x_f_inf;
}

// Published agn43 constants: phase rates from the measured k_M, k_H and
// ratios, gamma for a 26 h GFP half-life (0.0378/generation as reported),
// and the steady-state fluorescence rates for On/Partial/Off.
inline RateSet default_rates() {
  RateSet r = derive_rate_set(4.3, 0.4, 3.7, 15.8, 1000.0);
  r.gamma = 0.0378;
  r.beta_f_on = 238.0;
  r.beta_f_partial = 3.0;
  r.beta_f_off = 0.37;
  r.replication_rate = 1.0;
  return r;
}

// Phase-variation generator K (5x5, zero column sums):
//   MF <- MH at k_M, MH <- UN at k_H, UN <-> UO at k_O / k_{-O},
//   UO <-> O at k_R / k_{-R}. MF only leaves through replication.
inline Eigen::MatrixXd phase_generator(const RateSet& rates) {
  rates.validate();
  Eigen::MatrixXd k = Eigen::MatrixXd::Zero(5, 5);
  k(0, 1) = rates.k_M;
  k(1, 1) = -rates.k_M;
  k(1, 2) = rates.k_H;
  k(2, 2) = -rates.k_H - rates.k_O;
  k(2, 3) = rates.k_neg_O;
  k(3, 2) = rates.k_O;
  k(3, 3) = -rates.k_neg_O - rates.k_R;
  k(3, 4) = rates.k_neg_R;
  k(4, 3) = rates.k_R;
  k(4, 4) = -rates.k_neg_R;
  return k;
}

// Closed-form solution of x' = beta_f - gamma x. gamma == 0 degenerates to
// linear growth.
inline double deterministic_trajectory(double beta_f, double gamma, double x0, double t) {
  if (gamma < 0.0) throw std::domain_error("gamma must be nonnegative");
  if (gamma == 0.0) return x0 + beta_f * t;
  const double x_inf = beta_f / gamma;
  return x_inf + (x0 - x_inf) * std::exp(-gamma * t);
}

// Phase map applied at cell division: M_F -> M_H; M_H splits evenly between
// M_H and U_N; the remaining phases keep their phase. Column-stochastic.
// n_phases == 1 gives the trivial map for single-phase reductions.
inline Eigen::MatrixXd replication_phase_map(std::size_t n_phases = kNumPhases) {
  if (n_phases == 1) return Eigen::MatrixXd::Identity(1, 1);
  if (n_phases != kNumPhases)
    throw std::invalid_argument("replication phase map is defined for 1 or 5 phases");
  Eigen::MatrixXd d = Eigen::MatrixXd::Zero(5, 5);
  d(1, 0) = 1.0;
  d(1, 1) = 0.5;
  d(2, 1) = 0.5;
  d(2, 2) = 1.0;
  d(3, 3) = 1.0;
  d(4, 4) = 1.0;
  return d;
}

// Stationary phase distribution of K + rate*(R - I) where R is the
// replication phase map: the normalized null vector. An all-zero combined
// generator has no preferred state; by convention the uniform distribution
// is returned with a warning. A null space of dimension > 1 is rejected.
inline Eigen::VectorXd phase_steady_state(const Eigen::MatrixXd& k,
                                          const Eigen::MatrixXd& replication_map,
                                          double replication_rate) {
  const auto n = k.rows();
  if (k.cols() != n || replication_map.rows() != n || replication_map.cols() != n)
    throw std::invalid_argument("phase_steady_state needs square matrices of equal size");
  if (!(replication_rate >= 0.0)) throw std::domain_error("replication rate must be nonnegative");
  for (Eigen::Index j = 0; j < n; ++j) {
    if (std::abs(k.col(j).sum()) > 1e-9)
      throw std::invalid_argument("K must have zero column sums");
    if (std::abs(replication_map.col(j).sum() - 1.0) > 1e-9)
      throw std::invalid_argument("replication map must be column-stochastic");
  }

  const Eigen::MatrixXd m =
      k + replication_rate * (replication_map - Eigen::MatrixXd::Identity(n, n));
  if (m.cwiseAbs().maxCoeff() == 0.0) {
    std::cerr << "fgba: warning: all-zero phase generator, returning uniform distribution\n";
    return Eigen::VectorXd::Constant(n, 1.0 / static_cast<double>(n));
  }

  Eigen::FullPivLU<Eigen::MatrixXd> lu(m);
  lu.setThreshold(1e-10);
  if (lu.dimensionOfKernel() > 1)
    throw numerical_error("degenerate phase model: stationary distribution is not unique");
  if (lu.dimensionOfKernel() == 0)
    throw numerical_error("phase model has no numerical null vector");
  Eigen::VectorXd v = lu.kernel().col(0);
  const double s = v.sum();
  if (std::abs(s) < 1e-12 * v.cwiseAbs().maxCoeff())
    throw numerical_error("degenerate phase model: null vector has vanishing mass");
  v /= s;
  if (v.minCoeff() < -1e-9)
    throw numerical_error("phase model stationary vector has negative entries");
  return v;
}

}  // namespace fgba
