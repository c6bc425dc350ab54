#pragma once

// Test-side oracles, kept independent of the library code paths they check:
// dense operator algebra, matrix exponentials, analytic distributions and
// randomized model samplers.

#include <Eigen/Dense>
#include <cmath>
#include <cstddef>
#include <unsupported/Eigen/MatrixFunctions>
#include <utility>
#include <vector>

#include "fgba/aggregation.hpp"
#include "fgba/grid.hpp"
#include "fgba/phase_model.hpp"
#include "fgba/rng.hpp"
#include "fgba/sparse.hpp"

namespace testutil {

inline Eigen::MatrixXd dense(const fgba::SparseMatrix& m) {
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(m.dimension()),
                                              static_cast<Eigen::Index>(m.dimension()));
  for (const auto& t : m.triplets())
    out(static_cast<Eigen::Index>(t.row), static_cast<Eigen::Index>(t.col)) = t.value;
  return out;
}

// Dense aggregation operator E (ones over each group) and disaggregation
// operator F (1/m_g within each group), block-expanded by per_level_block.
inline std::pair<Eigen::MatrixXd, Eigen::MatrixXd> dense_operators(
    const fgba::AggregationPlan& plan) {
  const auto block = static_cast<Eigen::Index>(plan.per_level_block);
  const auto groups = static_cast<Eigen::Index>(plan.n_groups());
  const auto levels = static_cast<Eigen::Index>(plan.source_levels());
  Eigen::MatrixXd e = Eigen::MatrixXd::Zero(groups * block, levels * block);
  Eigen::MatrixXd f = Eigen::MatrixXd::Zero(levels * block, groups * block);
  Eigen::Index level = 0;
  for (Eigen::Index g = 0; g < groups; ++g) {
    const auto m = static_cast<Eigen::Index>(plan.group_sizes[static_cast<std::size_t>(g)]);
    for (Eigen::Index l = level; l < level + m; ++l) {
      for (Eigen::Index b = 0; b < block; ++b) {
        e(g * block + b, l * block + b) = 1.0;
        f(l * block + b, g * block + b) = 1.0 / static_cast<double>(m);
      }
    }
    level += m;
  }
  return {e, f};
}

inline Eigen::VectorXd expm_apply(const Eigen::MatrixXd& m, double t,
                                  const Eigen::VectorXd& v) {
  return (m * t).exp() * v;
}

inline double poisson_pmf(std::size_t k, double lambda) {
  const double kd = static_cast<double>(k);
  return std::exp(kd * std::log(lambda) - lambda - std::lgamma(kd + 1.0));
}

// Stationary distribution via a dense eigendecomposition: the eigenvector
// of the smallest-magnitude eigenvalue, normalized to unit mass.
inline Eigen::VectorXd eigen_stationary(const Eigen::MatrixXd& m) {
  Eigen::EigenSolver<Eigen::MatrixXd> es(m);
  Eigen::Index best = 0;
  double best_mag = std::abs(es.eigenvalues()(0));
  for (Eigen::Index i = 1; i < es.eigenvalues().size(); ++i) {
    const double mag = std::abs(es.eigenvalues()(i));
    if (mag < best_mag) {
      best_mag = mag;
      best = i;
    }
  }
  Eigen::VectorXd v = es.eigenvectors().col(best).real();
  return v / v.sum();
}

// Paper-scale random rate sets for property suites; magnitudes are kept in
// the range the model actually uses so 1e-12 column-sum checks are
// meaningful rather than ulp-dominated.
inline fgba::RateSet sample_rate_set(fgba::Xoshiro256StarStar& rng) {
  auto in = [&](double lo, double hi) { return lo + (hi - lo) * rng.uniform01(); };
  fgba::RateSet r = fgba::derive_rate_set(in(0.1, 8.0), in(0.01, 1.0), in(1.0, 8.0),
                                          in(0.05, 20.0), in(1.0, 500.0));
  r.gamma = in(0.0, 1.0);
  r.beta_f_on = in(0.0, 240.0);
  r.beta_f_partial = in(0.0, 10.0);
  r.beta_f_off = in(0.0, 1.0);
  r.replication_rate = in(0.0, 2.0);
  return r;
}

inline fgba::FluorescenceGrid sample_grid(fgba::Xoshiro256StarStar& rng, std::size_t max_bins = 24) {
  const std::size_t bins = 1 + static_cast<std::size_t>(rng.next() % max_bins);
  std::vector<double> widths(bins);
  for (auto& w : widths) w = 0.5 + 40.0 * rng.uniform01();
  return fgba::FluorescenceGrid::from_widths(std::move(widths));
}

}  // namespace testutil
