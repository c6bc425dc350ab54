#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

namespace fgba {

// A fluorescence measurement grid: ordered bin widths in arbitrary units
// (a.u.) together with the cumulative edges starting at zero. Bin i covers
// [edge(i), edge(i+1)).
class FluorescenceGrid {
 public:
  FluorescenceGrid() = default;

  static FluorescenceGrid from_widths(std::vector<double> widths) {
    if (widths.empty()) throw std::invalid_argument("grid needs at least one bin");
    std::vector<double> edges(widths.size() + 1, 0.0);
    for (std::size_t i = 0; i < widths.size(); ++i) {
      if (!(widths[i] > 0.0)) throw std::domain_error("grid widths must be positive");
      edges[i + 1] = edges[i] + widths[i];
    }
    return FluorescenceGrid(std::move(widths), std::move(edges));
  }

  // Edges must start at 0 and increase strictly; widths are the differences.
  static FluorescenceGrid from_edges(std::vector<double> edges) {
    if (edges.size() < 2) throw std::invalid_argument("grid needs at least one bin");
    if (edges.front() != 0.0) throw std::invalid_argument("first grid edge must be 0");
    std::vector<double> widths(edges.size() - 1);
    for (std::size_t i = 0; i + 1 < edges.size(); ++i) {
      widths[i] = edges[i + 1] - edges[i];
      if (!(widths[i] > 0.0)) throw std::domain_error("grid edges must increase strictly");
    }
    return FluorescenceGrid(std::move(widths), std::move(edges));
  }

  std::size_t n_bins() const { return widths_.size(); }
  double width(std::size_t bin) const { return widths_.at(bin); }
  double lower_edge(std::size_t bin) const { return edges_.at(bin); }
  double upper_edge(std::size_t bin) const { return edges_.at(bin + 1); }
  double midpoint(std::size_t bin) const { return 0.5 * (edges_[bin] + edges_[bin + 1]); }
  const std::vector<double>& widths() const { return widths_; }
  const std::vector<double>& edges() const { return edges_; }
  double span() const { return edges_.back(); }

  // Bin containing `value`; values at or beyond the top edge land in the
  // top bin (the grid truncates the axis there).
  std::size_t bin_of(double value) const {
    if (!(value >= 0.0)) throw std::domain_error("fluorescence values are nonnegative");
    auto it = std::upper_bound(edges_.begin(), edges_.end(), value);
    if (it == edges_.begin()) return 0;
    const auto idx = static_cast<std::size_t>(it - edges_.begin()) - 1;
    return std::min(idx, n_bins() - 1);
  }

  bool operator==(const FluorescenceGrid& other) const = default;

 private:
  FluorescenceGrid(std::vector<double> widths, std::vector<double> edges)
      : widths_(std::move(widths)), edges_(std::move(edges)) {}

  std::vector<double> widths_;
  std::vector<double> edges_;
};

// Log-spaced measurement grid: edges 10^(k / bins_per_decade) for
// k = 0 .. decades*bins_per_decade, prepended with 0 so the first bin is
// [0, 1). Matches flow-cytometry histogram axes spanning `decades` decades.
inline FluorescenceGrid default_experiment_grid(double decades, std::size_t bins_per_decade) {
  if (!(decades > 0.0)) throw std::domain_error("decades must be positive");
  if (bins_per_decade < 1) throw std::domain_error("bins_per_decade must be >= 1");
  const auto n_log_edges =
      static_cast<std::size_t>(std::llround(decades * static_cast<double>(bins_per_decade)));
  if (n_log_edges < 1) throw std::domain_error("grid resolves to zero bins");
  std::vector<double> edges;
  edges.reserve(n_log_edges + 2);
  edges.push_back(0.0);
  for (std::size_t k = 0; k <= n_log_edges; ++k) {
    edges.push_back(std::pow(10.0, static_cast<double>(k) / static_cast<double>(bins_per_decade)));
  }
  return FluorescenceGrid::from_edges(std::move(edges));
}

}  // namespace fgba
