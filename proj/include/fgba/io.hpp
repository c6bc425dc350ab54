#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "fgba/error_bound.hpp"
#include "fgba/grid.hpp"
#include "fgba/phase_model.hpp"
#include "fgba/sparse.hpp"
#include "fgba/state_space.hpp"

namespace fgba {

// 12 significant digits; all file output goes through this so runs with
// identical inputs are byte-identical.
inline std::string format_value(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.12g", v);
  return buf;
}

inline void write_text_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for writing: " + path.string());
  out << content;
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

// Histogram CSV: one row per bin with the per-phase masses and the total.
inline std::string histogram_csv(const ProbabilityVector& p, const FluorescenceGrid& grid) {
  if (p.space.n_phases != kNumPhases)
    throw std::invalid_argument("histogram CSV expects a five-phase distribution");
  if (p.space.n_levels != grid.n_bins())
    throw std::invalid_argument("histogram CSV: grid does not match distribution");
  std::ostringstream out;
  out << "bin_lower_au,bin_upper_au,p_MF,p_MH,p_UN,p_UO,p_O,p_total\n";
  for (std::size_t b = 0; b < grid.n_bins(); ++b) {
    out << format_value(grid.lower_edge(b)) << ',' << format_value(grid.upper_edge(b));
    double total = 0.0;
    for (std::size_t ph = 0; ph < kNumPhases; ++ph) {
      const double v = p.values[p.space.index(b, ph)];
      total += v;
      out << ',' << format_value(v);
    }
    out << ',' << format_value(total) << '\n';
  }
  return out.str();
}

inline void write_histogram_csv(const std::filesystem::path& path, const ProbabilityVector& p,
                                const FluorescenceGrid& grid) {
  write_text_file(path, histogram_csv(p, grid));
}

// Plain-text triplet form: header "dim nnz", then one "row col value" line
// per stored entry in row-major order. Values keep full precision.
inline std::string triplet_text(const SparseMatrix& m) {
  std::ostringstream out;
  out << m.dimension() << ' ' << m.nnz() << '\n';
  char buf[64];
  for (const auto& t : m.triplets()) {
    std::snprintf(buf, sizeof(buf), "%.17g", t.value);
    out << t.row << ' ' << t.col << ' ' << buf << '\n';
  }
  return out.str();
}

inline void write_triplet_text(const std::filesystem::path& path, const SparseMatrix& m) {
  write_text_file(path, triplet_text(m));
}

inline SparseMatrix read_triplet_text(std::istream& in) {
  std::size_t dim = 0;
  std::size_t nnz = 0;
  if (!(in >> dim >> nnz)) throw std::runtime_error("triplet text: bad header");
  std::vector<Triplet> ts;
  ts.reserve(nnz);
  for (std::size_t k = 0; k < nnz; ++k) {
    Triplet t;
    if (!(in >> t.row >> t.col >> t.value))
      throw std::runtime_error("triplet text: truncated entry list");
    ts.push_back(t);
  }
  return SparseMatrix(dim, std::move(ts));
}

// Error-trace CSV emitted by the error harness.
inline std::string error_trace_csv(const std::vector<ErrorSample>& samples,
                                   const std::vector<double>& e1_bounds) {
  if (samples.size() != e1_bounds.size())
    throw std::invalid_argument("error trace: bound column length mismatch");
  std::ostringstream out;
  out << "t,e1,e2,e,e1_bound\n";
  for (std::size_t i = 0; i < samples.size(); ++i) {
    out << format_value(samples[i].t) << ',' << format_value(samples[i].e1) << ','
        << format_value(samples[i].e2) << ',' << format_value(samples[i].e) << ','
        << format_value(e1_bounds[i]) << '\n';
  }
  return out.str();
}

// Run manifest: "key = value" lines in insertion order, no timestamps.
class Manifest {
 public:
  void add(const std::string& key, const std::string& value) {
    lines_.push_back(key + " = " + value);
  }
  void add(const std::string& key, double value) { add(key, format_value(value)); }
  void add(const std::string& key, std::size_t value) { add(key, std::to_string(value)); }

  std::string text() const {
    std::string out;
    for (const auto& l : lines_) {
      out += l;
      out += '\n';
    }
    return out;
  }

  void write(const std::filesystem::path& path) const { write_text_file(path, text()); }

 private:
  std::vector<std::string> lines_;
};

}  // namespace fgba
