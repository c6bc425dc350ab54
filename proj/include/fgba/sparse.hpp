#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

#include "fgba/errors.hpp"

namespace fgba {

struct Triplet {
  std::size_t row = 0;
  std::size_t col = 0;
  double value = 0.0;
};

// Sparse square matrix, assembled from coordinate triplets into CSR.
// Duplicate coordinates are summed in insertion order; exact zeros are
// dropped. Immutable after construction.
class SparseMatrix {
 public:
  SparseMatrix() = default;

  SparseMatrix(std::size_t dimension, std::vector<Triplet> triplets) : dim_(dimension) {
    for (const auto& t : triplets) {
      if (t.row >= dim_ || t.col >= dim_)
        throw std::invalid_argument("sparse entry index out of range");
    }
    std::stable_sort(triplets.begin(), triplets.end(), [](const Triplet& a, const Triplet& b) {
      return a.row != b.row ? a.row < b.row : a.col < b.col;
    });
    std::vector<std::size_t> row_counts(dim_, 0);
    for (std::size_t k = 0; k < triplets.size();) {
      std::size_t j = k;
      double v = 0.0;
      while (j < triplets.size() && triplets[j].row == triplets[k].row &&
             triplets[j].col == triplets[k].col) {
        v += triplets[j].value;
        ++j;
      }
      if (v != 0.0) {
        cols_.push_back(triplets[k].col);
        vals_.push_back(v);
        ++row_counts[triplets[k].row];
      }
      k = j;
    }
    row_ptr_.assign(dim_ + 1, 0);
    for (std::size_t r = 0; r < dim_; ++r) row_ptr_[r + 1] = row_ptr_[r] + row_counts[r];
  }

  std::size_t dimension() const { return dim_; }
  std::size_t nnz() const { return vals_.size(); }

  // y = A x
  void matvec(std::span<const double> x, std::span<double> y) const {
    if (x.size() != dim_ || y.size() != dim_)
      throw std::invalid_argument("matvec dimension mismatch");
    for (std::size_t r = 0; r < dim_; ++r) {
      double acc = 0.0;
      for (std::size_t k = row_ptr_[r]; k < row_ptr_[r + 1]; ++k) acc += vals_[k] * x[cols_[k]];
      y[r] = acc;
    }
  }

  std::vector<double> apply(std::span<const double> x) const {
    std::vector<double> y(dim_, 0.0);
    matvec(x, y);
    return y;
  }

  std::vector<double> column_sums() const {
    std::vector<double> sums(dim_, 0.0);
    for (std::size_t r = 0; r < dim_; ++r)
      for (std::size_t k = row_ptr_[r]; k < row_ptr_[r + 1]; ++k) sums[cols_[k]] += vals_[k];
    return sums;
  }

  double value_at(std::size_t row, std::size_t col) const {
    for (std::size_t k = row_ptr_.at(row); k < row_ptr_[row + 1]; ++k)
      if (cols_[k] == col) return vals_[k];
    return 0.0;
  }

  double max_diagonal_magnitude() const {
    double m = 0.0;
    for (std::size_t r = 0; r < dim_; ++r) m = std::max(m, std::abs(value_at(r, r)));
    return m;
  }

  double min_off_diagonal() const {
    double m = 0.0;
    for (std::size_t r = 0; r < dim_; ++r)
      for (std::size_t k = row_ptr_[r]; k < row_ptr_[r + 1]; ++k)
        if (cols_[k] != r) m = std::min(m, vals_[k]);
    return m;
  }

  // Row-major coordinate view, e.g. for serialization.
  std::vector<Triplet> triplets() const {
    std::vector<Triplet> out;
    out.reserve(nnz());
    for (std::size_t r = 0; r < dim_; ++r)
      for (std::size_t k = row_ptr_[r]; k < row_ptr_[r + 1]; ++k)
        out.push_back({r, cols_[k], vals_[k]});
    return out;
  }

  SparseMatrix scaled(double factor) const {
    auto ts = triplets();
    for (auto& t : ts) t.value *= factor;
    SparseMatrix out(dim_, std::move(ts));
    out.clamped_rate_ = clamped_rate_ * std::abs(factor);
    return out;
  }

  static SparseMatrix sum(const SparseMatrix& a, const SparseMatrix& b) {
    if (a.dimension() != b.dimension())
      throw std::invalid_argument("cannot add matrices of different dimension");
    auto ts = a.triplets();
    auto tb = b.triplets();
    ts.insert(ts.end(), tb.begin(), tb.end());
    SparseMatrix out(a.dimension(), std::move(ts));
    out.clamped_rate_ = a.clamped_rate_ + b.clamped_rate_;
    return out;
  }

  // Total outflow rate that was cancelled at the truncation boundary when
  // this matrix was assembled (0 when no clamping happened).
  double clamped_rate() const { return clamped_rate_; }
  void set_clamped_rate(double r) { clamped_rate_ = r; }

 private:
  std::size_t dim_ = 0;
  std::vector<std::size_t> row_ptr_{0};
  std::vector<std::size_t> cols_;
  std::vector<double> vals_;
  double clamped_rate_ = 0.0;
};

// A CTMC generator is a SparseMatrix with zero column sums and nonnegative
// off-diagonal entries.
using SparseGenerator = SparseMatrix;

// Largest |column sum|; zero for an exact generator.
inline double max_column_sum_magnitude(const SparseMatrix& m) {
  double worst = 0.0;
  for (double s : m.column_sums()) worst = std::max(worst, std::abs(s));
  return worst;
}

inline void validate_generator(const SparseMatrix& m, double col_tol = 1e-9,
                               double off_diag_tol = -1e-12) {
  if (max_column_sum_magnitude(m) > col_tol)
    throw numerical_error("matrix is not a generator: column sums exceed tolerance");
  if (m.min_off_diagonal() < off_diag_tol)
    throw numerical_error("matrix is not a generator: negative off-diagonal rate");
}

// Largest entrywise difference between two equally sized sparse matrices.
inline double max_entry_difference(const SparseMatrix& a, const SparseMatrix& b) {
  if (a.dimension() != b.dimension())
    throw std::invalid_argument("cannot compare matrices of different dimension");
  double worst = 0.0;
  for (const auto& t : a.triplets())
    worst = std::max(worst, std::abs(t.value - b.value_at(t.row, t.col)));
  for (const auto& t : b.triplets())
    worst = std::max(worst, std::abs(t.value - a.value_at(t.row, t.col)));
  return worst;
}

// Accumulates transition rates; every off-diagonal rate is paired with a
// diagonal compensation in the source column, so assembled columns sum to
// zero up to the rounding of the per-column sum.
class GeneratorBuilder {
 public:
  explicit GeneratorBuilder(std::size_t dimension) : dim_(dimension) {}

  void add_rate(std::size_t from, std::size_t to, double rate) {
    if (rate < 0.0) throw std::domain_error("transition rates must be nonnegative");
    if (rate == 0.0) return;
    triplets_.push_back({to, from, rate});
    triplets_.push_back({from, from, -rate});
  }

  void note_clamped(double rate) { clamped_ += rate; }

  SparseMatrix build() {
    SparseMatrix m(dim_, std::move(triplets_));
    m.set_clamped_rate(clamped_);
    return m;
  }

 private:
  std::size_t dim_;
  std::vector<Triplet> triplets_;
  double clamped_ = 0.0;
};

}  // namespace fgba
