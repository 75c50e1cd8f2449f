#pragma once

// Dense and sparse non-negative matrix storage plus the handful of algebraic
// primitives the factorization and evaluation code is built on.
//
// All reductions run serially in a fixed index order so that results are
// bit-reproducible across runs and platforms.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <tuple>
#include <vector>

#include "tsnmf/errors.hpp"

namespace tsnmf {

/// Row-major dense matrix of doubles.
class DenseMatrix {
 public:
  DenseMatrix() = default;

  DenseMatrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  DenseMatrix(std::size_t rows, std::size_t cols, std::vector<double> data)
      : rows_(rows), cols_(cols), data_(std::move(data)) {
    if (data_.size() != rows_ * cols_) {
      throw DimensionError("data length " + std::to_string(data_.size()) +
                           " does not match shape " + shape_string(rows_, cols_));
    }
  }

  /// Builds from nested row lists; every row must have the same length.
  DenseMatrix(std::initializer_list<std::initializer_list<double>> rows) {
    rows_ = rows.size();
    cols_ = rows_ == 0 ? 0 : rows.begin()->size();
    data_.reserve(rows_ * cols_);
    for (const auto& r : rows) {
      if (r.size() != cols_) throw DimensionError("ragged row list");
      data_.insert(data_.end(), r.begin(), r.end());
    }
  }

  static DenseMatrix zeros(std::size_t rows, std::size_t cols) { return {rows, cols, 0.0}; }
  static DenseMatrix ones(std::size_t rows, std::size_t cols) { return {rows, cols, 1.0}; }
  static DenseMatrix identity(std::size_t n) {
    DenseMatrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
  }

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }
  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }

  std::span<const double> row(std::size_t r) const {
    return {data_.data() + r * cols_, cols_};
  }
  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }

  std::span<const double> values() const noexcept { return data_; }
  std::span<double> values() noexcept { return data_; }

  std::vector<double> column(std::size_t c) const {
    std::vector<double> out(rows_);
    for (std::size_t r = 0; r < rows_; ++r) out[r] = (*this)(r, c);
    return out;
  }

  bool same_shape(const DenseMatrix& o) const noexcept {
    return rows_ == o.rows_ && cols_ == o.cols_;
  }

  std::string shape() const { return shape_string(rows_, cols_); }

  static std::string shape_string(std::size_t r, std::size_t c) {
    return std::to_string(r) + "x" + std::to_string(c);
  }

  friend bool operator==(const DenseMatrix&, const DenseMatrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

struct SparseEntry {
  std::size_t row;
  std::size_t col;
  double value;

  friend bool operator==(const SparseEntry&, const SparseEntry&) = default;
};

/// Coordinate-list matrix; only used for file I/O of the term-document matrix.
/// Entries are kept sorted by (row, col).
class SparseMatrix {
 public:
  SparseMatrix() = default;

  /// Validates indices, positivity and uniqueness; sorts the entries.
  SparseMatrix(std::size_t rows, std::size_t cols, std::vector<SparseEntry> entries)
      : rows_(rows), cols_(cols), entries_(std::move(entries)) {
    std::sort(entries_.begin(), entries_.end(), [](const auto& a, const auto& b) {
      return std::tie(a.row, a.col) < std::tie(b.row, b.col);
    });
    for (std::size_t k = 0; k < entries_.size(); ++k) {
      const auto& e = entries_[k];
      if (e.row >= rows_ || e.col >= cols_) {
        throw DimensionError("sparse entry (" + std::to_string(e.row) + ", " +
                             std::to_string(e.col) + ") out of range for " +
                             DenseMatrix::shape_string(rows_, cols_));
      }
      if (!(e.value > 0.0) || !std::isfinite(e.value)) {
        throw std::invalid_argument("sparse entry values must be finite and > 0");
      }
      if (k > 0 && entries_[k - 1].row == e.row && entries_[k - 1].col == e.col) {
        throw std::invalid_argument("duplicate sparse entry (" + std::to_string(e.row) + ", " +
                                    std::to_string(e.col) + ")");
      }
    }
  }

  static SparseMatrix from_dense(const DenseMatrix& m) {
    std::vector<SparseEntry> entries;
    for (std::size_t r = 0; r < m.rows(); ++r) {
      for (std::size_t c = 0; c < m.cols(); ++c) {
        const double v = m(r, c);
        if (v < 0.0) throw std::invalid_argument("negative entry in non-negative matrix");
        if (v > 0.0) entries.push_back({r, c, v});
      }
    }
    return {m.rows(), m.cols(), std::move(entries)};
  }

  DenseMatrix to_dense() const {
    DenseMatrix m(rows_, cols_);
    for (const auto& e : entries_) m(e.row, e.col) = e.value;
    return m;
  }

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t nnz() const noexcept { return entries_.size(); }
  const std::vector<SparseEntry>& entries() const noexcept { return entries_; }

  friend bool operator==(const SparseMatrix&, const SparseMatrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<SparseEntry> entries_;
};

namespace detail {

inline void require_same_shape(const DenseMatrix& a, const DenseMatrix& b, const char* op) {
  if (!a.same_shape(b)) {
    throw DimensionError(std::string(op) + ": shape mismatch " + a.shape() + " vs " + b.shape());
  }
}

}  // namespace detail

/// Entrywise product.
inline DenseMatrix hadamard(const DenseMatrix& a, const DenseMatrix& b) {
  detail::require_same_shape(a, b, "hadamard");
  DenseMatrix out(a.rows(), a.cols());
  auto x = a.values();
  auto y = b.values();
  auto z = out.values();
  for (std::size_t k = 0; k < z.size(); ++k) z[k] = x[k] * y[k];
  return out;
}

inline DenseMatrix subtract(const DenseMatrix& a, const DenseMatrix& b) {
  detail::require_same_shape(a, b, "subtract");
  DenseMatrix out(a.rows(), a.cols());
  auto x = a.values();
  auto y = b.values();
  auto z = out.values();
  for (std::size_t k = 0; k < z.size(); ++k) z[k] = x[k] - y[k];
  return out;
}

inline DenseMatrix transpose(const DenseMatrix& a) {
  DenseMatrix out(a.cols(), a.rows());
  for (std::size_t r = 0; r < a.rows(); ++r)
    for (std::size_t c = 0; c < a.cols(); ++c) out(c, r) = a(r, c);
  return out;
}

/// A * B. Each output entry accumulates over the inner index in ascending order.
inline DenseMatrix matmul(const DenseMatrix& a, const DenseMatrix& b) {
  if (a.cols() != b.rows()) {
    throw DimensionError("matmul: inner dimension mismatch " + a.shape() + " * " + b.shape());
  }
  DenseMatrix out(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    auto dst = out.row(i);
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const double aik = a(i, k);
      if (aik == 0.0) continue;
      auto src = b.row(k);
      for (std::size_t j = 0; j < dst.size(); ++j) dst[j] += aik * src[j];
    }
  }
  return out;
}

/// Aᵀ * B without materializing the transpose.
inline DenseMatrix matmul_tn(const DenseMatrix& a, const DenseMatrix& b) {
  if (a.rows() != b.rows()) {
    throw DimensionError("matmul_tn: row mismatch " + a.shape() + "^T * " + b.shape());
  }
  DenseMatrix out(a.cols(), b.cols());
  for (std::size_t k = 0; k < a.rows(); ++k) {
    auto src = b.row(k);
    for (std::size_t i = 0; i < a.cols(); ++i) {
      const double aki = a(k, i);
      if (aki == 0.0) continue;
      auto dst = out.row(i);
      for (std::size_t j = 0; j < dst.size(); ++j) dst[j] += aki * src[j];
    }
  }
  return out;
}

/// A * Bᵀ without materializing the transpose.
inline DenseMatrix matmul_nt(const DenseMatrix& a, const DenseMatrix& b) {
  if (a.cols() != b.cols()) {
    throw DimensionError("matmul_nt: column mismatch " + a.shape() + " * " + b.shape() + "^T");
  }
  DenseMatrix out(a.rows(), b.rows());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    auto x = a.row(i);
    for (std::size_t j = 0; j < b.rows(); ++j) {
      auto y = b.row(j);
      double s = 0.0;
      for (std::size_t k = 0; k < x.size(); ++k) s += x[k] * y[k];
      out(i, j) = s;
    }
  }
  return out;
}

/// Sum of squared entries, i.e. trace(AᵀA).
inline double frobenius_sq(const DenseMatrix& a) {
  double s = 0.0;
  for (double v : a.values()) s += v * v;
  return s;
}

/// Scales each nonzero row to unit Euclidean norm; zero rows pass through.
inline DenseMatrix l2_normalize_rows(const DenseMatrix& a) {
  DenseMatrix out = a;
  for (std::size_t r = 0; r < out.rows(); ++r) {
    auto row = out.row(r);
    double ss = 0.0;
    for (double v : row) ss += v * v;
    if (ss == 0.0) continue;
    const double norm = std::sqrt(ss);
    for (double& v : row) v /= norm;
  }
  return out;
}

inline bool is_nonnegative(const DenseMatrix& a) {
  return std::all_of(a.values().begin(), a.values().end(), [](double v) { return v >= 0.0; });
}

inline bool all_finite(const DenseMatrix& a) {
  return std::all_of(a.values().begin(), a.values().end(),
                     [](double v) { return std::isfinite(v); });
}

inline double max_entry(const DenseMatrix& a) {
  if (a.empty()) return 0.0;
  return *std::max_element(a.values().begin(), a.values().end());
}

}  // namespace tsnmf
