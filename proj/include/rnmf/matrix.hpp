#pragma once

// Dense row-major matrix and the handful of kernels the factorization code
// needs. Everything here is a pure function of its arguments.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "rnmf/errors.hpp"

namespace rnmf {

class DenseMatrix {
 public:
  DenseMatrix() = default;

  DenseMatrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {
    check_shape();
  }

  DenseMatrix(std::size_t rows, std::size_t cols, std::vector<double> data)
      : rows_(rows), cols_(cols), data_(std::move(data)) {
    check_shape();
    if (data_.size() != rows_ * cols_) {
      throw DimensionError("DenseMatrix: data length " +
                           std::to_string(data_.size()) + " != " +
                           std::to_string(rows_) + "x" + std::to_string(cols_));
    }
    for (double x : data_) {
      if (!std::isfinite(x)) throw DomainError("DenseMatrix: non-finite entry");
    }
  }

  DenseMatrix(std::initializer_list<std::initializer_list<double>> rows) {
    rows_ = rows.size();
    cols_ = rows_ ? rows.begin()->size() : 0;
    check_shape();
    data_.reserve(rows_ * cols_);
    for (const auto& r : rows) {
      if (r.size() != cols_) throw DimensionError("DenseMatrix: ragged rows");
      data_.insert(data_.end(), r.begin(), r.end());
    }
  }

  static DenseMatrix identity(std::size_t n) {
    DenseMatrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
  }

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return data_.size(); }

  double& operator()(std::size_t i, std::size_t j) noexcept {
    return data_[i * cols_ + j];
  }
  double operator()(std::size_t i, std::size_t j) const noexcept {
    return data_[i * cols_ + j];
  }

  std::span<double> data() noexcept { return data_; }
  std::span<const double> data() const noexcept { return data_; }

  std::span<double> row(std::size_t i) noexcept {
    return {data_.data() + i * cols_, cols_};
  }
  std::span<const double> row(std::size_t i) const noexcept {
    return {data_.data() + i * cols_, cols_};
  }

  std::vector<double> column(std::size_t j) const {
    std::vector<double> out(rows_);
    for (std::size_t i = 0; i < rows_; ++i) out[i] = (*this)(i, j);
    return out;
  }

  bool same_shape(const DenseMatrix& o) const noexcept {
    return rows_ == o.rows_ && cols_ == o.cols_;
  }

  friend bool operator==(const DenseMatrix&, const DenseMatrix&) = default;

 private:
  void check_shape() const {
    if (rows_ == 0 || cols_ == 0) {
      throw DimensionError("DenseMatrix: rows and cols must be >= 1");
    }
  }

  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

inline std::string shape_str(const DenseMatrix& a) {
  return std::to_string(a.rows()) + "x" + std::to_string(a.cols());
}

inline void require_same_shape(const DenseMatrix& a, const DenseMatrix& b,
                               const char* what) {
  if (!a.same_shape(b)) {
    throw DimensionError(std::string(what) + ": shape mismatch " +
                         shape_str(a) + " vs " + shape_str(b));
  }
}

// C = A B
inline DenseMatrix matmul(const DenseMatrix& a, const DenseMatrix& b) {
  if (a.cols() != b.rows()) {
    throw DimensionError("matmul: " + shape_str(a) + " * " + shape_str(b));
  }
  DenseMatrix c(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    auto crow = c.row(i);
    for (std::size_t l = 0; l < a.cols(); ++l) {
      const double ail = a(i, l);
      if (ail == 0.0) continue;
      auto brow = b.row(l);
      for (std::size_t j = 0; j < b.cols(); ++j) crow[j] += ail * brow[j];
    }
  }
  return c;
}

// C = A^T B
inline DenseMatrix matmul_tn(const DenseMatrix& a, const DenseMatrix& b) {
  if (a.rows() != b.rows()) {
    throw DimensionError("matmul_tn: " + shape_str(a) + "^T * " + shape_str(b));
  }
  DenseMatrix c(a.cols(), b.cols());
  for (std::size_t l = 0; l < a.rows(); ++l) {
    auto arow = a.row(l);
    auto brow = b.row(l);
    for (std::size_t i = 0; i < a.cols(); ++i) {
      const double ali = arow[i];
      if (ali == 0.0) continue;
      auto crow = c.row(i);
      for (std::size_t j = 0; j < b.cols(); ++j) crow[j] += ali * brow[j];
    }
  }
  return c;
}

// C = A B^T
inline DenseMatrix matmul_nt(const DenseMatrix& a, const DenseMatrix& b) {
  if (a.cols() != b.cols()) {
    throw DimensionError("matmul_nt: " + shape_str(a) + " * " + shape_str(b) +
                         "^T");
  }
  DenseMatrix c(a.rows(), b.rows());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    auto arow = a.row(i);
    for (std::size_t j = 0; j < b.rows(); ++j) {
      auto brow = b.row(j);
      double s = 0.0;
      for (std::size_t l = 0; l < a.cols(); ++l) s += arow[l] * brow[l];
      c(i, j) = s;
    }
  }
  return c;
}

inline DenseMatrix transpose(const DenseMatrix& a) {
  DenseMatrix t(a.cols(), a.rows());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) t(j, i) = a(i, j);
  return t;
}

template <typename Fn>
DenseMatrix map(const DenseMatrix& a, Fn&& fn) {
  DenseMatrix out(a.rows(), a.cols());
  auto src = a.data();
  auto dst = out.data();
  for (std::size_t i = 0; i < src.size(); ++i) dst[i] = fn(src[i]);
  return out;
}

template <typename Fn>
DenseMatrix zip(const DenseMatrix& a, const DenseMatrix& b, Fn&& fn,
                const char* what = "zip") {
  require_same_shape(a, b, what);
  DenseMatrix out(a.rows(), a.cols());
  auto pa = a.data();
  auto pb = b.data();
  auto dst = out.data();
  for (std::size_t i = 0; i < pa.size(); ++i) dst[i] = fn(pa[i], pb[i]);
  return out;
}

inline DenseMatrix operator+(const DenseMatrix& a, const DenseMatrix& b) {
  return zip(a, b, [](double x, double y) { return x + y; }, "add");
}
inline DenseMatrix operator-(const DenseMatrix& a, const DenseMatrix& b) {
  return zip(a, b, [](double x, double y) { return x - y; }, "subtract");
}
inline DenseMatrix operator*(double s, const DenseMatrix& a) {
  return map(a, [s](double x) { return s * x; });
}
inline DenseMatrix hadamard(const DenseMatrix& a, const DenseMatrix& b) {
  return zip(a, b, [](double x, double y) { return x * y; }, "hadamard");
}
inline DenseMatrix abs(const DenseMatrix& a) {
  return map(a, [](double x) { return std::fabs(x); });
}

inline double frobenius_sq(const DenseMatrix& a) {
  double s = 0.0;
  for (double x : a.data()) s += x * x;
  return s;
}

inline double sum(const DenseMatrix& a) {
  double s = 0.0;
  for (double x : a.data()) s += x;
  return s;
}

inline double l1_norm(const DenseMatrix& a) {
  double s = 0.0;
  for (double x : a.data()) s += std::fabs(x);
  return s;
}

inline double mean(const DenseMatrix& a) {
  return sum(a) / static_cast<double>(a.size());
}

inline double max_entry(const DenseMatrix& a) {
  return *std::max_element(a.data().begin(), a.data().end());
}

inline double min_entry(const DenseMatrix& a) {
  return *std::min_element(a.data().begin(), a.data().end());
}

inline bool all_nonnegative(const DenseMatrix& a) {
  return std::all_of(a.data().begin(), a.data().end(),
                     [](double x) { return x >= 0.0; });
}

inline bool all_finite(const DenseMatrix& a) {
  return std::all_of(a.data().begin(), a.data().end(),
                     [](double x) { return std::isfinite(x); });
}

// Largest |a_ij - b_ij| / max(1, |b_ij|).
inline double max_rel_diff(const DenseMatrix& a, const DenseMatrix& b) {
  require_same_shape(a, b, "max_rel_diff");
  double worst = 0.0;
  auto pa = a.data();
  auto pb = b.data();
  for (std::size_t i = 0; i < pa.size(); ++i) {
    const double d = std::fabs(pa[i] - pb[i]) / std::max(1.0, std::fabs(pb[i]));
    worst = std::max(worst, d);
  }
  return worst;
}

// Stack A on top of B.
inline DenseMatrix vstack(const DenseMatrix& a, const DenseMatrix& b) {
  if (a.cols() != b.cols()) {
    throw DimensionError("vstack: " + shape_str(a) + " over " + shape_str(b));
  }
  DenseMatrix out(a.rows() + b.rows(), a.cols());
  std::copy(a.data().begin(), a.data().end(), out.data().begin());
  std::copy(b.data().begin(), b.data().end(),
            out.data().begin() + static_cast<std::ptrdiff_t>(a.size()));
  return out;
}

// Rows [first, first + count).
inline DenseMatrix row_block(const DenseMatrix& a, std::size_t first,
                             std::size_t count) {
  if (first + count > a.rows()) throw DimensionError("row_block: out of range");
  DenseMatrix out(count, a.cols());
  for (std::size_t i = 0; i < count; ++i) {
    auto src = a.row(first + i);
    std::copy(src.begin(), src.end(), out.row(i).begin());
  }
  return out;
}

}  // namespace rnmf
