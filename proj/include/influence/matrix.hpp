#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <numeric>
#include <span>
#include <vector>

namespace influence {

// Dense row-major matrix of doubles. Small (S x S, C x C, J x J) in practice.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  static Matrix identity(std::size_t n) {
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
  }

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  bool empty() const { return data_.empty(); }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

  std::span<const double> values() const { return data_; }
  std::span<double> values() { return data_; }

  bool operator==(const Matrix&) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

inline double sum(std::span<const double> v) { return std::accumulate(v.begin(), v.end(), 0.0); }

// Scales v to unit sum and returns the previous sum. Leaves v untouched when
// the sum is not positive.
inline double normalize(std::span<double> v) {
  const double z = sum(v);
  if (z > 0.0)
    for (double& x : v) x /= z;
  return z;
}

inline void normalize_rows(Matrix& m) {
  for (std::size_t r = 0; r < m.rows(); ++r) normalize(m.row(r));
}

inline double max_abs_diff(const Matrix& a, const Matrix& b) {
  double d = 0.0;
  auto av = a.values();
  auto bv = b.values();
  for (std::size_t i = 0; i < av.size(); ++i) d = std::max(d, std::abs(av[i] - bv[i]));
  return d;
}

}  // namespace influence

namespace influence {

// Dense N-d array of doubles, row-major. slice() returns the innermost
// dimension for a full prefix of indices.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(std::vector<std::size_t> shape, double fill = 0.0) : shape_(std::move(shape)) {
    std::size_t n = 1;
    for (std::size_t d : shape_) n *= d;
    data_.assign(n, fill);
  }

  const std::vector<std::size_t>& shape() const { return shape_; }
  std::size_t dim(std::size_t i) const { return shape_[i]; }

  template <typename... I>
  double& operator()(I... idx) {
    return data_[offset({static_cast<std::size_t>(idx)...})];
  }
  template <typename... I>
  double operator()(I... idx) const {
    return data_[offset({static_cast<std::size_t>(idx)...})];
  }

  template <typename... I>
  std::span<double> slice(I... idx) {
    return {data_.data() + prefix_offset({static_cast<std::size_t>(idx)...}), shape_.back()};
  }
  template <typename... I>
  std::span<const double> slice(I... idx) const {
    return {data_.data() + prefix_offset({static_cast<std::size_t>(idx)...}), shape_.back()};
  }

  std::span<const double> values() const { return data_; }
  std::span<double> values() { return data_; }

 private:
  std::size_t offset(std::initializer_list<std::size_t> idx) const {
    std::size_t off = 0, d = 0;
    for (std::size_t i : idx) off = off * shape_[d++] + i;
    return off;
  }
  std::size_t prefix_offset(std::initializer_list<std::size_t> idx) const {
    std::size_t off = 0, d = 0;
    for (std::size_t i : idx) off = off * shape_[d++] + i;
    for (; d < shape_.size(); ++d) off *= shape_[d];
    return off;
  }

  std::vector<std::size_t> shape_;
  std::vector<double> data_;
};

}  // namespace influence
