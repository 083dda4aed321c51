// Copyright 2026 The smoothcomp Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <initializer_list>
#include <numeric>
#include <span>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "smoothcomp/errors.hpp"

namespace smoothcomp {

using Shape = std::vector<std::size_t>;

inline std::string shape_to_string(const Shape& shape) {
  std::ostringstream os;
  os << '(';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << 'x';
    os << shape[i];
  }
  os << ')';
  return os.str();
}

inline std::size_t shape_product(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

/// Dense row-major tensor of doubles.
///
/// A default-constructed tensor is empty (no shape, no data) and stands for
/// "absent", e.g. a layer without bias. Every non-empty tensor has strictly
/// positive dimensions and `size() == product(shape())`.
class Tensor {
 public:
  Tensor() = default;

  explicit Tensor(Shape shape, double fill = 0.0) : shape_(std::move(shape)) {
    check_shape(shape_);
    data_.assign(shape_product(shape_), fill);
  }

  Tensor(Shape shape, std::vector<double> data) : shape_(std::move(shape)), data_(std::move(data)) {
    check_shape(shape_);
    if (shape_product(shape_) != data_.size()) {
      throw DimensionError("tensor data length " + std::to_string(data_.size()) +
                           " does not match shape " + shape_to_string(shape_));
    }
  }

  /// Row-major matrix literal.
  static Tensor matrix(std::initializer_list<std::initializer_list<double>> rows) {
    const std::size_t r = rows.size();
    const std::size_t c = r ? rows.begin()->size() : 0;
    std::vector<double> data;
    data.reserve(r * c);
    for (const auto& row : rows) {
      if (row.size() != c) throw DimensionError("ragged matrix literal");
      data.insert(data.end(), row.begin(), row.end());
    }
    return Tensor({r, c}, std::move(data));
  }

  static Tensor vector(std::initializer_list<double> values) {
    return Tensor({values.size()}, std::vector<double>(values));
  }

  static Tensor identity(std::size_t n) {
    Tensor t({n, n});
    for (std::size_t i = 0; i < n; ++i) t(i, i) = 1.0;
    return t;
  }

  bool empty() const noexcept { return data_.empty(); }
  const Shape& shape() const noexcept { return shape_; }
  std::size_t rank() const noexcept { return shape_.size(); }
  std::size_t size() const noexcept { return data_.size(); }
  std::size_t dim(std::size_t axis) const {
    if (axis >= shape_.size()) throw DimensionError("axis out of range for shape " + shape_to_string(shape_));
    return shape_[axis];
  }
  std::size_t rows() const { return dim(0); }
  std::size_t cols() const {
    require_rank(2, "cols");
    return shape_[1];
  }

  std::span<double> data() noexcept { return data_; }
  std::span<const double> data() const noexcept { return data_; }
  std::vector<double>& storage() noexcept { return data_; }
  const std::vector<double>& storage() const noexcept { return data_; }

  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }

  double& operator()(std::size_t i, std::size_t j) { return data_[i * shape_[1] + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data_[i * shape_[1] + j]; }

  /// Row `i` of a matrix (or the leading-axis slice of a higher-rank tensor).
  std::span<double> row(std::size_t i) {
    const std::size_t stride = data_.size() / shape_[0];
    return std::span<double>(data_).subspan(i * stride, stride);
  }
  std::span<const double> row(std::size_t i) const {
    const std::size_t stride = data_.size() / shape_[0];
    return std::span<const double>(data_).subspan(i * stride, stride);
  }

  Tensor reshaped(Shape shape) const {
    if (shape_product(shape) != data_.size()) {
      throw DimensionError("cannot reshape " + shape_to_string(shape_) + " to " + shape_to_string(shape));
    }
    return Tensor(std::move(shape), data_);
  }

  void require_rank(std::size_t r, const char* op) const {
    if (shape_.size() != r) {
      throw DimensionError(std::string(op) + ": expected rank " + std::to_string(r) + ", got shape " +
                           shape_to_string(shape_));
    }
  }

  void require_shape(const Shape& s, const char* op) const {
    if (shape_ != s) {
      throw DimensionError(std::string(op) + ": expected shape " + shape_to_string(s) + ", got " +
                           shape_to_string(shape_));
    }
  }

  void fill(double v) { std::fill(data_.begin(), data_.end(), v); }

  Tensor& operator+=(const Tensor& o) {
    o.require_shape(shape_, "operator+=");
    for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += o.data_[i];
    return *this;
  }
  Tensor& operator-=(const Tensor& o) {
    o.require_shape(shape_, "operator-=");
    for (std::size_t i = 0; i < data_.size(); ++i) data_[i] -= o.data_[i];
    return *this;
  }
  Tensor& operator*=(double s) {
    for (double& v : data_) v *= s;
    return *this;
  }

  /// this += s * o
  void axpy(double s, const Tensor& o) {
    o.require_shape(shape_, "axpy");
    for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += s * o.data_[i];
  }

  friend Tensor operator+(Tensor a, const Tensor& b) { return a += b; }
  friend Tensor operator-(Tensor a, const Tensor& b) { return a -= b; }
  friend Tensor operator*(Tensor a, double s) { return a *= s; }
  friend Tensor operator*(double s, Tensor a) { return a *= s; }

  bool operator==(const Tensor& o) const = default;

 private:
  static void check_shape(const Shape& shape) {
    if (shape.empty()) throw DimensionError("tensor shape must have at least one dimension");
    for (std::size_t d : shape) {
      if (d == 0) throw DimensionError("tensor dimensions must be positive, got " + shape_to_string(shape));
    }
  }

  Shape shape_;
  std::vector<double> data_;
};

inline void require_finite(const Tensor& a, const char* op) {
  for (double v : a.data()) {
    if (!std::isfinite(v)) throw NumericError(std::string(op) + ": non-finite entry");
  }
}

/// a (m x k) * b (k x n)
inline Tensor matmul(const Tensor& a, const Tensor& b) {
  a.require_rank(2, "matmul");
  b.require_rank(2, "matmul");
  const std::size_t m = a.rows(), k = a.cols(), n = b.cols();
  if (b.rows() != k) {
    throw DimensionError("matmul: inner dimensions differ, " + shape_to_string(a.shape()) + " * " +
                         shape_to_string(b.shape()));
  }
  Tensor c({m, n});
  const double* pa = a.data().data();
  const double* pb = b.data().data();
  double* pc = c.data().data();
  for (std::size_t i = 0; i < m; ++i) {
    double* crow = pc + i * n;
    for (std::size_t p = 0; p < k; ++p) {
      const double av = pa[i * k + p];
      if (av == 0.0) continue;
      const double* brow = pb + p * n;
      for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
  return c;
}

/// aᵀ (k x m)ᵀ * b (k x n) -> m x n
inline Tensor matmul_tn(const Tensor& a, const Tensor& b) {
  a.require_rank(2, "matmul_tn");
  b.require_rank(2, "matmul_tn");
  const std::size_t k = a.rows(), m = a.cols(), n = b.cols();
  if (b.rows() != k) {
    throw DimensionError("matmul_tn: inner dimensions differ, " + shape_to_string(a.shape()) + "ᵀ * " +
                         shape_to_string(b.shape()));
  }
  Tensor c({m, n});
  const double* pa = a.data().data();
  const double* pb = b.data().data();
  double* pc = c.data().data();
  for (std::size_t p = 0; p < k; ++p) {
    const double* arow = pa + p * m;
    const double* brow = pb + p * n;
    for (std::size_t i = 0; i < m; ++i) {
      const double av = arow[i];
      if (av == 0.0) continue;
      double* crow = pc + i * n;
      for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
  return c;
}

/// a (m x k) * bᵀ (n x k)ᵀ -> m x n
inline Tensor transpose(const Tensor& a);

inline Tensor matmul_nt(const Tensor& a, const Tensor& b) {
  a.require_rank(2, "matmul_nt");
  b.require_rank(2, "matmul_nt");
  if (b.cols() != a.cols()) {
    throw DimensionError("matmul_nt: inner dimensions differ, " + shape_to_string(a.shape()) + " * " +
                         shape_to_string(b.shape()) + "ᵀ");
  }
  // row-times-row dot products do not vectorize; the axpy form does
  return matmul(a, transpose(b));
}

inline Tensor transpose(const Tensor& a) {
  a.require_rank(2, "transpose");
  const std::size_t m = a.rows(), n = a.cols();
  Tensor t({n, m});
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) t(j, i) = a(i, j);
  return t;
}

inline double frobenius_norm(const Tensor& a) {
  require_finite(a, "frobenius_norm");
  double s = 0.0;
  for (double v : a.data()) s += v * v;
  return std::sqrt(s);
}

inline double l1_norm(const Tensor& a) {
  require_finite(a, "l1_norm");
  double s = 0.0;
  for (double v : a.data()) s += std::abs(v);
  return s;
}

inline double l1_norm(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += std::abs(x);
  return s;
}

inline double max_abs_diff(const Tensor& a, const Tensor& b) {
  b.require_shape(a.shape(), "max_abs_diff");
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

/// Matrix with entries `diag` on the diagonal.
inline Tensor diag(std::span<const double> values) {
  Tensor t({values.size(), values.size()});
  for (std::size_t i = 0; i < values.size(); ++i) t(i, i) = values[i];
  return t;
}

}  // namespace smoothcomp
