// Copyright 2026 The APT Toolkit Authors
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
#include <cassert>
#include <cstddef>
#include <span>
#include <vector>

#include "apt/error.hpp"

namespace apt {

/// Dense row-major matrix. Rows are tokens everywhere in this library.
template <typename T>
class Matrix {
 public:
  using value_type = T;

  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, T fill = T{})
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  T& operator()(std::size_t r, std::size_t c) {
    assert(r < rows_ && c < cols_);
    return data_[r * cols_ + c];
  }
  const T& operator()(std::size_t r, std::size_t c) const {
    assert(r < rows_ && c < cols_);
    return data_[r * cols_ + c];
  }

  std::span<T> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const T> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

  std::span<T> flat() noexcept { return data_; }
  std::span<const T> flat() const noexcept { return data_; }

  /// Rows [begin, end) as a new matrix.
  Matrix slice_rows(std::size_t begin, std::size_t end) const {
    assert(begin <= end && end <= rows_);
    Matrix out(end - begin, cols_);
    std::copy(data_.begin() + static_cast<std::ptrdiff_t>(begin * cols_),
              data_.begin() + static_cast<std::ptrdiff_t>(end * cols_), out.data_.begin());
    return out;
  }

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<T> data_;
};

template <typename To, typename From>
Matrix<To> matrix_cast(const Matrix<From>& m) {
  Matrix<To> out(m.rows(), m.cols());
  std::transform(m.flat().begin(), m.flat().end(), out.flat().begin(),
                 [](From v) { return static_cast<To>(v); });
  return out;
}

/// Affine map y = x W + b with W stored (in x out).
template <typename T>
struct Linear {
  Matrix<T> weight;
  std::vector<T> bias;

  Linear() = default;
  Linear(std::size_t in, std::size_t out) : weight(in, out), bias(out, T{}) {}

  std::size_t in_features() const { return weight.rows(); }
  std::size_t out_features() const { return weight.cols(); }

  void apply(std::span<const T> x, std::span<T> y) const {
    assert(x.size() == in_features() && y.size() == out_features());
    std::copy(bias.begin(), bias.end(), y.begin());
    for (std::size_t i = 0; i < x.size(); ++i) {
      const T xi = x[i];
      const auto w = weight.row(i);
      for (std::size_t j = 0; j < y.size(); ++j) y[j] += xi * w[j];
    }
  }

  std::vector<T> operator()(std::span<const T> x) const {
    std::vector<T> y(out_features());
    apply(x, y);
    return y;
  }

  Matrix<T> operator()(const Matrix<T>& x) const {
    require(x.cols() == in_features(), Errc::DimensionMismatch, "linear input width");
    Matrix<T> y(x.rows(), out_features());
    for (std::size_t r = 0; r < x.rows(); ++r) apply(x.row(r), y.row(r));
    return y;
  }

  /// Accumulates dW += x^T dy, db += dy into `grad`; writes dx when non-empty.
  void backward(std::span<const T> x, std::span<const T> dy, Linear& grad,
                std::span<T> dx = {}) const {
    for (std::size_t j = 0; j < dy.size(); ++j) grad.bias[j] += dy[j];
    for (std::size_t i = 0; i < x.size(); ++i) {
      const T xi = x[i];
      auto gw = grad.weight.row(i);
      const auto w = weight.row(i);
      T acc{};
      for (std::size_t j = 0; j < dy.size(); ++j) {
        gw[j] += xi * dy[j];
        acc += w[j] * dy[j];
      }
      if (!dx.empty()) dx[i] = acc;
    }
  }

  Matrix<T> backward(const Matrix<T>& x, const Matrix<T>& dy, Linear& grad) const {
    Matrix<T> dx(x.rows(), x.cols());
    for (std::size_t r = 0; r < x.rows(); ++r) backward(x.row(r), dy.row(r), grad, dx.row(r));
    return dx;
  }
};

template <typename To, typename From>
Linear<To> linear_cast(const Linear<From>& l) {
  Linear<To> out;
  out.weight = matrix_cast<To>(l.weight);
  out.bias.assign(l.bias.begin(), l.bias.end());
  return out;
}

}  // namespace apt
