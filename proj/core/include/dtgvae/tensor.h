// dtgvae/tensor.h

// Copyright 2026  The dtgvae authors

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#ifndef DTGVAE_TENSOR_H_
#define DTGVAE_TENSOR_H_

#include <cstddef>
#include <initializer_list>
#include <span>
#include <vector>

#include "dtgvae/errors.h"

namespace dtgvae {

/// Dense row-major tensor of 64-bit floats. Rank 1 and 2 cover everything the
/// model needs; a size-1 tensor of any rank is treated as a scalar.
///
/// Invariant: product(shape) == values.size() at all times.
class Tensor {
 public:
  Tensor() = default;

  /// Zero-filled tensor of the given shape.
  explicit Tensor(std::vector<std::size_t> shape);

  static Tensor scalar(double v);
  static Tensor zeros(std::vector<std::size_t> shape);
  static Tensor full(std::vector<std::size_t> shape, double v);
  static Tensor identity(std::size_t n);
  static Tensor from_values(std::vector<std::size_t> shape,
                            std::vector<double> values);
  /// Rank-1 convenience: Tensor::row({1, 2, 3}).
  static Tensor row(std::initializer_list<double> values);
  /// Rank-2 convenience: Tensor::matrix({{1, 2}, {3, 4}}).
  static Tensor matrix(std::initializer_list<std::initializer_list<double>> rows);

  const std::vector<std::size_t> &shape() const { return shape_; }
  std::size_t rank() const { return shape_.size(); }
  std::size_t size() const { return values_.size(); }
  bool empty() const { return values_.empty(); }
  bool is_scalar() const { return values_.size() == 1; }

  /// Rank-2 accessors; rank-1 tensors behave as a single row.
  std::size_t rows() const { return rank() == 2 ? shape_[0] : 1; }
  std::size_t cols() const {
    return rank() == 2 ? shape_[1] : (shape_.empty() ? 0 : shape_[0]);
  }

  double &operator[](std::size_t i) { return values_[i]; }
  double operator[](std::size_t i) const { return values_[i]; }
  double &at(std::size_t r, std::size_t c) { return values_[r * cols() + c]; }
  double at(std::size_t r, std::size_t c) const { return values_[r * cols() + c]; }

  double *data() { return values_.data(); }
  const double *data() const { return values_.data(); }
  double *row_ptr(std::size_t r) { return values_.data() + r * cols(); }
  const double *row_ptr(std::size_t r) const { return values_.data() + r * cols(); }
  std::span<double> values() { return values_; }
  std::span<const double> values() const { return values_; }

  bool same_shape(const Tensor &other) const { return shape_ == other.shape_; }
  bool all_finite() const;

  /// Exact elementwise equality, shape included.
  bool operator==(const Tensor &other) const {
    return shape_ == other.shape_ && values_ == other.values_;
  }

 private:
  std::vector<std::size_t> shape_;
  std::vector<double> values_;
};

// Value-level helpers used outside the autodiff graph (optimizer, clustering,
// oracles). They do not record gradients.

/// C = A * B for rank-2 operands; throws DimensionError on mismatch.
Tensor matmul_value(const Tensor &a, const Tensor &b);
Tensor transpose_value(const Tensor &m);
/// Fixed-order four-accumulator dot product (deterministic per build).
double dot(const double *a, const double *b, std::size_t n);
double squared_distance(const double *a, const double *b, std::size_t n);
double max_abs_diff(const Tensor &a, const Tensor &b);

}  // namespace dtgvae

#endif  // DTGVAE_TENSOR_H_
