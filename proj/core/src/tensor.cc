// core/src/tensor.cc

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

#include "dtgvae/tensor.h"

#include <cmath>
#include <string>

namespace dtgvae {

namespace {
std::size_t shape_product(const std::vector<std::size_t> &shape) {
  std::size_t n = 1;
  for (std::size_t d : shape) n *= d;
  return shape.empty() ? 0 : n;
}
}  // namespace

Tensor::Tensor(std::vector<std::size_t> shape)
    : shape_(std::move(shape)), values_(shape_product(shape_), 0.0) {}

Tensor Tensor::scalar(double v) {
  Tensor t({1});
  t.values_[0] = v;
  return t;
}

Tensor Tensor::zeros(std::vector<std::size_t> shape) {
  return Tensor(std::move(shape));
}

Tensor Tensor::full(std::vector<std::size_t> shape, double v) {
  Tensor t(std::move(shape));
  for (double &x : t.values_) x = v;
  return t;
}

Tensor Tensor::identity(std::size_t n) {
  Tensor t({n, n});
  for (std::size_t i = 0; i < n; ++i) t.at(i, i) = 1.0;
  return t;
}

Tensor Tensor::from_values(std::vector<std::size_t> shape,
                           std::vector<double> values) {
  if (shape_product(shape) != values.size()) {
    throw DimensionError("tensor shape does not match value count: " +
                         std::to_string(shape_product(shape)) + " vs " +
                         std::to_string(values.size()));
  }
  Tensor t;
  t.shape_ = std::move(shape);
  t.values_ = std::move(values);
  return t;
}

Tensor Tensor::row(std::initializer_list<double> values) {
  return from_values({values.size()}, std::vector<double>(values));
}

Tensor Tensor::matrix(std::initializer_list<std::initializer_list<double>> rows) {
  std::size_t r = rows.size();
  std::size_t c = r == 0 ? 0 : rows.begin()->size();
  std::vector<double> v;
  v.reserve(r * c);
  for (const auto &row : rows) {
    if (row.size() != c) throw DimensionError("ragged matrix initializer");
    v.insert(v.end(), row.begin(), row.end());
  }
  return from_values({r, c}, std::move(v));
}

bool Tensor::all_finite() const {
  for (double v : values_) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

Tensor matmul_value(const Tensor &a, const Tensor &b) {
  if (a.rank() != 2 || b.rank() != 2) {
    throw DimensionError("matmul requires rank-2 tensors");
  }
  if (a.cols() != b.rows()) {
    throw DimensionError("matmul inner dimensions disagree: " +
                         std::to_string(a.cols()) + " vs " +
                         std::to_string(b.rows()));
  }
  const std::size_t m = a.rows(), k = a.cols(), n = b.cols();
  Tensor c({m, n});
  for (std::size_t i = 0; i < m; ++i) {
    double *ci = c.row_ptr(i);
    const double *ai = a.row_ptr(i);
    for (std::size_t p = 0; p < k; ++p) {
      const double aip = ai[p];
      const double *bp = b.row_ptr(p);
      for (std::size_t j = 0; j < n; ++j) ci[j] += aip * bp[j];
    }
  }
  return c;
}

Tensor transpose_value(const Tensor &m) {
  if (m.rank() != 2) throw DimensionError("transpose requires a rank-2 tensor");
  Tensor t({m.cols(), m.rows()});
  for (std::size_t i = 0; i < m.rows(); ++i) {
    for (std::size_t j = 0; j < m.cols(); ++j) t.at(j, i) = m.at(i, j);
  }
  return t;
}

double dot(const double *a, const double *b, std::size_t n) {
  double s0 = 0.0, s1 = 0.0, s2 = 0.0, s3 = 0.0;
  std::size_t k = 0;
  for (; k + 4 <= n; k += 4) {
    s0 += a[k] * b[k];
    s1 += a[k + 1] * b[k + 1];
    s2 += a[k + 2] * b[k + 2];
    s3 += a[k + 3] * b[k + 3];
  }
  double tail = 0.0;
  for (; k < n; ++k) tail += a[k] * b[k];
  return ((s0 + s1) + (s2 + s3)) + tail;
}

double squared_distance(const double *a, const double *b, std::size_t n) {
  double s0 = 0.0, s1 = 0.0, s2 = 0.0, s3 = 0.0;
  std::size_t k = 0;
  for (; k + 4 <= n; k += 4) {
    const double d0 = a[k] - b[k];
    const double d1 = a[k + 1] - b[k + 1];
    const double d2 = a[k + 2] - b[k + 2];
    const double d3 = a[k + 3] - b[k + 3];
    s0 += d0 * d0;
    s1 += d1 * d1;
    s2 += d2 * d2;
    s3 += d3 * d3;
  }
  double tail = 0.0;
  for (; k < n; ++k) {
    const double d = a[k] - b[k];
    tail += d * d;
  }
  return ((s0 + s1) + (s2 + s3)) + tail;
}

double max_abs_diff(const Tensor &a, const Tensor &b) {
  if (!a.same_shape(b)) throw DimensionError("max_abs_diff shape mismatch");
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    m = std::max(m, std::fabs(a[i] - b[i]));
  }
  return m;
}

}  // namespace dtgvae
