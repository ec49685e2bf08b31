// core/src/linalg.cc

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

#include "dtgvae/linalg.h"

#include <cmath>
#include <string>

namespace dtgvae {

Tensor cholesky(const Tensor &m) {
  if (m.rank() != 2 || m.rows() != m.cols()) {
    throw DimensionError("cholesky requires a square matrix");
  }
  const std::size_t n = m.rows();
  Tensor l({n, n});
  for (std::size_t j = 0; j < n; ++j) {
    const double *lj = l.row_ptr(j);
    const double diag = m.at(j, j) - dot(lj, lj, j);
    if (!(diag > 0.0) || !std::isfinite(diag)) {
      throw NumericError("cholesky: matrix is not positive definite (pivot " +
                         std::to_string(j) + ")");
    }
    const double ljj = std::sqrt(diag);
    l.at(j, j) = ljj;
    for (std::size_t i = j + 1; i < n; ++i) {
      const double *li = l.row_ptr(i);
      l.at(i, j) = (m.at(i, j) - dot(li, lj, j)) / ljj;
    }
  }
  return l;
}

double cholesky_logdet(const Tensor &m) {
  Tensor l = cholesky(m);
  double s = 0.0;
  for (std::size_t i = 0; i < l.rows(); ++i) s += std::log(l.at(i, i));
  return 2.0 * s;
}

Tensor spd_inverse(const Tensor &m) {
  return spd_inverse_from_cholesky(cholesky(m));
}

Tensor spd_inverse_from_cholesky(const Tensor &l) {
  const std::size_t n = l.rows();

  // u = L^-T, upper triangular, built row by row so every inner loop walks
  // contiguous row storage: row i solves u[i,:] * L^T = e_i.
  Tensor u({n, n});
  for (std::size_t i = 0; i < n; ++i) {
    double *ui = u.row_ptr(i);
    ui[i] = 1.0 / l.at(i, i);
    for (std::size_t j = i + 1; j < n; ++j) {
      const double *lj = l.row_ptr(j);
      ui[j] = -dot(ui + i, lj + i, j - i) / lj[j];
    }
  }

  // m^-1 = L^-T * L^-1 = U * U^T via contiguous row dot products.
  Tensor inv({n, n});
  for (std::size_t i = 0; i < n; ++i) {
    const double *ui = u.row_ptr(i);
    for (std::size_t j = i; j < n; ++j) {
      const double *uj = u.row_ptr(j);
      const double s = dot(ui + j, uj + j, n - j);
      inv.at(i, j) = s;
      inv.at(j, i) = s;
    }
  }
  return inv;
}

}  // namespace dtgvae
