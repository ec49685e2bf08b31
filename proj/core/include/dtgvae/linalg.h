// dtgvae/linalg.h

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

#ifndef DTGVAE_LINALG_H_
#define DTGVAE_LINALG_H_

#include "dtgvae/tensor.h"

namespace dtgvae {

/// Lower-triangular Cholesky factor L with m = L * L^T. Only the lower
/// triangle of m is read. Throws DimensionError if m is not square and
/// NumericError if a pivot is not strictly positive (input not PD).
Tensor cholesky(const Tensor &m);

/// log(det(m)) for symmetric positive definite m, via cholesky().
double cholesky_logdet(const Tensor &m);

/// Inverse of symmetric positive definite m from its Cholesky factor:
/// m^-1 = L^-T * L^-1. Result is exactly symmetric.
Tensor spd_inverse(const Tensor &m);

/// Same, starting from an already-computed lower Cholesky factor.
Tensor spd_inverse_from_cholesky(const Tensor &l);

}  // namespace dtgvae

#endif  // DTGVAE_LINALG_H_
