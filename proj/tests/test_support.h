// tests/test_support.h

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

#ifndef DTGVAE_TESTS_TEST_SUPPORT_H_
#define DTGVAE_TESTS_TEST_SUPPORT_H_

#include <unistd.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

#include "dtgvae/rng.h"
#include "dtgvae/tensor.h"

namespace dtgvae::test {

/// Relative error with an absolute floor: pairs whose magnitudes are both
/// below the floor are dominated by finite-difference noise and count as
/// matching.
inline double rel_err(double a, double b, double floor = 1e-7) {
  const double m = std::max(std::fabs(a), std::fabs(b));
  if (m < floor) return 0.0;
  return std::fabs(a - b) / m;
}

/// Central finite difference of a scalar-valued callable with respect to one
/// entry of `t`. The callable must re-read `t` on every invocation.
template <typename F>
double central_diff(F &&f, Tensor &t, std::size_t idx, double h = 1e-5) {
  const double orig = t[idx];
  t[idx] = orig + h;
  const double fp = f();
  t[idx] = orig - h;
  const double fm = f();
  t[idx] = orig;
  return (fp - fm) / (2.0 * h);
}

/// Worst relative error between an analytic gradient tensor and central
/// finite differences over every entry of `param`.
template <typename F>
double max_grad_rel_err(F &&eval_loss, Tensor &param, const Tensor &analytic,
                        double h = 1e-5, double floor = 1e-7) {
  double worst = 0.0;
  for (std::size_t i = 0; i < param.size(); ++i) {
    const double fd = central_diff(eval_loss, param, i, h);
    worst = std::max(worst, rel_err(analytic[i], fd, floor));
  }
  return worst;
}

inline Tensor random_tensor(Rng &rng, std::vector<std::size_t> shape, double lo,
                            double hi) {
  Tensor t(std::move(shape));
  for (double &v : t.values()) v = rng.uniform(lo, hi);
  return t;
}

/// Values drawn away from zero so relu/abs kinks cannot sit inside the
/// finite-difference stencil.
inline Tensor random_tensor_off_zero(Rng &rng, std::vector<std::size_t> shape,
                                     double lo = 0.2, double hi = 1.0) {
  Tensor t(std::move(shape));
  for (double &v : t.values()) {
    const double mag = rng.uniform(lo, hi);
    v = rng.uniform() < 0.5 ? -mag : mag;
  }
  return t;
}

/// Random symmetric positive definite matrix A A^T + n I.
inline Tensor random_spd(Rng &rng, std::size_t n) {
  Tensor a = random_tensor(rng, {n, n}, -1.0, 1.0);
  Tensor m({n, n});
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k < n; ++k) s += a.at(i, k) * a.at(j, k);
      m.at(i, j) = s;
    }
    m.at(i, i) += static_cast<double>(n);
  }
  return m;
}

inline double frobenius(const Tensor &m) {
  double s = 0.0;
  for (double v : m.values()) s += v * v;
  return std::sqrt(s);
}

/// Scratch directory under the system temp path, cleaned up on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string &tag) {
    base_ = std::filesystem::temp_directory_path() /
            ("dtgvae_test_" + tag + "_" + std::to_string(::getpid()));
    std::filesystem::create_directories(base_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(base_, ec);
  }
  std::filesystem::path path(const std::string &name) const {
    return base_ / name;
  }

 private:
  std::filesystem::path base_;
};

}  // namespace dtgvae::test

#endif  // DTGVAE_TESTS_TEST_SUPPORT_H_
