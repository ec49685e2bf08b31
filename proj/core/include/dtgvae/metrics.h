// dtgvae/metrics.h

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

#ifndef DTGVAE_METRICS_H_
#define DTGVAE_METRICS_H_

#include <span>
#include <vector>

#include "dtgvae/tensor.h"

namespace dtgvae {

/// Joint class/cluster counts with marginals. Labels may be arbitrary ints;
/// they are compacted in first-appearance order.
struct ContingencyTable {
  std::vector<std::vector<std::size_t>> counts;  // [true class][pred cluster]
  std::vector<std::size_t> row_marginals;
  std::vector<std::size_t> col_marginals;
  std::size_t total = 0;

  static ContingencyTable from_labels(std::span<const int> labels_true,
                                      std::span<const int> labels_pred);
};

/// Normalized mutual information, I(U;V) / ((H(U) + H(V)) / 2), natural log,
/// in [0, 1]. Conventions: 1.0 when both partitions are single-cluster,
/// 0.0 when exactly one is.
double nmi(std::span<const int> labels_true, std::span<const int> labels_pred);

/// Adjusted Rand index via the pair-counting formula, in [-1, 1]; 1.0 when
/// max(index) equals its expectation (both partitions trivial).
double ari(std::span<const int> labels_true, std::span<const int> labels_pred);

/// Mean silhouette over points: (b - a) / max(a, b) with Euclidean distances;
/// singleton clusters score 0. Requires at least two distinct labels.
double silhouette(const Tensor &x, std::span<const int> labels);

}  // namespace dtgvae

#endif  // DTGVAE_METRICS_H_
