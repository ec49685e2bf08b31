// dtgvae/cluster.h

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

#ifndef DTGVAE_CLUSTER_H_
#define DTGVAE_CLUSTER_H_

#include <cstdint>
#include <string>
#include <vector>

#include "dtgvae/tensor.h"

namespace dtgvae {

struct ClusterAssignment {
  std::vector<int> labels;  // per-row cluster index in [0, k)
  std::size_t k = 0;
  std::string algorithm;
  /// K-Means: final within-cluster sum of squares.
  double inertia = 0.0;
  /// K-Means: objective after each Lloyd iteration of the winning restart
  /// (non-increasing by construction).
  std::vector<double> inertia_trace;
  /// Ward: merge distance of each merge performed (non-decreasing).
  std::vector<double> merge_heights;
};

struct KMeansOptions {
  std::size_t max_iter = 300;
  double tol = 1e-6;       // stop when the largest centroid shift drops below
  std::size_t restarts = 10;
};

/// Lloyd iterations from k-means++ seeding, best of `restarts` by inertia.
/// Nearest-centroid ties break toward the lowest centroid index; an emptied
/// cluster is repaired by moving the point farthest from its centroid.
/// Deterministic per seed.
ClusterAssignment kmeans(const Tensor &x, std::size_t k, std::uint64_t seed,
                         const KMeansOptions &opts = {});

/// Normalized-cut spectral clustering: Gaussian affinity with the median
/// nonzero pairwise distance as bandwidth, symmetric normalized Laplacian,
/// k smallest eigenvectors, row normalization, then kmeans on the embedding.
ClusterAssignment spectral(const Tensor &x, std::size_t k, std::uint64_t seed);

/// Ward-linkage agglomerative clustering via the Lance-Williams recurrence on
/// squared Euclidean distances; merge ties break toward the smallest
/// (cluster id, cluster id) pair, cluster ids being the smallest member row.
ClusterAssignment agglomerative(const Tensor &x, std::size_t k);

/// One Ward merge: the two cluster ids joined (a < b) and the linkage
/// distance at which it happened.
struct WardMerge {
  std::size_t a = 0, b = 0;
  double height = 0.0;
};

/// The full dendrogram (n - 1 merges), for oracle comparison.
std::vector<WardMerge> ward_dendrogram(const Tensor &x);

struct EighResult {
  Tensor eigenvalues;   // [n], ascending
  Tensor eigenvectors;  // [n x n], column j pairs with eigenvalues[j]
};

/// Cyclic Jacobi rotations until the off-diagonal Frobenius norm falls below
/// 1e-12 * ||m||_F. Input must be symmetric within 1e-10.
EighResult eigh(const Tensor &m);

/// exp(-d_ij^2 / (2 sigma^2)) with sigma = median nonzero pairwise distance
/// and a zero diagonal. Raises NumericError when all points coincide.
Tensor gaussian_affinity(const Tensor &x);

/// I - D^{-1/2} A D^{-1/2}; zero-degree rows fall back to the identity row.
Tensor normalized_laplacian(const Tensor &affinity);

}  // namespace dtgvae

#endif  // DTGVAE_CLUSTER_H_
