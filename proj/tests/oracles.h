// tests/oracles.h

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

// Independent reference implementations used to check the library: each one
// recomputes its quantity directly from definitions, sharing no code with the
// implementation under test.

#ifndef DTGVAE_TESTS_ORACLES_H_
#define DTGVAE_TESTS_ORACLES_H_

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <vector>

#include "dtgvae/cluster.h"
#include "dtgvae/tensor.h"

namespace dtgvae::test {

/// Exhaustive-minimum inertia over all 2-cluster assignments of <= 20 points.
inline double brute_force_two_cluster_inertia(const Tensor &x) {
  const std::size_t n = x.rows(), d = x.cols();
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t mask = 1; mask + 1 < (1u << n); ++mask) {
    std::vector<double> c0(d, 0.0), c1(d, 0.0);
    std::size_t n0 = 0, n1 = 0;
    for (std::size_t i = 0; i < n; ++i) {
      const double *xi = x.row_ptr(i);
      if (mask & (1u << i)) {
        for (std::size_t j = 0; j < d; ++j) c1[j] += xi[j];
        ++n1;
      } else {
        for (std::size_t j = 0; j < d; ++j) c0[j] += xi[j];
        ++n0;
      }
    }
    for (std::size_t j = 0; j < d; ++j) {
      c0[j] /= static_cast<double>(n0);
      c1[j] /= static_cast<double>(n1);
    }
    double inertia = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double *xi = x.row_ptr(i);
      const std::vector<double> &c = (mask & (1u << i)) ? c1 : c0;
      for (std::size_t j = 0; j < d; ++j) {
        inertia += (xi[j] - c[j]) * (xi[j] - c[j]);
      }
    }
    best = std::min(best, inertia);
  }
  return best;
}

/// Naive Ward clustering: recompute every cluster distance from member means
/// at each step as 2 na nb / (na + nb) * ||mean_a - mean_b||^2. Ties break by
/// the smallest representative pair, matching the library convention.
inline std::vector<WardMerge> naive_ward(const Tensor &x) {
  const std::size_t n = x.rows(), d = x.cols();
  std::vector<std::vector<std::size_t>> clusters(n);
  for (std::size_t i = 0; i < n; ++i) clusters[i] = {i};
  std::vector<char> active(n, 1);

  auto ward_distance = [&](std::size_t a, std::size_t b) {
    std::vector<double> ma(d, 0.0), mb(d, 0.0);
    for (std::size_t i : clusters[a]) {
      for (std::size_t j = 0; j < d; ++j) ma[j] += x.at(i, j);
    }
    for (std::size_t i : clusters[b]) {
      for (std::size_t j = 0; j < d; ++j) mb[j] += x.at(i, j);
    }
    const double na = static_cast<double>(clusters[a].size());
    const double nb = static_cast<double>(clusters[b].size());
    double dist = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
      const double diff = ma[j] / na - mb[j] / nb;
      dist += diff * diff;
    }
    return 2.0 * na * nb / (na + nb) * dist;
  };

  std::vector<WardMerge> merges;
  for (std::size_t step = 0; step + 1 < n; ++step) {
    double best = std::numeric_limits<double>::infinity();
    std::size_t bi = 0, bj = 0;
    for (std::size_t i = 0; i < n; ++i) {
      if (!active[i]) continue;
      for (std::size_t j = i + 1; j < n; ++j) {
        if (!active[j]) continue;
        const double dist = ward_distance(i, j);
        if (dist < best) {
          best = dist;
          bi = i;
          bj = j;
        }
      }
    }
    merges.push_back({bi, bj, best});
    clusters[bi].insert(clusters[bi].end(), clusters[bj].begin(),
                        clusters[bj].end());
    active[bj] = 0;
  }
  return merges;
}

/// Plug-in entropy/mutual-information NMI, straight from the definitions.
inline double nmi_oracle(const std::vector<int> &u, const std::vector<int> &v) {
  const double n = static_cast<double>(u.size());
  std::map<int, double> pu, pv;
  std::map<std::pair<int, int>, double> puv;
  for (std::size_t i = 0; i < u.size(); ++i) {
    pu[u[i]] += 1.0 / n;
    pv[v[i]] += 1.0 / n;
    puv[{u[i], v[i]}] += 1.0 / n;
  }
  double hu = 0.0, hv = 0.0, mi = 0.0;
  for (auto &[k, p] : pu) hu -= p * std::log(p);
  for (auto &[k, p] : pv) hv -= p * std::log(p);
  for (auto &[k, p] : puv) mi += p * std::log(p / (pu[k.first] * pv[k.second]));
  if (hu == 0.0 && hv == 0.0) return 1.0;
  if (hu == 0.0 || hv == 0.0) return 0.0;
  return std::clamp(mi / (0.5 * (hu + hv)), 0.0, 1.0);
}

/// Pair-counting ARI over all C(n, 2) point pairs.
inline double ari_oracle(const std::vector<int> &u, const std::vector<int> &v) {
  const std::size_t n = u.size();
  double n11 = 0, n00 = 0, n10 = 0, n01 = 0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const bool same_u = u[i] == u[j];
      const bool same_v = v[i] == v[j];
      if (same_u && same_v) ++n11;
      else if (!same_u && !same_v) ++n00;
      else if (same_u) ++n10;
      else ++n01;
    }
  }
  const double total = n11 + n00 + n10 + n01;
  const double expected = (n11 + n10) * (n11 + n01) / total;
  const double maximum = 0.5 * ((n11 + n10) + (n11 + n01));
  if (maximum == expected) return 1.0;
  return (n11 - expected) / (maximum - expected);
}

/// Definition-level per-point silhouette recomputation.
inline double silhouette_oracle(const Tensor &x, const std::vector<int> &labels) {
  const std::size_t n = x.rows();
  std::map<int, std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < n; ++i) groups[labels[i]].push_back(i);
  auto dist = [&](std::size_t i, std::size_t j) {
    return std::sqrt(squared_distance(x.row_ptr(i), x.row_ptr(j), x.cols()));
  };
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const auto &own = groups[labels[i]];
    if (own.size() == 1) continue;
    double a = 0.0;
    for (std::size_t j : own) {
      if (j != i) a += dist(i, j);
    }
    a /= static_cast<double>(own.size() - 1);
    double b = std::numeric_limits<double>::infinity();
    for (const auto &[lab, members] : groups) {
      if (lab == labels[i]) continue;
      double m = 0.0;
      for (std::size_t j : members) m += dist(i, j);
      b = std::min(b, m / static_cast<double>(members.size()));
    }
    total += (b - a) / std::max(a, b);
  }
  return total / static_cast<double>(n);
}

}  // namespace dtgvae::test

#endif  // DTGVAE_TESTS_ORACLES_H_
