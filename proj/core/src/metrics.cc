// core/src/metrics.cc

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

#include "dtgvae/metrics.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <unordered_map>

#include "dtgvae/errors.h"

namespace dtgvae {

namespace {

std::vector<int> compact(std::span<const int> labels, std::size_t &n_classes) {
  std::unordered_map<int, int> map;
  std::vector<int> out;
  out.reserve(labels.size());
  for (int v : labels) {
    auto [it, inserted] = map.emplace(v, static_cast<int>(map.size()));
    out.push_back(it->second);
  }
  n_classes = map.size();
  return out;
}

double entropy(const std::vector<std::size_t> &marginals, double n) {
  double h = 0.0;
  for (std::size_t c : marginals) {
    if (c == 0) continue;
    const double p = static_cast<double>(c) / n;
    h -= p * std::log(p);
  }
  return h;
}

double pairs(double n) { return n * (n - 1.0) / 2.0; }

}  // namespace

ContingencyTable ContingencyTable::from_labels(std::span<const int> labels_true,
                                               std::span<const int> labels_pred) {
  if (labels_true.size() != labels_pred.size()) {
    throw DataError("label vectors have different lengths");
  }
  std::size_t r = 0, c = 0;
  const std::vector<int> u = compact(labels_true, r);
  const std::vector<int> v = compact(labels_pred, c);
  ContingencyTable t;
  t.counts.assign(r, std::vector<std::size_t>(c, 0));
  t.row_marginals.assign(r, 0);
  t.col_marginals.assign(c, 0);
  t.total = u.size();
  for (std::size_t i = 0; i < u.size(); ++i) {
    t.counts[static_cast<std::size_t>(u[i])][static_cast<std::size_t>(v[i])]++;
    t.row_marginals[static_cast<std::size_t>(u[i])]++;
    t.col_marginals[static_cast<std::size_t>(v[i])]++;
  }
  return t;
}

double nmi(std::span<const int> labels_true, std::span<const int> labels_pred) {
  if (labels_true.empty()) throw DataError("nmi: empty input");
  const ContingencyTable t = ContingencyTable::from_labels(labels_true, labels_pred);
  const double n = static_cast<double>(t.total);
  const double hu = entropy(t.row_marginals, n);
  const double hv = entropy(t.col_marginals, n);
  if (hu == 0.0 && hv == 0.0) return 1.0;
  if (hu == 0.0 || hv == 0.0) return 0.0;

  double mi = 0.0;
  for (std::size_t i = 0; i < t.counts.size(); ++i) {
    for (std::size_t j = 0; j < t.counts[i].size(); ++j) {
      const std::size_t nij = t.counts[i][j];
      if (nij == 0) continue;
      const double pij = static_cast<double>(nij) / n;
      const double pi = static_cast<double>(t.row_marginals[i]) / n;
      const double pj = static_cast<double>(t.col_marginals[j]) / n;
      mi += pij * std::log(pij / (pi * pj));
    }
  }
  return std::clamp(mi / (0.5 * (hu + hv)), 0.0, 1.0);
}

double ari(std::span<const int> labels_true, std::span<const int> labels_pred) {
  if (labels_true.size() < 2) throw DataError("ari: need at least 2 samples");
  const ContingencyTable t = ContingencyTable::from_labels(labels_true, labels_pred);
  double index = 0.0;
  for (const auto &row : t.counts) {
    for (std::size_t nij : row) index += pairs(static_cast<double>(nij));
  }
  double sum_a = 0.0, sum_b = 0.0;
  for (std::size_t a : t.row_marginals) sum_a += pairs(static_cast<double>(a));
  for (std::size_t b : t.col_marginals) sum_b += pairs(static_cast<double>(b));
  const double expected = sum_a * sum_b / pairs(static_cast<double>(t.total));
  const double max_index = 0.5 * (sum_a + sum_b);
  if (max_index == expected) return 1.0;  // both partitions trivial
  return (index - expected) / (max_index - expected);
}

double silhouette(const Tensor &x, std::span<const int> labels) {
  if (x.rank() != 2) throw DimensionError("silhouette: x must be [n x d]");
  const std::size_t n = x.rows();
  if (labels.size() != n) throw DataError("silhouette: label count mismatch");
  if (n < 2) throw DataError("silhouette: need at least 2 samples");

  std::size_t k = 0;
  const std::vector<int> lab = compact(labels, k);
  if (k < 2) throw NumericError("silhouette: all points share a single cluster");

  std::vector<std::size_t> cluster_size(k, 0);
  for (int c : lab) cluster_size[static_cast<std::size_t>(c)]++;

  const std::size_t d = x.cols();
  double score = 0.0;
  std::vector<double> dist_sum(k);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t ci = static_cast<std::size_t>(lab[i]);
    if (cluster_size[ci] == 1) continue;  // singleton contributes s = 0
    std::fill(dist_sum.begin(), dist_sum.end(), 0.0);
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      dist_sum[static_cast<std::size_t>(lab[j])] +=
          std::sqrt(squared_distance(x.row_ptr(i), x.row_ptr(j), d));
    }
    const double a = dist_sum[ci] / static_cast<double>(cluster_size[ci] - 1);
    double b = std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < k; ++c) {
      if (c == ci || cluster_size[c] == 0) continue;
      b = std::min(b, dist_sum[c] / static_cast<double>(cluster_size[c]));
    }
    const double denom = std::max(a, b);
    score += denom > 0.0 ? (b - a) / denom : 0.0;
  }
  return score / static_cast<double>(n);
}

}  // namespace dtgvae
