// core/src/cluster.cc

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

#include "dtgvae/cluster.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "dtgvae/errors.h"
#include "dtgvae/rng.h"

namespace dtgvae {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void check_points(const Tensor &x, std::size_t k, std::size_t k_min) {
  if (x.rank() != 2 || x.rows() == 0) {
    throw DimensionError("clustering expects a non-empty [n x d] matrix");
  }
  if (k < k_min || k > x.rows()) {
    throw std::invalid_argument("k must be in [" + std::to_string(k_min) + ", " +
                                std::to_string(x.rows()) + "], got " +
                                std::to_string(k));
  }
}

struct LloydResult {
  std::vector<int> labels;
  double inertia = kInf;
  std::vector<double> trace;
};

LloydResult lloyd_once(const Tensor &x, std::size_t k, Rng &rng,
                       const KMeansOptions &opts) {
  const std::size_t n = x.rows(), d = x.cols();

  // k-means++ seeding over the data points.
  std::vector<std::size_t> chosen;
  std::vector<char> is_chosen(n, 0);
  std::vector<double> d2(n, kInf);
  {
    const std::size_t first = static_cast<std::size_t>(rng.uniform_index(n));
    chosen.push_back(first);
    is_chosen[first] = 1;
    while (chosen.size() < k) {
      const double *c = x.row_ptr(chosen.back());
      double total = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        d2[i] = std::min(d2[i], squared_distance(x.row_ptr(i), c, d));
        if (!is_chosen[i]) total += d2[i];
      }
      std::size_t pick = n;
      if (total > 0.0) {
        double target = rng.uniform() * total;
        for (std::size_t i = 0; i < n; ++i) {
          if (is_chosen[i]) continue;
          target -= d2[i];
          if (target <= 0.0) {
            pick = i;
            break;
          }
        }
      }
      if (pick == n) {
        // All remaining mass is zero (duplicate points): lowest unchosen index.
        for (std::size_t i = 0; i < n; ++i) {
          if (!is_chosen[i]) {
            pick = i;
            break;
          }
        }
      }
      chosen.push_back(pick);
      is_chosen[pick] = 1;
    }
  }

  Tensor centroids({k, d});
  for (std::size_t c = 0; c < k; ++c) {
    const double *src = x.row_ptr(chosen[c]);
    double *dst = centroids.row_ptr(c);
    for (std::size_t j = 0; j < d; ++j) dst[j] = src[j];
  }

  LloydResult res;
  res.labels.assign(n, 0);
  std::vector<std::size_t> counts(k, 0);
  Tensor next({k, d});

  for (std::size_t iter = 0; iter < opts.max_iter; ++iter) {
    // Assignment; ties go to the lowest centroid index via strict <.
    std::fill(counts.begin(), counts.end(), 0);
    for (std::size_t i = 0; i < n; ++i) {
      const double *xi = x.row_ptr(i);
      std::size_t best = 0;
      double best_d = squared_distance(xi, centroids.row_ptr(0), d);
      for (std::size_t c = 1; c < k; ++c) {
        const double dist = squared_distance(xi, centroids.row_ptr(c), d);
        if (dist < best_d) {
          best_d = dist;
          best = c;
        }
      }
      res.labels[i] = static_cast<int>(best);
      counts[best]++;
    }

    // Repair empty clusters with the point farthest from its centroid.
    for (std::size_t c = 0; c < k; ++c) {
      if (counts[c] != 0) continue;
      std::size_t far = n;
      double far_d = -1.0;
      for (std::size_t i = 0; i < n; ++i) {
        const std::size_t ci = static_cast<std::size_t>(res.labels[i]);
        if (counts[ci] <= 1) continue;  // do not empty another cluster
        const double dist =
            squared_distance(x.row_ptr(i), centroids.row_ptr(ci), d);
        if (dist > far_d) {
          far_d = dist;
          far = i;
        }
      }
      if (far == n) break;  // nothing movable (k == n with duplicates)
      counts[static_cast<std::size_t>(res.labels[far])]--;
      res.labels[far] = static_cast<int>(c);
      counts[c] = 1;
    }

    // Centroid update.
    for (double &v : next.values()) v = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double *xi = x.row_ptr(i);
      double *cr = next.row_ptr(static_cast<std::size_t>(res.labels[i]));
      for (std::size_t j = 0; j < d; ++j) cr[j] += xi[j];
    }
    double shift = 0.0;
    for (std::size_t c = 0; c < k; ++c) {
      double *cr = next.row_ptr(c);
      const double inv = 1.0 / static_cast<double>(counts[c]);
      for (std::size_t j = 0; j < d; ++j) cr[j] *= inv;
      shift = std::max(shift,
                       std::sqrt(squared_distance(cr, centroids.row_ptr(c), d)));
    }
    std::swap(centroids, next);

    double inertia = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      inertia += squared_distance(
          x.row_ptr(i), centroids.row_ptr(static_cast<std::size_t>(res.labels[i])), d);
    }
    res.trace.push_back(inertia);
    res.inertia = inertia;
    if (shift < opts.tol) break;
  }
  return res;
}

}  // namespace

ClusterAssignment kmeans(const Tensor &x, std::size_t k, std::uint64_t seed,
                         const KMeansOptions &opts) {
  check_points(x, k, 1);
  LloydResult best;
  for (std::size_t r = 0; r < std::max<std::size_t>(1, opts.restarts); ++r) {
    Rng rng(derive_seed(seed, r));
    LloydResult cur = lloyd_once(x, k, rng, opts);
    if (cur.inertia < best.inertia) best = std::move(cur);
  }
  ClusterAssignment out;
  out.labels = std::move(best.labels);
  out.k = k;
  out.algorithm = "kmeans";
  out.inertia = best.inertia;
  out.inertia_trace = std::move(best.trace);
  return out;
}

// ---------------------------------------------------------------------------
// Jacobi eigensolver.

EighResult eigh(const Tensor &m) {
  if (m.rank() != 2 || m.rows() != m.cols()) {
    throw DimensionError("eigh requires a square matrix");
  }
  const std::size_t n = m.rows();
  double fro = 0.0, asym = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      fro += m.at(i, j) * m.at(i, j);
      const double diff = m.at(i, j) - m.at(j, i);
      asym += diff * diff;
    }
  }
  fro = std::sqrt(fro);
  if (std::sqrt(asym) > 1e-10 * std::max(1.0, fro)) {
    throw NumericError("eigh: input matrix is not symmetric");
  }

  Tensor a = m;
  Tensor v = Tensor::identity(n);
  const double target = 1e-12 * std::max(fro, std::numeric_limits<double>::min());

  for (std::size_t sweep = 0; sweep < 100; ++sweep) {
    double off = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = i + 1; j < n; ++j) off += 2.0 * a.at(i, j) * a.at(i, j);
    }
    if (std::sqrt(off) <= target) break;

    for (std::size_t p = 0; p + 1 < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        const double apq = a.at(p, q);
        if (apq == 0.0) continue;
        const double app = a.at(p, p), aqq = a.at(q, q);
        const double tau = (aqq - app) / (2.0 * apq);
        const double t = (tau >= 0.0 ? 1.0 : -1.0) /
                         (std::fabs(tau) + std::sqrt(1.0 + tau * tau));
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double s = t * c;
        for (std::size_t i = 0; i < n; ++i) {
          if (i == p || i == q) continue;
          const double aip = a.at(i, p), aiq = a.at(i, q);
          a.at(i, p) = a.at(p, i) = c * aip - s * aiq;
          a.at(i, q) = a.at(q, i) = s * aip + c * aiq;
        }
        a.at(p, p) = app - t * apq;
        a.at(q, q) = aqq + t * apq;
        a.at(p, q) = a.at(q, p) = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
          const double vip = v.at(i, p), viq = v.at(i, q);
          v.at(i, p) = c * vip - s * viq;
          v.at(i, q) = s * vip + c * viq;
        }
      }
    }
  }

  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&a](std::size_t i, std::size_t j) {
    return a.at(i, i) < a.at(j, j);
  });

  EighResult res;
  res.eigenvalues = Tensor({n});
  res.eigenvectors = Tensor({n, n});
  for (std::size_t j = 0; j < n; ++j) {
    res.eigenvalues[j] = a.at(order[j], order[j]);
    for (std::size_t i = 0; i < n; ++i) {
      res.eigenvectors.at(i, j) = v.at(i, order[j]);
    }
  }
  return res;
}

// ---------------------------------------------------------------------------
// Spectral clustering.

Tensor gaussian_affinity(const Tensor &x) {
  if (x.rank() != 2 || x.rows() < 2) {
    throw DimensionError("gaussian_affinity expects [n x d] with n >= 2");
  }
  const std::size_t n = x.rows(), d = x.cols();
  Tensor dist({n, n});
  std::vector<double> nonzero;
  nonzero.reserve(n * (n - 1) / 2);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double dd = std::sqrt(squared_distance(x.row_ptr(i), x.row_ptr(j), d));
      dist.at(i, j) = dist.at(j, i) = dd;
      if (dd > 0.0) nonzero.push_back(dd);
    }
  }
  if (nonzero.empty()) {
    throw NumericError("gaussian_affinity: all points are identical");
  }
  std::sort(nonzero.begin(), nonzero.end());
  const double median = nonzero.size() % 2 == 1
                            ? nonzero[nonzero.size() / 2]
                            : 0.5 * (nonzero[nonzero.size() / 2 - 1] +
                                     nonzero[nonzero.size() / 2]);
  const double inv = 1.0 / (2.0 * median * median);
  Tensor a({n, n});
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      a.at(i, j) = i == j ? 0.0 : std::exp(-dist.at(i, j) * dist.at(i, j) * inv);
    }
  }
  return a;
}

Tensor normalized_laplacian(const Tensor &affinity) {
  if (affinity.rank() != 2 || affinity.rows() != affinity.cols()) {
    throw DimensionError("normalized_laplacian requires a square matrix");
  }
  const std::size_t n = affinity.rows();
  std::vector<double> dinv(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < n; ++j) s += affinity.at(i, j);
    dinv[i] = s > 0.0 ? 1.0 / std::sqrt(s) : 0.0;
  }
  Tensor l({n, n});
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      l.at(i, j) = (i == j ? 1.0 : 0.0) - dinv[i] * affinity.at(i, j) * dinv[j];
    }
  }
  return l;
}

ClusterAssignment spectral(const Tensor &x, std::size_t k, std::uint64_t seed) {
  check_points(x, k, 2);
  const Tensor a = gaussian_affinity(x);
  const Tensor l = normalized_laplacian(a);
  const EighResult eig = eigh(l);

  const std::size_t n = x.rows();
  Tensor embedding({n, k});
  for (std::size_t i = 0; i < n; ++i) {
    double norm = 0.0;
    for (std::size_t j = 0; j < k; ++j) {
      const double v = eig.eigenvectors.at(i, j);
      embedding.at(i, j) = v;
      norm += v * v;
    }
    if (norm > 0.0) {
      const double inv = 1.0 / std::sqrt(norm);
      for (std::size_t j = 0; j < k; ++j) embedding.at(i, j) *= inv;
    }
  }

  ClusterAssignment out = kmeans(embedding, k, derive_seed(seed, 0xebedu));
  out.algorithm = "spectral";
  return out;
}

// ---------------------------------------------------------------------------
// Ward agglomerative clustering (Lance-Williams recurrence).

namespace {

struct WardState {
  std::vector<double> dist;      // flat n x n linkage distances, active rows only
  std::vector<std::size_t> size;
  std::vector<char> active;
  std::size_t n = 0;

  double &d(std::size_t i, std::size_t j) { return dist[i * n + j]; }
  double d(std::size_t i, std::size_t j) const { return dist[i * n + j]; }
};

WardState ward_init(const Tensor &x) {
  WardState st;
  st.n = x.rows();
  st.dist.assign(st.n * st.n, 0.0);
  st.size.assign(st.n, 1);
  st.active.assign(st.n, 1);
  for (std::size_t i = 0; i < st.n; ++i) {
    for (std::size_t j = i + 1; j < st.n; ++j) {
      const double d2 = squared_distance(x.row_ptr(i), x.row_ptr(j), x.cols());
      st.dist[i * st.n + j] = d2;
      st.dist[j * st.n + i] = d2;
    }
  }
  return st;
}

// One merge of the lowest-distance active pair; smallest (i, j) wins ties.
WardMerge ward_step(WardState &st) {
  std::size_t bi = 0, bj = 0;
  double best = kInf;
  for (std::size_t i = 0; i < st.n; ++i) {
    if (!st.active[i]) continue;
    for (std::size_t j = i + 1; j < st.n; ++j) {
      if (!st.active[j]) continue;
      if (st.d(i, j) < best) {
        best = st.d(i, j);
        bi = i;
        bj = j;
      }
    }
  }
  const double nij = static_cast<double>(st.size[bi] + st.size[bj]);
  for (std::size_t t = 0; t < st.n; ++t) {
    if (!st.active[t] || t == bi || t == bj) continue;
    const double nt = static_cast<double>(st.size[t]);
    const double upd = ((static_cast<double>(st.size[bi]) + nt) * st.d(bi, t) +
                        (static_cast<double>(st.size[bj]) + nt) * st.d(bj, t) -
                        nt * st.d(bi, bj)) /
                       (nij + nt);
    st.d(bi, t) = upd;
    st.d(t, bi) = upd;
  }
  st.size[bi] += st.size[bj];
  st.active[bj] = 0;
  return WardMerge{bi, bj, best};
}

}  // namespace

std::vector<WardMerge> ward_dendrogram(const Tensor &x) {
  if (x.rank() != 2 || x.rows() == 0) {
    throw DimensionError("ward_dendrogram expects a non-empty [n x d] matrix");
  }
  WardState st = ward_init(x);
  std::vector<WardMerge> merges;
  merges.reserve(st.n - 1);
  for (std::size_t step = 0; step + 1 < st.n; ++step) merges.push_back(ward_step(st));
  return merges;
}

ClusterAssignment agglomerative(const Tensor &x, std::size_t k) {
  check_points(x, k, 1);
  const std::size_t n = x.rows();
  WardState st = ward_init(x);

  // parent[i] = cluster id that absorbed i (min-index representative).
  std::vector<std::size_t> parent(n);
  for (std::size_t i = 0; i < n; ++i) parent[i] = i;

  ClusterAssignment out;
  out.k = k;
  out.algorithm = "agglomerative";
  for (std::size_t remaining = n; remaining > k; --remaining) {
    const WardMerge m = ward_step(st);
    parent[m.b] = m.a;
    out.merge_heights.push_back(m.height);
  }

  // Resolve each point to its active representative, then compact ids.
  auto find = [&parent](std::size_t i) {
    while (parent[i] != i) i = parent[i];
    return i;
  };
  std::vector<int> rep_label(n, -1);
  int next = 0;
  out.labels.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t r = find(i);
    if (rep_label[r] < 0) rep_label[r] = next++;
    out.labels[i] = rep_label[r];
  }
  return out;
}

}  // namespace dtgvae
