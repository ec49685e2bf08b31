// benchmarks/bench_main.cc

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

#include <benchmark/benchmark.h>

#include "dtgvae/cluster.h"
#include "dtgvae/linalg.h"
#include "dtgvae/model.h"
#include "dtgvae/rng.h"

namespace {

using namespace dtgvae;

Tensor random_matrix(std::uint64_t seed, std::size_t r, std::size_t c) {
  Rng rng(seed);
  Tensor t({r, c});
  for (double &v : t.values()) v = rng.normal();
  return t;
}

Tensor random_spd(std::uint64_t seed, std::size_t n) {
  Tensor a = random_matrix(seed, n, n);
  Tensor m({n, n});
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      m.at(i, j) = dot(a.row_ptr(i), a.row_ptr(j), n);
    }
    m.at(i, i) += static_cast<double>(n);
  }
  return m;
}

void BM_matmul(benchmark::State &state) {
  const std::size_t n = static_cast<std::size_t>(state.range(0));
  Tensor a = random_matrix(1, n, n);
  Tensor b = random_matrix(2, n, n);
  for (auto _ : state) {
    benchmark::DoNotOptimize(matmul_value(a, b));
  }
  state.SetItemsProcessed(state.iterations() * 2 * n * n * n);
}
BENCHMARK(BM_matmul)->Arg(64)->Arg(256);

void BM_cholesky_inverse(benchmark::State &state) {
  const std::size_t n = static_cast<std::size_t>(state.range(0));
  Tensor m = random_spd(3, n);
  for (auto _ : state) {
    benchmark::DoNotOptimize(spd_inverse(m));
  }
}
BENCHMARK(BM_cholesky_inverse)->Arg(256)->Arg(512);

void BM_train_batch(benchmark::State &state) {
  ModelDims dims{256, 256, 256, 10, 5};
  DtgVae model(dims, 1);
  Rng rng(2);
  Tensor x = random_matrix(4, 32, 256);
  std::vector<int> ys(32), ye(32);
  for (int i = 0; i < 32; ++i) {
    ys[i] = i % 10;
    ye[i] = i % 5;
  }
  Tensor es = random_matrix(5, 32, 256);
  Tensor ee = random_matrix(6, 32, 256);
  for (auto _ : state) {
    BatchLossGraph blg =
        model.build_loss_graph(x, ys, ye, &es, &ee, LossMask{}, 1.0);
    blg.graph.backward(blg.total);
    benchmark::DoNotOptimize(blg.graph.grad(blg.params[0]));
  }
}
BENCHMARK(BM_train_batch);

void BM_kmeans(benchmark::State &state) {
  Tensor x = random_matrix(7, 500, 64);
  for (auto _ : state) {
    benchmark::DoNotOptimize(kmeans(x, 10, 1));
  }
}
BENCHMARK(BM_kmeans);

void BM_eigh(benchmark::State &state) {
  const std::size_t n = static_cast<std::size_t>(state.range(0));
  Tensor m = random_spd(8, n);
  for (auto _ : state) {
    benchmark::DoNotOptimize(eigh(m));
  }
}
BENCHMARK(BM_eigh)->Arg(64)->Arg(128);

void BM_ward(benchmark::State &state) {
  Tensor x = random_matrix(9, 300, 16);
  for (auto _ : state) {
    benchmark::DoNotOptimize(agglomerative(x, 10));
  }
}
BENCHMARK(BM_ward);

}  // namespace

BENCHMARK_MAIN();
