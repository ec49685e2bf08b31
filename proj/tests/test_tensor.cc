// tests/test_tensor.cc

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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "dtgvae/graph.h"
#include "dtgvae/linalg.h"
#include "dtgvae/tensor.h"
#include "test_support.h"

using namespace dtgvae;
using dtgvae::test::central_diff;
using dtgvae::test::frobenius;
using dtgvae::test::max_grad_rel_err;
using dtgvae::test::random_spd;
using dtgvae::test::random_tensor;
using dtgvae::test::random_tensor_off_zero;
using dtgvae::test::rel_err;

TEST_CASE("matmul hand cases") {
  Tensor eye = Tensor::identity(2);
  Tensor m = Tensor::matrix({{1, 2}, {3, 4}});
  CHECK(matmul_value(eye, m) == m);

  Tensor a = Tensor::matrix({{1, 2}});
  Tensor b = Tensor::matrix({{3}, {4}});
  Tensor c = matmul_value(a, b);
  CHECK(c.shape() == std::vector<std::size_t>{1, 1});
  CHECK(c[0] == doctest::Approx(11.0));

  CHECK_THROWS_AS(matmul_value(Tensor::matrix({{1, 2}}), Tensor::matrix({{1, 2}})),
                  DimensionError);
}

TEST_CASE("matmul gradient matches central finite differences") {
  Rng rng(7);
  Tensor a = random_tensor(rng, {3, 3}, -1.0, 1.0);
  Tensor b = random_tensor(rng, {3, 3}, -1.0, 1.0);

  auto eval = [&]() {
    Graph g;
    return g.value(g.reduce_sum(g.matmul(g.constant(a), g.constant(b))))[0];
  };
  Graph g;
  NodeId na = g.leaf(a, true);
  NodeId nb = g.leaf(b, true);
  g.backward(g.reduce_sum(g.matmul(na, nb)));

  CHECK(max_grad_rel_err(eval, a, g.grad(na)) < 1e-6);
  CHECK(max_grad_rel_err(eval, b, g.grad(nb)) < 1e-6);
}

TEST_CASE("elementwise ops and their edge cases") {
  Graph g;
  NodeId r = g.relu(g.constant(Tensor::row({-1, 0, 2})));
  CHECK(g.value(r) == Tensor::row({0, 0, 2}));

  NodeId e = g.exp(g.constant(Tensor::row({0})));
  CHECK(g.value(e)[0] == doctest::Approx(1.0));

  // d/dx sum(log x) at x = [2] is 0.5.
  Graph g2;
  NodeId x = g2.leaf(Tensor::row({2}), true);
  g2.backward(g2.reduce_sum(g2.log(x)));
  CHECK(g2.grad(x)[0] == doctest::Approx(0.5));

  Graph g3;
  CHECK_THROWS_AS(g3.log(g3.constant(Tensor::row({-1.0}))), NumericError);
  CHECK_THROWS_AS(g3.log(g3.constant(Tensor::row({0.0}))), NumericError);
  CHECK_THROWS_AS(g3.add(g3.constant(Tensor::row({1, 2})),
                         g3.constant(Tensor::row({1, 2, 3}))),
                  DimensionError);
}

TEST_CASE("scalar broadcast in elementwise ops") {
  Graph g;
  NodeId s = g.leaf(Tensor::scalar(2.0), true);
  NodeId m = g.leaf(Tensor::matrix({{1, 2}, {3, 4}}), true);
  NodeId prod = g.mul(s, m);
  CHECK(g.value(prod) == Tensor::matrix({{2, 4}, {6, 8}}));
  g.backward(g.reduce_sum(prod));
  CHECK(g.grad(s)[0] == doctest::Approx(10.0));  // sum of matrix entries
  CHECK(g.grad(m) == Tensor::matrix({{2, 2}, {2, 2}}));
}

TEST_CASE("reductions") {
  Graph g;
  CHECK(g.value(g.reduce_sum(g.constant(Tensor::row({1, 2, 3}))))[0] ==
        doctest::Approx(6.0));
  NodeId m = g.constant(Tensor::matrix({{1, 2}, {3, 4}}));
  CHECK(g.value(g.reduce_mean(m, 0)) == Tensor::row({2, 3}));
  CHECK(g.value(g.reduce_sum(m, 1)) == Tensor::row({3, 7}));
  CHECK_THROWS_AS(g.reduce_sum(m, 2), DimensionError);

  // Gradient of mean over n elements is 1/n per element.
  Graph g2;
  NodeId x = g2.leaf(Tensor::row({1, 2, 3, 4}), true);
  g2.backward(g2.reduce_mean(x));
  for (std::size_t i = 0; i < 4; ++i) {
    CHECK(g2.grad(x)[i] == doctest::Approx(0.25));
  }
}

TEST_CASE("backward closed forms") {
  // f(x) = x^2 at x = 3 -> gradient 6.
  Graph g;
  NodeId x = g.leaf(Tensor::scalar(3.0), true);
  g.backward(g.square(x));
  CHECK(g.grad(x)[0] == doctest::Approx(6.0));

  // f(x, y) = x * y at (2, 5) -> gradients (5, 2).
  Graph g2;
  NodeId a = g2.leaf(Tensor::scalar(2.0), true);
  NodeId b = g2.leaf(Tensor::scalar(5.0), true);
  g2.backward(g2.mul(a, b));
  CHECK(g2.grad(a)[0] == doctest::Approx(5.0));
  CHECK(g2.grad(b)[0] == doctest::Approx(2.0));
}

TEST_CASE("leaf unreachable from the root gets an exact zero gradient") {
  Graph g;
  NodeId x = g.leaf(Tensor::scalar(2.0), true);
  NodeId unused = g.leaf(Tensor::row({1, 2, 3}), true);
  g.backward(g.square(x));
  CHECK(g.grad(unused) == Tensor::zeros({3}));
}

TEST_CASE("backward rejects a non-scalar root") {
  Graph g;
  NodeId x = g.leaf(Tensor::row({1, 2}), true);
  CHECK_THROWS_AS(g.backward(g.square(x)), DimensionError);
}

TEST_CASE("shared subexpression accumulates once per use") {
  // f(x) = x * x must give 2x even though the same node feeds both sides.
  Graph g;
  NodeId x = g.leaf(Tensor::scalar(4.0), true);
  g.backward(g.mul(x, x));
  CHECK(g.grad(x)[0] == doctest::Approx(8.0));
}

TEST_CASE("logdet_psd values and gradient") {
  Graph g;
  CHECK(g.value(g.logdet_psd(g.constant(Tensor::identity(3))))[0] ==
        doctest::Approx(0.0));
  Tensor d = Tensor::matrix({{2, 0}, {0, 3}});
  CHECK(g.value(g.logdet_psd(g.constant(d)))[0] ==
        doctest::Approx(std::log(6.0)));

  Rng rng(11);
  Tensor m = random_spd(rng, 4);
  auto eval = [&]() {
    Graph gg;
    return gg.value(gg.logdet_psd(gg.constant(m)))[0];
  };
  Graph g2;
  NodeId nm = g2.leaf(m, true);
  g2.backward(g2.logdet_psd(nm));
  CHECK(max_grad_rel_err(eval, m, g2.grad(nm)) < 1e-5);

  Tensor neg = Tensor::matrix({{1, 0}, {0, -1}});
  CHECK_THROWS_AS(g.logdet_psd(g.constant(neg)), NumericError);
  CHECK_THROWS_AS(g.logdet_psd(g.constant(Tensor::matrix({{1, 2, 3}, {4, 5, 6}}))),
                  DimensionError);
}

TEST_CASE("random compositions match finite differences at 10 points") {
  for (std::uint64_t trial = 0; trial < 10; ++trial) {
    Rng rng(1000 + trial);
    Tensor a = random_tensor_off_zero(rng, {3, 4});
    Tensor b = random_tensor_off_zero(rng, {4, 3});
    Tensor v = random_tensor_off_zero(rng, {3});
    Tensor c = random_tensor(rng, {3, 3}, 0.5, 1.5);  // log input stays positive

    auto build = [&](Graph &g, NodeId &na, NodeId &nb, NodeId &nv, NodeId &nc) {
      na = g.leaf(a, true);
      nb = g.leaf(b, true);
      nv = g.leaf(v, true);
      nc = g.leaf(c, true);
      NodeId mm = g.add_rowvec(g.matmul(na, nb), nv);
      NodeId mix = g.add(g.relu(mm), g.mul(g.square(mm), g.constant(Tensor::scalar(0.1))));
      NodeId logged = g.log(nc);
      NodeId both = g.add(g.reduce_mean(mix), g.reduce_sum(g.abs(logged)));
      return g.add(both, g.reduce_mean(g.exp(g.scale(nb, 0.3))));
    };
    auto eval = [&]() {
      Graph g;
      NodeId na, nb, nv, nc;
      return g.value(build(g, na, nb, nv, nc))[0];
    };

    Graph g;
    NodeId na, nb, nv, nc;
    g.backward(build(g, na, nb, nv, nc));
    CHECK(max_grad_rel_err(eval, a, g.grad(na)) < 1e-4);
    CHECK(max_grad_rel_err(eval, b, g.grad(nb)) < 1e-4);
    CHECK(max_grad_rel_err(eval, v, g.grad(nv)) < 1e-4);
    CHECK(max_grad_rel_err(eval, c, g.grad(nc)) < 1e-4);
  }
}

TEST_CASE("matmul is associative within 1e-10 on random 5x5 inputs") {
  Rng rng(42);
  for (int trial = 0; trial < 5; ++trial) {
    Tensor a = random_tensor(rng, {5, 5}, -1.0, 1.0);
    Tensor b = random_tensor(rng, {5, 5}, -1.0, 1.0);
    Tensor c = random_tensor(rng, {5, 5}, -1.0, 1.0);
    Tensor left = matmul_value(matmul_value(a, b), c);
    Tensor right = matmul_value(a, matmul_value(b, c));
    Tensor diff({5, 5});
    for (std::size_t i = 0; i < diff.size(); ++i) diff[i] = left[i] - right[i];
    CHECK(frobenius(diff) < 1e-10 * std::max(1.0, frobenius(left)));
  }
}

TEST_CASE("cholesky round trip reconstructs the input") {
  Rng rng(3);
  Tensor m = random_spd(rng, 6);
  Tensor l = cholesky(m);
  Tensor lt = transpose_value(l);
  Tensor back = matmul_value(l, lt);
  Tensor diff({6, 6});
  for (std::size_t i = 0; i < diff.size(); ++i) diff[i] = back[i] - m[i];
  CHECK(frobenius(diff) < 1e-10 * frobenius(m));

  // The SPD inverse actually inverts.
  Tensor inv = spd_inverse(m);
  Tensor prod = matmul_value(m, inv);
  Tensor eye = Tensor::identity(6);
  for (std::size_t i = 0; i < prod.size(); ++i) prod[i] -= eye[i];
  CHECK(frobenius(prod) < 1e-10);
}

TEST_CASE("non-finite results are reported, not propagated") {
  Graph g;
  NodeId big = g.constant(Tensor::row({1e308}));
  CHECK_THROWS_AS(g.exp(big), NumericError);  // overflow to inf
  CHECK_THROWS_AS(g.leaf(Tensor::row({std::nan("")})), NumericError);
}

TEST_CASE("tensor shape/value consistency is enforced") {
  CHECK_THROWS_AS(Tensor::from_values({2, 2}, {1.0, 2.0, 3.0}), DimensionError);
  Tensor t = Tensor::from_values({2, 3}, {1, 2, 3, 4, 5, 6});
  CHECK(t.rows() == 2);
  CHECK(t.cols() == 3);
  CHECK(t.at(1, 2) == doctest::Approx(6.0));
}
