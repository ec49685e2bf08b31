// core/src/graph.cc

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

#include "dtgvae/graph.h"

#include <cmath>
#include <stdexcept>
#include <string>

#include "dtgvae/linalg.h"

namespace dtgvae {

namespace {

// Accumulating matmul kernels for the backward pass. All row-major with
// contiguous inner loops.

// dst += a * b
void add_matmul_nn(Tensor &dst, const Tensor &a, const Tensor &b) {
  const std::size_t m = a.rows(), k = a.cols(), n = b.cols();
  for (std::size_t i = 0; i < m; ++i) {
    double *di = dst.row_ptr(i);
    const double *ai = a.row_ptr(i);
    for (std::size_t p = 0; p < k; ++p) {
      const double aip = ai[p];
      const double *bp = b.row_ptr(p);
      for (std::size_t j = 0; j < n; ++j) di[j] += aip * bp[j];
    }
  }
}

// dst += a * b^T
void add_matmul_nt(Tensor &dst, const Tensor &a, const Tensor &b) {
  const std::size_t m = a.rows(), k = a.cols(), n = b.rows();
  for (std::size_t i = 0; i < m; ++i) {
    double *di = dst.row_ptr(i);
    const double *ai = a.row_ptr(i);
    for (std::size_t j = 0; j < n; ++j) {
      di[j] += dot(ai, b.row_ptr(j), k);
    }
  }
}

// dst += a^T * b
void add_matmul_tn(Tensor &dst, const Tensor &a, const Tensor &b) {
  const std::size_t m = a.cols(), k = a.rows(), n = b.cols();
  for (std::size_t p = 0; p < k; ++p) {
    const double *ap = a.row_ptr(p);
    const double *bp = b.row_ptr(p);
    for (std::size_t i = 0; i < m; ++i) {
      const double api = ap[i];
      double *di = dst.row_ptr(i);
      for (std::size_t j = 0; j < n; ++j) di[j] += api * bp[j];
    }
  }
}

}  // namespace

void Graph::check_finite(const Tensor &t, const char *op) const {
  if (!t.all_finite()) {
    throw NumericError(std::string("non-finite value produced by op '") + op +
                       "'");
  }
}

NodeId Graph::push(Node node) {
  nodes_.push_back(std::move(node));
  return nodes_.size() - 1;
}

NodeId Graph::leaf(Tensor value, bool requires_grad) {
  check_finite(value, "leaf");
  Node n;
  n.kind = OpKind::kLeaf;
  n.value = std::move(value);
  n.needs_grad = requires_grad;
  return push(std::move(n));
}

NodeId Graph::binary_ew(OpKind kind, NodeId a, NodeId b) {
  const Tensor &va = nodes_[a].value;
  const Tensor &vb = nodes_[b].value;
  const bool sa = va.is_scalar(), sb = vb.is_scalar();
  if (!va.same_shape(vb) && !sa && !sb) {
    throw DimensionError("elementwise op shape mismatch");
  }
  const Tensor &shape_src = sa ? vb : va;
  Tensor out(shape_src.shape());
  const std::size_t n = out.size();
  const double *pa = va.data();
  const double *pb = vb.data();
  double *po = out.data();
  switch (kind) {
    case OpKind::kAdd:
      for (std::size_t i = 0; i < n; ++i) po[i] = pa[sa ? 0 : i] + pb[sb ? 0 : i];
      break;
    case OpKind::kSub:
      for (std::size_t i = 0; i < n; ++i) po[i] = pa[sa ? 0 : i] - pb[sb ? 0 : i];
      break;
    case OpKind::kMul:
      for (std::size_t i = 0; i < n; ++i) po[i] = pa[sa ? 0 : i] * pb[sb ? 0 : i];
      break;
    default:
      throw std::logic_error("binary_ew: bad kind");
  }
  check_finite(out, kind == OpKind::kAdd ? "add" : kind == OpKind::kSub ? "sub" : "mul");
  Node node;
  node.kind = kind;
  node.inputs = {a, b};
  node.value = std::move(out);
  node.needs_grad = nodes_[a].needs_grad || nodes_[b].needs_grad;
  return push(std::move(node));
}

NodeId Graph::add(NodeId a, NodeId b) { return binary_ew(OpKind::kAdd, a, b); }
NodeId Graph::sub(NodeId a, NodeId b) { return binary_ew(OpKind::kSub, a, b); }
NodeId Graph::mul(NodeId a, NodeId b) { return binary_ew(OpKind::kMul, a, b); }

NodeId Graph::unary_ew(OpKind kind, NodeId a, double c) {
  const Tensor &va = nodes_[a].value;
  Tensor out(va.shape());
  const std::size_t n = out.size();
  const double *pa = va.data();
  double *po = out.data();
  const char *name = "unary";
  switch (kind) {
    case OpKind::kRelu:
      name = "relu";
      for (std::size_t i = 0; i < n; ++i) po[i] = pa[i] > 0.0 ? pa[i] : 0.0;
      break;
    case OpKind::kExp:
      name = "exp";
      for (std::size_t i = 0; i < n; ++i) po[i] = std::exp(pa[i]);
      break;
    case OpKind::kLog:
      name = "log";
      for (std::size_t i = 0; i < n; ++i) {
        if (!(pa[i] > 0.0)) {
          throw NumericError("log of non-positive value");
        }
        po[i] = std::log(pa[i]);
      }
      break;
    case OpKind::kAbs:
      name = "abs";
      for (std::size_t i = 0; i < n; ++i) po[i] = std::fabs(pa[i]);
      break;
    case OpKind::kSquare:
      name = "square";
      for (std::size_t i = 0; i < n; ++i) po[i] = pa[i] * pa[i];
      break;
    case OpKind::kScale:
      name = "scale";
      for (std::size_t i = 0; i < n; ++i) po[i] = c * pa[i];
      break;
    case OpKind::kShift:
      name = "shift";
      for (std::size_t i = 0; i < n; ++i) po[i] = pa[i] + c;
      break;
    default:
      throw std::logic_error("unary_ew: bad kind");
  }
  check_finite(out, name);
  Node node;
  node.kind = kind;
  node.inputs = {a};
  node.value = std::move(out);
  node.needs_grad = nodes_[a].needs_grad;
  node.c = c;
  return push(std::move(node));
}

NodeId Graph::relu(NodeId a) { return unary_ew(OpKind::kRelu, a); }
NodeId Graph::exp(NodeId a) { return unary_ew(OpKind::kExp, a); }
NodeId Graph::log(NodeId a) { return unary_ew(OpKind::kLog, a); }
NodeId Graph::abs(NodeId a) { return unary_ew(OpKind::kAbs, a); }
NodeId Graph::square(NodeId a) { return unary_ew(OpKind::kSquare, a); }
NodeId Graph::scale(NodeId a, double c) { return unary_ew(OpKind::kScale, a, c); }
NodeId Graph::shift(NodeId a, double c) { return unary_ew(OpKind::kShift, a, c); }

NodeId Graph::matmul(NodeId a, NodeId b) {
  Tensor out = matmul_value(nodes_[a].value, nodes_[b].value);
  check_finite(out, "matmul");
  Node node;
  node.kind = OpKind::kMatMul;
  node.inputs = {a, b};
  node.value = std::move(out);
  node.needs_grad = nodes_[a].needs_grad || nodes_[b].needs_grad;
  return push(std::move(node));
}

NodeId Graph::transpose(NodeId a) {
  Tensor out = transpose_value(nodes_[a].value);
  Node node;
  node.kind = OpKind::kTranspose;
  node.inputs = {a};
  node.value = std::move(out);
  node.needs_grad = nodes_[a].needs_grad;
  return push(std::move(node));
}

NodeId Graph::add_rowvec(NodeId m, NodeId v) {
  const Tensor &vm = nodes_[m].value;
  const Tensor &vv = nodes_[v].value;
  if (vm.rank() != 2 || vv.rank() != 1 || vm.cols() != vv.cols()) {
    throw DimensionError("add_rowvec expects [r x c] matrix and [c] vector");
  }
  Tensor out(vm.shape());
  for (std::size_t i = 0; i < vm.rows(); ++i) {
    const double *src = vm.row_ptr(i);
    double *dst = out.row_ptr(i);
    const double *pv = vv.data();
    for (std::size_t j = 0; j < vm.cols(); ++j) dst[j] = src[j] + pv[j];
  }
  check_finite(out, "add_rowvec");
  Node node;
  node.kind = OpKind::kAddRowVec;
  node.inputs = {m, v};
  node.value = std::move(out);
  node.needs_grad = nodes_[m].needs_grad || nodes_[v].needs_grad;
  return push(std::move(node));
}

NodeId Graph::concat_cols(NodeId a, NodeId b) {
  const Tensor &va = nodes_[a].value;
  const Tensor &vb = nodes_[b].value;
  if (va.rank() != 2 || vb.rank() != 2 || va.rows() != vb.rows()) {
    throw DimensionError("concat_cols expects rank-2 tensors with equal rows");
  }
  Tensor out({va.rows(), va.cols() + vb.cols()});
  for (std::size_t i = 0; i < va.rows(); ++i) {
    double *dst = out.row_ptr(i);
    const double *pa = va.row_ptr(i);
    const double *pb = vb.row_ptr(i);
    for (std::size_t j = 0; j < va.cols(); ++j) dst[j] = pa[j];
    for (std::size_t j = 0; j < vb.cols(); ++j) dst[va.cols() + j] = pb[j];
  }
  Node node;
  node.kind = OpKind::kConcatCols;
  node.inputs = {a, b};
  node.value = std::move(out);
  node.needs_grad = nodes_[a].needs_grad || nodes_[b].needs_grad;
  return push(std::move(node));
}

NodeId Graph::reduce(OpKind kind, NodeId a, int axis) {
  const Tensor &va = nodes_[a].value;
  Tensor out;
  if (axis < 0) {
    double s = 0.0;
    for (double v : va.values()) s += v;
    if (kind == OpKind::kReduceMean) s /= static_cast<double>(va.size());
    out = Tensor::scalar(s);
  } else {
    if (static_cast<std::size_t>(axis) >= va.rank()) {
      throw DimensionError("reduce: axis " + std::to_string(axis) +
                           " out of range for rank " + std::to_string(va.rank()));
    }
    if (va.rank() == 1) {
      return reduce(kind, a, -1);  // axis 0 of a vector is the full reduction
    }
    const std::size_t r = va.rows(), c = va.cols();
    if (axis == 0) {
      out = Tensor({c});
      for (std::size_t i = 0; i < r; ++i) {
        const double *pi = va.row_ptr(i);
        for (std::size_t j = 0; j < c; ++j) out[j] += pi[j];
      }
      if (kind == OpKind::kReduceMean) {
        for (std::size_t j = 0; j < c; ++j) out[j] /= static_cast<double>(r);
      }
    } else {
      out = Tensor({r});
      for (std::size_t i = 0; i < r; ++i) {
        const double *pi = va.row_ptr(i);
        double s = 0.0;
        for (std::size_t j = 0; j < c; ++j) s += pi[j];
        out[i] = kind == OpKind::kReduceMean ? s / static_cast<double>(c) : s;
      }
    }
  }
  check_finite(out, kind == OpKind::kReduceSum ? "reduce_sum" : "reduce_mean");
  Node node;
  node.kind = kind;
  node.inputs = {a};
  node.value = std::move(out);
  node.needs_grad = nodes_[a].needs_grad;
  node.axis = axis;
  return push(std::move(node));
}

NodeId Graph::reduce_sum(NodeId a) { return reduce(OpKind::kReduceSum, a, -1); }
NodeId Graph::reduce_mean(NodeId a) { return reduce(OpKind::kReduceMean, a, -1); }
NodeId Graph::reduce_sum(NodeId a, std::size_t axis) {
  return reduce(OpKind::kReduceSum, a, static_cast<int>(axis));
}
NodeId Graph::reduce_mean(NodeId a, std::size_t axis) {
  return reduce(OpKind::kReduceMean, a, static_cast<int>(axis));
}

NodeId Graph::layer_norm(NodeId x, NodeId gain, NodeId shift, double eps) {
  const Tensor &vx = nodes_[x].value;
  const Tensor &vg = nodes_[gain].value;
  const Tensor &vs = nodes_[shift].value;
  if (vx.rank() != 2 || vg.rank() != 1 || vs.rank() != 1 ||
      vg.cols() != vx.cols() || vs.cols() != vx.cols()) {
    throw DimensionError("layer_norm expects x [b x d], gain [d], shift [d]");
  }
  const std::size_t b = vx.rows(), d = vx.cols();
  Tensor out({b, d});
  Tensor xhat({b, d});
  Tensor inv_std({b});
  for (std::size_t i = 0; i < b; ++i) {
    const double *xi = vx.row_ptr(i);
    double mean = 0.0;
    for (std::size_t j = 0; j < d; ++j) mean += xi[j];
    mean /= static_cast<double>(d);
    double var = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
      const double c = xi[j] - mean;
      var += c * c;
    }
    var /= static_cast<double>(d);
    const double is = 1.0 / std::sqrt(var + eps);
    inv_std[i] = is;
    double *xh = xhat.row_ptr(i);
    double *oi = out.row_ptr(i);
    for (std::size_t j = 0; j < d; ++j) {
      xh[j] = (xi[j] - mean) * is;
      oi[j] = vg[j] * xh[j] + vs[j];
    }
  }
  check_finite(out, "layer_norm");
  Node node;
  node.kind = OpKind::kLayerNorm;
  node.inputs = {x, gain, shift};
  node.value = std::move(out);
  node.needs_grad = nodes_[x].needs_grad || nodes_[gain].needs_grad ||
                    nodes_[shift].needs_grad;
  node.c = eps;
  node.aux = std::move(xhat);
  node.aux2 = std::move(inv_std);
  return push(std::move(node));
}

NodeId Graph::cross_entropy(NodeId logits, std::vector<int> labels) {
  const Tensor &vl = nodes_[logits].value;
  if (vl.rank() != 2) throw DimensionError("cross_entropy expects rank-2 logits");
  const std::size_t b = vl.rows(), c = vl.cols();
  if (labels.size() != b) {
    throw DimensionError("cross_entropy: label count does not match batch");
  }
  for (int y : labels) {
    if (y < 0 || static_cast<std::size_t>(y) >= c) {
      throw DataError("cross_entropy: label " + std::to_string(y) +
                      " out of range [0, " + std::to_string(c) + ")");
    }
  }
  Tensor softmax({b, c});
  double loss = 0.0;
  for (std::size_t i = 0; i < b; ++i) {
    const double *li = vl.row_ptr(i);
    double mx = li[0];
    for (std::size_t j = 1; j < c; ++j) mx = std::max(mx, li[j]);
    double sum = 0.0;
    double *si = softmax.row_ptr(i);
    for (std::size_t j = 0; j < c; ++j) {
      si[j] = std::exp(li[j] - mx);
      sum += si[j];
    }
    for (std::size_t j = 0; j < c; ++j) si[j] /= sum;
    const int y = labels[i];
    loss -= li[y] - mx - std::log(sum);
  }
  loss /= static_cast<double>(b);
  Tensor out = Tensor::scalar(loss);
  check_finite(out, "cross_entropy");
  Node node;
  node.kind = OpKind::kCrossEntropy;
  node.inputs = {logits};
  node.value = std::move(out);
  node.needs_grad = nodes_[logits].needs_grad;
  node.labels = std::move(labels);
  node.aux = std::move(softmax);
  return push(std::move(node));
}

NodeId Graph::logdet_psd(NodeId m) {
  const Tensor &vm = nodes_[m].value;
  if (vm.rank() != 2 || vm.rows() != vm.cols()) {
    throw DimensionError("logdet_psd requires a square matrix");
  }
  // Symmetrize first so the op is a function of (M + M^T) / 2: exact for
  // symmetric inputs, and it makes the gradient rule M^-1 the true
  // derivative with respect to every individual entry.
  Tensor sym({vm.rows(), vm.cols()});
  for (std::size_t i = 0; i < vm.rows(); ++i) {
    for (std::size_t j = 0; j < vm.cols(); ++j) {
      sym.at(i, j) = 0.5 * (vm.at(i, j) + vm.at(j, i));
    }
  }
  Tensor l = cholesky(sym);  // NumericError on non-PD input
  double s = 0.0;
  for (std::size_t i = 0; i < l.rows(); ++i) s += std::log(l.at(i, i));
  Tensor out = Tensor::scalar(2.0 * s);
  check_finite(out, "logdet_psd");
  Node node;
  node.kind = OpKind::kLogDetPsd;
  node.inputs = {m};
  node.value = std::move(out);
  node.needs_grad = nodes_[m].needs_grad;
  node.aux = std::move(l);
  return push(std::move(node));
}

Tensor &Graph::ensure_grad(NodeId id) {
  Node &n = nodes_[id];
  if (n.grad.empty()) n.grad = Tensor::zeros(n.value.shape());
  return n.grad;
}

const Tensor &Graph::grad(NodeId id) const {
  const Node &n = nodes_[id];
  if (n.grad.empty()) {
    throw std::logic_error("gradient not materialized for node " +
                           std::to_string(id) + "; call backward() first");
  }
  return n.grad;
}

void Graph::backward(NodeId root) {
  if (root >= nodes_.size()) throw std::logic_error("backward: bad root id");
  if (!nodes_[root].value.is_scalar()) {
    throw DimensionError("backward requires a scalar-valued root");
  }

  // Reset any previous pass and give every leaf an exact zero gradient, so
  // leaves the root does not depend on report zeros rather than garbage.
  for (Node &n : nodes_) {
    n.grad = Tensor();
    if (n.kind == OpKind::kLeaf) n.grad = Tensor::zeros(n.value.shape());
  }

  // Mark the subgraph the root actually depends on.
  std::vector<char> reachable(nodes_.size(), 0);
  std::vector<NodeId> stack = {root};
  reachable[root] = 1;
  while (!stack.empty()) {
    const NodeId id = stack.back();
    stack.pop_back();
    for (NodeId in : nodes_[id].inputs) {
      if (!reachable[in]) {
        reachable[in] = 1;
        stack.push_back(in);
      }
    }
  }

  ensure_grad(root)[0] = 1.0;

  // Creation order is topological, so one reverse scan visits every node
  // after all of its consumers.
  for (NodeId id = root + 1; id-- > 0;) {
    if (!reachable[id] || !nodes_[id].needs_grad) continue;
    if (nodes_[id].grad.empty()) continue;  // reachable but grad-free path
    backprop_node(id);
  }
}

void Graph::backprop_node(NodeId id) {
  Node &n = nodes_[id];
  const Tensor &g = n.grad;
  switch (n.kind) {
    case OpKind::kLeaf:
      break;
    case OpKind::kAdd:
    case OpKind::kSub: {
      const double sgn = n.kind == OpKind::kSub ? -1.0 : 1.0;
      for (int side = 0; side < 2; ++side) {
        Node &in = nodes_[n.inputs[side]];
        if (!in.needs_grad) continue;
        Tensor &gi = ensure_grad(n.inputs[side]);
        const double f = side == 1 ? sgn : 1.0;
        if (in.value.is_scalar() && !g.is_scalar()) {
          double s = 0.0;
          for (double v : g.values()) s += v;
          gi[0] += f * s;
        } else {
          for (std::size_t i = 0; i < g.size(); ++i) gi[i] += f * g[i];
        }
      }
      break;
    }
    case OpKind::kMul: {
      for (int side = 0; side < 2; ++side) {
        Node &in = nodes_[n.inputs[side]];
        if (!in.needs_grad) continue;
        const Tensor &other = nodes_[n.inputs[1 - side]].value;
        const bool so = other.is_scalar();
        Tensor &gi = ensure_grad(n.inputs[side]);
        if (in.value.is_scalar() && !g.is_scalar()) {
          double s = 0.0;
          for (std::size_t i = 0; i < g.size(); ++i) s += g[i] * other[so ? 0 : i];
          gi[0] += s;
        } else {
          for (std::size_t i = 0; i < g.size(); ++i) gi[i] += g[i] * other[so ? 0 : i];
        }
      }
      break;
    }
    case OpKind::kRelu: {
      const Tensor &x = nodes_[n.inputs[0]].value;
      Tensor &gi = ensure_grad(n.inputs[0]);
      for (std::size_t i = 0; i < g.size(); ++i) {
        if (x[i] > 0.0) gi[i] += g[i];
      }
      break;
    }
    case OpKind::kExp: {
      Tensor &gi = ensure_grad(n.inputs[0]);
      for (std::size_t i = 0; i < g.size(); ++i) gi[i] += g[i] * n.value[i];
      break;
    }
    case OpKind::kLog: {
      const Tensor &x = nodes_[n.inputs[0]].value;
      Tensor &gi = ensure_grad(n.inputs[0]);
      for (std::size_t i = 0; i < g.size(); ++i) gi[i] += g[i] / x[i];
      break;
    }
    case OpKind::kAbs: {
      const Tensor &x = nodes_[n.inputs[0]].value;
      Tensor &gi = ensure_grad(n.inputs[0]);
      for (std::size_t i = 0; i < g.size(); ++i) {
        if (x[i] > 0.0) gi[i] += g[i];
        else if (x[i] < 0.0) gi[i] -= g[i];
      }
      break;
    }
    case OpKind::kSquare: {
      const Tensor &x = nodes_[n.inputs[0]].value;
      Tensor &gi = ensure_grad(n.inputs[0]);
      for (std::size_t i = 0; i < g.size(); ++i) gi[i] += 2.0 * x[i] * g[i];
      break;
    }
    case OpKind::kScale: {
      Tensor &gi = ensure_grad(n.inputs[0]);
      for (std::size_t i = 0; i < g.size(); ++i) gi[i] += n.c * g[i];
      break;
    }
    case OpKind::kShift: {
      Tensor &gi = ensure_grad(n.inputs[0]);
      for (std::size_t i = 0; i < g.size(); ++i) gi[i] += g[i];
      break;
    }
    case OpKind::kMatMul: {
      const Tensor &a = nodes_[n.inputs[0]].value;
      const Tensor &b = nodes_[n.inputs[1]].value;
      if (nodes_[n.inputs[0]].needs_grad) {
        add_matmul_nt(ensure_grad(n.inputs[0]), g, b);  // dA = g * B^T
      }
      if (nodes_[n.inputs[1]].needs_grad) {
        add_matmul_tn(ensure_grad(n.inputs[1]), a, g);  // dB = A^T * g
      }
      break;
    }
    case OpKind::kTranspose: {
      Tensor &gi = ensure_grad(n.inputs[0]);
      const std::size_t r = n.value.rows(), c = n.value.cols();
      for (std::size_t i = 0; i < r; ++i) {
        for (std::size_t j = 0; j < c; ++j) gi.at(j, i) += g.at(i, j);
      }
      break;
    }
    case OpKind::kAddRowVec: {
      if (nodes_[n.inputs[0]].needs_grad) {
        Tensor &gm = ensure_grad(n.inputs[0]);
        for (std::size_t i = 0; i < g.size(); ++i) gm[i] += g[i];
      }
      if (nodes_[n.inputs[1]].needs_grad) {
        Tensor &gv = ensure_grad(n.inputs[1]);
        for (std::size_t i = 0; i < g.rows(); ++i) {
          const double *gi = g.row_ptr(i);
          for (std::size_t j = 0; j < g.cols(); ++j) gv[j] += gi[j];
        }
      }
      break;
    }
    case OpKind::kConcatCols: {
      const std::size_t ca = nodes_[n.inputs[0]].value.cols();
      const std::size_t cb = nodes_[n.inputs[1]].value.cols();
      for (int side = 0; side < 2; ++side) {
        if (!nodes_[n.inputs[side]].needs_grad) continue;
        Tensor &gi = ensure_grad(n.inputs[side]);
        const std::size_t off = side == 0 ? 0 : ca;
        const std::size_t w = side == 0 ? ca : cb;
        for (std::size_t i = 0; i < g.rows(); ++i) {
          const double *gr = g.row_ptr(i) + off;
          double *dr = gi.row_ptr(i);
          for (std::size_t j = 0; j < w; ++j) dr[j] += gr[j];
        }
      }
      break;
    }
    case OpKind::kReduceSum:
    case OpKind::kReduceMean: {
      const Tensor &x = nodes_[n.inputs[0]].value;
      Tensor &gi = ensure_grad(n.inputs[0]);
      const bool mean = n.kind == OpKind::kReduceMean;
      if (n.axis < 0) {
        const double f = g[0] * (mean ? 1.0 / static_cast<double>(x.size()) : 1.0);
        for (std::size_t i = 0; i < gi.size(); ++i) gi[i] += f;
      } else if (n.axis == 0) {
        const double f = mean ? 1.0 / static_cast<double>(x.rows()) : 1.0;
        for (std::size_t i = 0; i < x.rows(); ++i) {
          double *gr = gi.row_ptr(i);
          for (std::size_t j = 0; j < x.cols(); ++j) gr[j] += f * g[j];
        }
      } else {
        const double f = mean ? 1.0 / static_cast<double>(x.cols()) : 1.0;
        for (std::size_t i = 0; i < x.rows(); ++i) {
          double *gr = gi.row_ptr(i);
          const double gf = f * g[i];
          for (std::size_t j = 0; j < x.cols(); ++j) gr[j] += gf;
        }
      }
      break;
    }
    case OpKind::kLayerNorm: {
      const Tensor &xhat = n.aux;
      const Tensor &inv_std = n.aux2;
      const Tensor &vg = nodes_[n.inputs[1]].value;
      const std::size_t b = xhat.rows(), d = xhat.cols();
      const bool need_x = nodes_[n.inputs[0]].needs_grad;
      const bool need_gain = nodes_[n.inputs[1]].needs_grad;
      const bool need_shift = nodes_[n.inputs[2]].needs_grad;
      Tensor *gx = need_x ? &ensure_grad(n.inputs[0]) : nullptr;
      Tensor *gg = need_gain ? &ensure_grad(n.inputs[1]) : nullptr;
      Tensor *gs = need_shift ? &ensure_grad(n.inputs[2]) : nullptr;
      std::vector<double> dxhat(d);
      for (std::size_t i = 0; i < b; ++i) {
        const double *gr = g.row_ptr(i);
        const double *xh = xhat.row_ptr(i);
        if (gg || gs) {
          for (std::size_t j = 0; j < d; ++j) {
            if (gg) (*gg)[j] += gr[j] * xh[j];
            if (gs) (*gs)[j] += gr[j];
          }
        }
        if (gx) {
          double m1 = 0.0, m2 = 0.0;
          for (std::size_t j = 0; j < d; ++j) {
            dxhat[j] = gr[j] * vg[j];
            m1 += dxhat[j];
            m2 += dxhat[j] * xh[j];
          }
          m1 /= static_cast<double>(d);
          m2 /= static_cast<double>(d);
          double *gxr = gx->row_ptr(i);
          for (std::size_t j = 0; j < d; ++j) {
            gxr[j] += inv_std[i] * (dxhat[j] - m1 - xh[j] * m2);
          }
        }
      }
      break;
    }
    case OpKind::kCrossEntropy: {
      const Tensor &softmax = n.aux;
      Tensor &gi = ensure_grad(n.inputs[0]);
      const std::size_t b = softmax.rows(), c = softmax.cols();
      const double f = g[0] / static_cast<double>(b);
      for (std::size_t i = 0; i < b; ++i) {
        const double *si = softmax.row_ptr(i);
        double *gr = gi.row_ptr(i);
        for (std::size_t j = 0; j < c; ++j) gr[j] += f * si[j];
        gr[n.labels[i]] -= f;
      }
      break;
    }
    case OpKind::kLogDetPsd: {
      // d logdet(M) = M^-1 for symmetric M; reuse the cached factor.
      const Tensor inv = spd_inverse_from_cholesky(n.aux);
      Tensor &gi = ensure_grad(n.inputs[0]);
      const double f = g[0];
      for (std::size_t i = 0; i < inv.size(); ++i) gi[i] += f * inv[i];
      break;
    }
  }
}

}  // namespace dtgvae
