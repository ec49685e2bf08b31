// dtgvae/graph.h

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

#ifndef DTGVAE_GRAPH_H_
#define DTGVAE_GRAPH_H_

#include <cstddef>
#include <deque>
#include <vector>

#include "dtgvae/tensor.h"

namespace dtgvae {

/// Operation kinds recorded on graph nodes.
enum class OpKind {
  kLeaf,
  kAdd,
  kSub,
  kMul,
  kRelu,
  kExp,
  kLog,
  kAbs,
  kSquare,
  kScale,       // c * x
  kShift,       // x + c
  kMatMul,
  kTranspose,
  kAddRowVec,   // [r x c] matrix + [c] row vector, broadcast over rows
  kConcatCols,
  kReduceSum,   // axis = -1 means all elements
  kReduceMean,
  kLayerNorm,   // fused per-row normalization with affine gain/shift
  kCrossEntropy,  // fused stable log-softmax + mean NLL against int labels
  kLogDetPsd,   // log(det(m)) for SPD m via Cholesky
};

using NodeId = std::size_t;

/// Dynamic reverse-mode tape. Nodes are appended in creation order, which is
/// by construction a topological order (an op's inputs always exist before
/// it). A graph is built per batch, used for one forward/backward pass, and
/// discarded.
///
/// Every op validates shapes up front (DimensionError) and checks its result
/// for NaN/Inf (NumericError), so non-finite values never propagate silently.
///
/// Not thread-safe; one graph belongs to one thread.
class Graph {
 public:
  /// Adds an input node. If requires_grad is set, backward() accumulates a
  /// gradient for it (parameters); otherwise it is a constant (data, noise).
  NodeId leaf(Tensor value, bool requires_grad = false);
  NodeId constant(Tensor value) { return leaf(std::move(value), false); }

  // Elementwise binary ops. Operands must have equal shapes, or one side
  // must be a scalar (size-1 tensor) broadcast against the other.
  NodeId add(NodeId a, NodeId b);
  NodeId sub(NodeId a, NodeId b);
  NodeId mul(NodeId a, NodeId b);

  // Elementwise unary ops. relu's subgradient at exactly 0 is 0, as is
  // abs's. log throws NumericError on non-positive inputs.
  NodeId relu(NodeId a);
  NodeId exp(NodeId a);
  NodeId log(NodeId a);
  NodeId abs(NodeId a);
  NodeId square(NodeId a);
  NodeId scale(NodeId a, double c);
  NodeId shift(NodeId a, double c);

  NodeId matmul(NodeId a, NodeId b);
  NodeId transpose(NodeId a);
  NodeId add_rowvec(NodeId m, NodeId v);
  NodeId concat_cols(NodeId a, NodeId b);

  /// Reduction over all elements (scalar result).
  NodeId reduce_sum(NodeId a);
  NodeId reduce_mean(NodeId a);
  /// Reduction along one axis of a rank-2 tensor (rank-1 result), or axis 0
  /// of a rank-1 tensor (scalar result).
  NodeId reduce_sum(NodeId a, std::size_t axis);
  NodeId reduce_mean(NodeId a, std::size_t axis);

  /// Per-row (x - mean) / sqrt(var + eps), then gain * . + shift.
  /// x is [batch x d]; gain and shift are [d].
  NodeId layer_norm(NodeId x, NodeId gain, NodeId shift, double eps);

  /// Mean cross-entropy of logits [batch x classes] against integer labels,
  /// computed through a max-subtracted log-softmax so large logits cannot
  /// overflow. Labels are fixed data, not differentiated.
  NodeId cross_entropy(NodeId logits, std::vector<int> labels);

  /// log(det(m)) for a symmetric positive definite matrix (caller applies
  /// any ridge). Gradient is m^-1. Cholesky failure raises NumericError,
  /// distinct from the DimensionError raised for a non-square input.
  NodeId logdet_psd(NodeId m);

  /// Reverse accumulation from a scalar-valued root. Visits each reachable
  /// node exactly once; leaves the root does not depend on receive an exact
  /// zero gradient.
  void backward(NodeId root);

  const Tensor &value(NodeId id) const { return nodes_[id].value; }
  /// Valid after backward() for leaves and for any node backward() visited.
  const Tensor &grad(NodeId id) const;

  std::size_t num_nodes() const { return nodes_.size(); }
  OpKind kind(NodeId id) const { return nodes_[id].kind; }

 private:
  struct Node {
    OpKind kind;
    std::vector<NodeId> inputs;
    Tensor value;
    Tensor grad;  // empty until backward() materializes it
    bool needs_grad = false;
    double c = 0.0;           // scale/shift constant, layer_norm epsilon
    int axis = -1;            // reductions; -1 = all elements
    std::vector<int> labels;  // cross-entropy targets
    Tensor aux;               // op-specific cache (softmax, x_hat, Cholesky L)
    Tensor aux2;              // layer_norm inverse stddev per row
  };

  NodeId push(Node node);
  NodeId binary_ew(OpKind kind, NodeId a, NodeId b);
  NodeId unary_ew(OpKind kind, NodeId a, double c = 0.0);
  NodeId reduce(OpKind kind, NodeId a, int axis);
  Tensor &ensure_grad(NodeId id);
  void backprop_node(NodeId id);
  void check_finite(const Tensor &t, const char *op) const;

  // Deque keeps value()/grad() references stable while new ops are appended.
  std::deque<Node> nodes_;
};

}  // namespace dtgvae

#endif  // DTGVAE_GRAPH_H_
