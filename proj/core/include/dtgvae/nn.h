// dtgvae/nn.h

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

#ifndef DTGVAE_NN_H_
#define DTGVAE_NN_H_

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "dtgvae/graph.h"
#include "dtgvae/rng.h"
#include "dtgvae/tensor.h"

namespace dtgvae {

/// Fully-connected layer: y = x * weight + bias, weight [in x out], bias [out].
struct DenseLayer {
  Tensor weight;
  Tensor bias;

  std::size_t in_dim() const { return weight.rows(); }
  std::size_t out_dim() const { return weight.cols(); }
};

/// Per-row layer normalization parameters.
struct LayerNormParams {
  Tensor gain;   // [d], initialized to 1
  Tensor shift;  // [d], initialized to 0
  double epsilon = 1e-5;
};

/// x [batch x in] -> [batch x out], differentiable. w/b are graph node ids of
/// the layer parameters.
NodeId dense_forward(Graph &g, NodeId x, NodeId w, NodeId b);

/// Per-row (x - mean) / sqrt(var + eps) followed by gain/shift affine.
NodeId layernorm_forward(Graph &g, NodeId x, NodeId gain, NodeId shift,
                         double eps);

/// Glorot/uniform init: U(-sqrt(6/(fan_in+fan_out)), +sqrt(...)), seeded.
Tensor glorot_uniform(Rng &rng, std::size_t fan_in, std::size_t fan_out);

DenseLayer make_dense(Rng &rng, std::size_t in, std::size_t out);
LayerNormParams make_layernorm(std::size_t d, double epsilon = 1e-5);

/// Named view of one parameter tensor owned by a model.
struct NamedParam {
  std::string name;
  Tensor *tensor;
};

struct AdamConfig {
  double learning_rate = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// Adam with bias correction. Moment tensors mirror parameter shapes; the
/// step counter advances exactly once per step() call.
class Adam {
 public:
  explicit Adam(AdamConfig cfg = {}) : cfg_(cfg) {}

  /// Applies one update. grads[i] must mirror params[i]'s shape; non-finite
  /// gradients raise NumericError before any parameter is touched.
  void step(std::span<const NamedParam> params, std::span<const Tensor> grads);

  std::int64_t steps() const { return t_; }
  const AdamConfig &config() const { return cfg_; }

 private:
  AdamConfig cfg_;
  std::vector<Tensor> m_, v_;
  std::int64_t t_ = 0;
};

/// Architecture hyperparameters carried by every checkpoint.
struct ModelDims {
  std::size_t input_dim = 0;    // D of the embedding vectors
  std::size_t hidden_dim = 256;
  std::size_t latent_dim = 256;
  std::size_t n_speakers = 0;
  std::size_t n_emotions = 0;

  bool operator==(const ModelDims &) const = default;
};

inline constexpr std::uint32_t kCheckpointVersion = 1;

/// Serialized model state. File layout (all integers little-endian):
///   magic "DTGV" | u32 version | u32 x5 dims | u32 epoch | u64 seed |
///   u32 tensor count | per tensor: u32 name len, name bytes, u32 rank,
///   u32 dims[rank], f64 values (raw LE bit patterns).
struct Checkpoint {
  std::uint32_t version = kCheckpointVersion;
  ModelDims dims;
  std::uint32_t epoch = 0;
  std::uint64_t seed = 0;
  std::vector<std::pair<std::string, Tensor>> tensors;

  const Tensor *find(const std::string &name) const;
};

/// Writes atomically (temp file + rename); round trips are bit-exact.
void save_checkpoint(const Checkpoint &c, const std::filesystem::path &path);

/// Throws CheckpointError with a kind distinguishing bad magic, truncation,
/// version mismatch and malformed tensor records.
Checkpoint load_checkpoint(const std::filesystem::path &path);

}  // namespace dtgvae

#endif  // DTGVAE_NN_H_
