// dtgvae/model.h

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

#ifndef DTGVAE_MODEL_H_
#define DTGVAE_MODEL_H_

#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "dtgvae/data.h"
#include "dtgvae/graph.h"
#include "dtgvae/nn.h"
#include "dtgvae/rng.h"

namespace dtgvae {

inline constexpr NodeId kNoNode = static_cast<NodeId>(-1);

enum class EncodeMode { kSample, kMean };

/// Per-sample Gaussian posteriors of both latent branches plus the latent
/// vectors themselves. In kSample mode z = mu + exp(logvar/2) * eps with
/// eps ~ N(0, I); in kMean mode z = mu.
struct LatentPosterior {
  Tensor mu_spk, logvar_spk;  // [batch x latent]
  Tensor mu_emo, logvar_emo;
  Tensor z_spk, z_emo;
};

/// Which loss terms participate in the objective. Masked-off terms are not
/// built into the graph at all, so they contribute exactly zero gradient.
struct LossMask {
  bool rec = true;
  bool kl = true;
  bool mi = true;
  bool spk = true;
  bool emo = true;

  bool any() const { return rec || kl || mi || spk || emo; }
};

/// The five loss terms and their sum. Masked-off terms read 0. kl already
/// includes the beta weight.
struct LossBreakdown {
  double rec = 0.0;
  double kl = 0.0;
  double mi = 0.0;
  double spk = 0.0;
  double emo = 0.0;
  double total = 0.0;
  LossMask mask;
};

struct TrainConfig {
  int epochs = 400;
  double learning_rate = 1e-4;
  std::size_t batch_size = 32;
  std::uint64_t seed = 0;
  double beta = 1.0;  // KL weight; 1.0 is the plain objective
  LossMask mask;
  int patience = 50;
  bool deterministic_eval = true;
  std::size_t hidden_dim = 256;
  std::size_t latent_dim = 256;
};

struct EpochLog {
  int epoch = 0;
  double rec = 0, kl = 0, mi = 0, spk = 0, emo = 0, total = 0;
  double val_spk_acc = 0;
};

struct TrainResult {
  Checkpoint best;
  std::vector<EpochLog> log;
  int best_epoch = 0;
  double best_val_accuracy = 0.0;
};

// Graph-level loss terms, each returning a scalar node.

/// 0.5 * mean(|x - x_hat|) + 0.5 * mean((x - x_hat)^2) over all entries.
NodeId loss_reconstruction_node(Graph &g, NodeId x, NodeId x_hat);

/// KL(q || N(0, I)) for one diagonal-Gaussian branch: mean over the batch of
/// 0.5 * sum_j(mu_j^2 + sigma_j^2 - 1 - log sigma_j^2). Unweighted.
NodeId kl_divergence_node(Graph &g, NodeId mu, NodeId logvar);

/// Gaussian batch estimate of the mutual information between the two latent
/// blocks: 0.5 * (logdet S_a + logdet S_b - logdet S_joint), covariances
/// computed over the batch with ridge*I added. Requires batch >= 4.
NodeId mutual_information_node(Graph &g, NodeId z_a, NodeId z_b,
                               double ridge = 1e-3);

// Value-level wrappers for the same math (no gradients).
double reconstruction_loss(const Tensor &x, const Tensor &x_hat);
double kl_loss(const LatentPosterior &p, double beta);
double mutual_information(const Tensor &z_a, const Tensor &z_b,
                          double ridge = 1e-3);
double cross_entropy_loss(const Tensor &logits, const std::vector<int> &labels);

/// One batch's differentiable objective. params are leaf ids aligned with
/// DtgVae::parameters(); loss ids are kNoNode when the term is masked off.
struct BatchLossGraph {
  Graph graph;
  std::vector<NodeId> params;
  NodeId z_spk = kNoNode, z_emo = kNoNode;
  NodeId rec = kNoNode, kl = kNoNode, mi = kNoNode, spk = kNoNode,
         emo = kNoNode;
  NodeId total = kNoNode;

  LossBreakdown breakdown() const;
};

/// The dual-latent VAE: a shared encoder feeding two Gaussian encoder
/// branches (speaker and emotion, identical architecture), a decoder over the
/// concatenated latents, and one linear classifier head per branch.
///
/// Architecture: E_share is 3 dense+ReLU layers (D -> hidden); each branch is
/// 3 dense+LayerNorm layers (hidden -> hidden) with linear mu / logvar heads
/// (hidden -> latent); the decoder is 2 dense+ReLU layers (2*latent ->
/// hidden) and a final linear layer back to D.
class DtgVae {
 public:
  /// Glorot-uniform weights, zero biases, unit LayerNorm gains; deterministic
  /// per seed.
  DtgVae(const ModelDims &dims, std::uint64_t seed);

  /// Rebuilds a model from a checkpoint; missing names or shape disagreements
  /// raise CheckpointError(kNameShapeMismatch).
  static DtgVae from_checkpoint(const Checkpoint &c);
  Checkpoint to_checkpoint(std::uint32_t epoch, std::uint64_t seed) const;

  const ModelDims &dims() const { return dims_; }

  /// Stable-ordered named view of every trainable tensor.
  std::vector<NamedParam> parameters();
  void visit_parameters(
      const std::function<void(const std::string &, const Tensor &)> &fn) const;

  /// Posterior parameters and latents for a batch. kSample requires an rng.
  LatentPosterior encode(const Tensor &x, EncodeMode mode,
                         Rng *rng = nullptr) const;
  Tensor decode(const Tensor &z_spk, const Tensor &z_emo) const;
  /// Deterministic mu_spk rows for a batch (the cleaned speaker embedding).
  Tensor bottleneck(const Tensor &x) const;
  Tensor speaker_logits(const Tensor &z_spk) const;
  Tensor emotion_logits(const Tensor &z_emo) const;

  /// Builds the full training objective on one batch. Passing null eps
  /// tensors selects mean mode (z = mu); otherwise eps must be
  /// [batch x latent] standard-normal draws.
  BatchLossGraph build_loss_graph(const Tensor &x,
                                  const std::vector<int> &y_spk,
                                  const std::vector<int> &y_emo,
                                  const Tensor *eps_spk, const Tensor *eps_emo,
                                  const LossMask &mask, double beta);

 private:
  struct GraphParams;

  GraphParams register_params(Graph &g, bool requires_grad) const;
  struct EncoderNodes {
    NodeId mu_spk, logvar_spk, mu_emo, logvar_emo, z_spk, z_emo;
  };
  EncoderNodes build_encoder(Graph &g, const GraphParams &p, NodeId x,
                             const Tensor *eps_spk, const Tensor *eps_emo) const;
  NodeId build_decoder(Graph &g, const GraphParams &p, NodeId z_spk,
                       NodeId z_emo) const;

  ModelDims dims_;
  std::array<DenseLayer, 3> share_;
  struct Branch {
    std::array<DenseLayer, 3> layers;
    std::array<LayerNormParams, 3> norms;
    DenseLayer mu_head;
    DenseLayer logvar_head;
  };
  Branch spk_, emo_;
  std::array<DenseLayer, 3> dec_;  // two hidden layers + linear output
  DenseLayer cls_spk_, cls_emo_;
};

/// Full training procedure: shuffled minibatches, Adam, per-epoch validation
/// speaker accuracy (argmax of the speaker classifier on mu_spk), early
/// stopping with best-checkpoint restore. Among epochs with equal validation
/// accuracy the latest one is kept; only strict improvement resets patience.
/// Deterministic per (seed, platform, build).
TrainResult train(const EmbeddingDataset &ds, const SplitPlan &split,
                  const TrainConfig &cfg);
/// Convenience: uses the first split drawn from cfg.seed.
TrainResult train(const EmbeddingDataset &ds, const TrainConfig &cfg);

/// Deterministic mu_spk for every dataset row, order preserved. [N x latent].
Tensor extract_bottleneck(const Checkpoint &ckpt, const EmbeddingDataset &ds);

struct BottleneckLatents {
  Tensor mu_spk;
  Tensor mu_emo;
};
BottleneckLatents extract_latents(const Checkpoint &ckpt,
                                  const EmbeddingDataset &ds);

/// Loss-log CSV with columns epoch,rec,kl,mi,spk,emo,total,val_spk_acc.
void save_loss_log(const std::vector<EpochLog> &log,
                   const std::filesystem::path &path);

}  // namespace dtgvae

#endif  // DTGVAE_MODEL_H_
