// core/src/model.cc

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

#include "dtgvae/model.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>
#include <unordered_map>

#include "dtgvae/errors.h"

namespace dtgvae {

namespace {

constexpr std::uint64_t kStageInit = 1;
constexpr std::uint64_t kStageShuffle = 2;
constexpr std::uint64_t kStageNoise = 3;

Tensor ridge_eye(std::size_t n, double ridge) {
  Tensor t({n, n});
  for (std::size_t i = 0; i < n; ++i) t.at(i, i) = ridge;
  return t;
}

Tensor draw_normal(Rng &rng, std::size_t rows, std::size_t cols) {
  Tensor t({rows, cols});
  for (double &v : t.values()) v = rng.normal();
  return t;
}

}  // namespace

// ---------------------------------------------------------------------------
// Loss terms.

NodeId loss_reconstruction_node(Graph &g, NodeId x, NodeId x_hat) {
  if (!g.value(x).same_shape(g.value(x_hat))) {
    throw DimensionError("reconstruction loss: x and x_hat shapes differ");
  }
  NodeId diff = g.sub(x, x_hat);
  return g.add(g.scale(g.reduce_mean(g.abs(diff)), 0.5),
               g.scale(g.reduce_mean(g.square(diff)), 0.5));
}

NodeId kl_divergence_node(Graph &g, NodeId mu, NodeId logvar) {
  if (!g.value(mu).same_shape(g.value(logvar))) {
    throw DimensionError("kl divergence: mu and logvar shapes differ");
  }
  // 0.5 * (mu^2 + exp(logvar) - 1 - logvar), summed over latent dims and
  // averaged over the batch.
  NodeId a = g.add(g.square(mu), g.exp(logvar));
  NodeId term = g.sub(a, g.shift(logvar, 1.0));
  NodeId row = g.value(term).rank() == 2 ? g.reduce_sum(term, 1)
                                         : g.reduce_sum(term);
  return g.scale(g.reduce_mean(row), 0.5);
}

NodeId mutual_information_node(Graph &g, NodeId z_a, NodeId z_b, double ridge) {
  if (g.value(z_a).rank() != 2 || g.value(z_b).rank() != 2 ||
      g.value(z_a).rows() != g.value(z_b).rows()) {
    throw DimensionError("mutual information: latents must be rank-2 with equal batch");
  }
  const std::size_t batch = g.value(z_a).rows();
  const std::size_t da = g.value(z_a).cols();
  const std::size_t db = g.value(z_b).cols();
  if (batch < 4) {
    throw NumericError("mutual information estimate needs a batch of >= 4 samples");
  }
  const double norm = 1.0 / static_cast<double>(batch - 1);
  auto centered = [&g](NodeId z) {
    return g.add_rowvec(z, g.scale(g.reduce_mean(z, 0), -1.0));
  };
  auto cov_logdet = [&](NodeId zc, std::size_t d) {
    NodeId s = g.scale(g.matmul(g.transpose(zc), zc), norm);
    return g.logdet_psd(g.add(s, g.constant(ridge_eye(d, ridge))));
  };
  NodeId ca = centered(z_a);
  NodeId cb = centered(z_b);
  NodeId joint = g.concat_cols(ca, cb);
  NodeId ld = g.sub(g.add(cov_logdet(ca, da), cov_logdet(cb, db)),
                    cov_logdet(joint, da + db));
  return g.scale(ld, 0.5);
}

double reconstruction_loss(const Tensor &x, const Tensor &x_hat) {
  Graph g;
  return g.value(loss_reconstruction_node(g, g.constant(x), g.constant(x_hat)))[0];
}

double kl_loss(const LatentPosterior &p, double beta) {
  Graph g;
  NodeId s = kl_divergence_node(g, g.constant(p.mu_spk), g.constant(p.logvar_spk));
  NodeId e = kl_divergence_node(g, g.constant(p.mu_emo), g.constant(p.logvar_emo));
  return g.value(g.scale(g.add(s, e), beta))[0];
}

double mutual_information(const Tensor &z_a, const Tensor &z_b, double ridge) {
  Graph g;
  return g.value(mutual_information_node(g, g.constant(z_a), g.constant(z_b), ridge))[0];
}

double cross_entropy_loss(const Tensor &logits, const std::vector<int> &labels) {
  Graph g;
  return g.value(g.cross_entropy(g.constant(logits), labels))[0];
}

LossBreakdown BatchLossGraph::breakdown() const {
  LossBreakdown b;
  b.mask = LossMask{rec != kNoNode, kl != kNoNode, mi != kNoNode,
                    spk != kNoNode, emo != kNoNode};
  if (rec != kNoNode) b.rec = graph.value(rec)[0];
  if (kl != kNoNode) b.kl = graph.value(kl)[0];
  if (mi != kNoNode) b.mi = graph.value(mi)[0];
  if (spk != kNoNode) b.spk = graph.value(spk)[0];
  if (emo != kNoNode) b.emo = graph.value(emo)[0];
  b.total = graph.value(total)[0];
  return b;
}

// ---------------------------------------------------------------------------
// Model.

struct DtgVae::GraphParams {
  struct D {
    NodeId w = kNoNode, b = kNoNode;
  };
  struct Ln {
    NodeId gain = kNoNode, shift = kNoNode;
  };
  struct Br {
    std::array<D, 3> layers;
    std::array<Ln, 3> norms;
    D mu, logvar;
  };
  std::array<D, 3> share;
  Br spk, emo;
  std::array<D, 3> dec;
  D cls_spk, cls_emo;
  std::vector<NodeId> ordered;
};

DtgVae::DtgVae(const ModelDims &dims, std::uint64_t seed) : dims_(dims) {
  if (dims.input_dim == 0 || dims.hidden_dim == 0 || dims.latent_dim == 0 ||
      dims.n_speakers == 0 || dims.n_emotions == 0) {
    throw DimensionError("model dimensions must all be positive");
  }
  Rng rng(seed);
  const std::size_t d = dims.input_dim, h = dims.hidden_dim, l = dims.latent_dim;
  share_[0] = make_dense(rng, d, h);
  share_[1] = make_dense(rng, h, h);
  share_[2] = make_dense(rng, h, h);
  auto make_branch = [&](Branch &br) {
    for (std::size_t i = 0; i < 3; ++i) {
      br.layers[i] = make_dense(rng, h, h);
      br.norms[i] = make_layernorm(h);
    }
    br.mu_head = make_dense(rng, h, l);
    br.logvar_head = make_dense(rng, h, l);
  };
  make_branch(spk_);
  make_branch(emo_);
  dec_[0] = make_dense(rng, 2 * l, h);
  dec_[1] = make_dense(rng, h, h);
  dec_[2] = make_dense(rng, h, d);
  cls_spk_ = make_dense(rng, l, dims.n_speakers);
  cls_emo_ = make_dense(rng, l, dims.n_emotions);
}

std::vector<NamedParam> DtgVae::parameters() {
  std::vector<NamedParam> out;
  out.reserve(48);
  auto dense = [&out](const std::string &prefix, DenseLayer &layer) {
    out.push_back({prefix + ".w", &layer.weight});
    out.push_back({prefix + ".b", &layer.bias});
  };
  for (std::size_t i = 0; i < 3; ++i) dense("share." + std::to_string(i), share_[i]);
  auto branch = [&](const std::string &prefix, Branch &br) {
    for (std::size_t i = 0; i < 3; ++i) {
      const std::string base = prefix + "." + std::to_string(i);
      dense(base, br.layers[i]);
      out.push_back({base + ".ln.gain", &br.norms[i].gain});
      out.push_back({base + ".ln.shift", &br.norms[i].shift});
    }
    dense(prefix + ".mu", br.mu_head);
    dense(prefix + ".logvar", br.logvar_head);
  };
  branch("spk", spk_);
  branch("emo", emo_);
  dense("dec.0", dec_[0]);
  dense("dec.1", dec_[1]);
  dense("dec.out", dec_[2]);
  dense("cls_spk", cls_spk_);
  dense("cls_emo", cls_emo_);
  return out;
}

void DtgVae::visit_parameters(
    const std::function<void(const std::string &, const Tensor &)> &fn) const {
  auto params = const_cast<DtgVae *>(this)->parameters();
  for (const NamedParam &p : params) fn(p.name, *p.tensor);
}

DtgVae::GraphParams DtgVae::register_params(Graph &g, bool requires_grad) const {
  GraphParams p;
  p.ordered.reserve(48);
  auto reg = [&](const Tensor &t) {
    NodeId id = g.leaf(t, requires_grad);
    p.ordered.push_back(id);
    return id;
  };
  auto dense = [&](const DenseLayer &layer) {
    GraphParams::D d;
    d.w = reg(layer.weight);
    d.b = reg(layer.bias);
    return d;
  };
  for (std::size_t i = 0; i < 3; ++i) p.share[i] = dense(share_[i]);
  auto branch = [&](const Branch &br) {
    GraphParams::Br b;
    for (std::size_t i = 0; i < 3; ++i) {
      b.layers[i] = dense(br.layers[i]);
      b.norms[i].gain = reg(br.norms[i].gain);
      b.norms[i].shift = reg(br.norms[i].shift);
    }
    b.mu = dense(br.mu_head);
    b.logvar = dense(br.logvar_head);
    return b;
  };
  p.spk = branch(spk_);
  p.emo = branch(emo_);
  for (std::size_t i = 0; i < 3; ++i) p.dec[i] = dense(dec_[i]);
  p.cls_spk = dense(cls_spk_);
  p.cls_emo = dense(cls_emo_);
  return p;
}

DtgVae::EncoderNodes DtgVae::build_encoder(Graph &g, const GraphParams &p,
                                           NodeId x, const Tensor *eps_spk,
                                           const Tensor *eps_emo) const {
  NodeId h = x;
  for (std::size_t i = 0; i < 3; ++i) {
    h = g.relu(dense_forward(g, h, p.share[i].w, p.share[i].b));
  }
  auto run_branch = [&](const Branch &br, const GraphParams::Br &ids,
                        const Tensor *eps, NodeId &mu, NodeId &logvar,
                        NodeId &z) {
    NodeId t = h;
    for (std::size_t i = 0; i < 3; ++i) {
      t = dense_forward(g, t, ids.layers[i].w, ids.layers[i].b);
      t = layernorm_forward(g, t, ids.norms[i].gain, ids.norms[i].shift,
                            br.norms[i].epsilon);
    }
    mu = dense_forward(g, t, ids.mu.w, ids.mu.b);
    logvar = dense_forward(g, t, ids.logvar.w, ids.logvar.b);
    if (eps != nullptr) {
      NodeId sigma = g.exp(g.scale(logvar, 0.5));
      z = g.add(mu, g.mul(sigma, g.constant(*eps)));
    } else {
      z = mu;
    }
  };
  EncoderNodes out;
  run_branch(spk_, p.spk, eps_spk, out.mu_spk, out.logvar_spk, out.z_spk);
  run_branch(emo_, p.emo, eps_emo, out.mu_emo, out.logvar_emo, out.z_emo);
  return out;
}

NodeId DtgVae::build_decoder(Graph &g, const GraphParams &p, NodeId z_spk,
                             NodeId z_emo) const {
  NodeId d = g.concat_cols(z_spk, z_emo);
  d = g.relu(dense_forward(g, d, p.dec[0].w, p.dec[0].b));
  d = g.relu(dense_forward(g, d, p.dec[1].w, p.dec[1].b));
  return dense_forward(g, d, p.dec[2].w, p.dec[2].b);
}

LatentPosterior DtgVae::encode(const Tensor &x, EncodeMode mode, Rng *rng) const {
  if (x.rank() != 2 || x.cols() != dims_.input_dim) {
    throw DimensionError("encode: input must be [batch x " +
                         std::to_string(dims_.input_dim) + "]");
  }
  Tensor es, ee;
  const Tensor *ps = nullptr, *pe = nullptr;
  if (mode == EncodeMode::kSample) {
    if (rng == nullptr) {
      throw std::invalid_argument("encode: sampling mode requires an rng");
    }
    es = draw_normal(*rng, x.rows(), dims_.latent_dim);
    ee = draw_normal(*rng, x.rows(), dims_.latent_dim);
    ps = &es;
    pe = &ee;
  }
  Graph g;
  GraphParams p = register_params(g, false);
  EncoderNodes enc = build_encoder(g, p, g.constant(x), ps, pe);
  LatentPosterior out;
  out.mu_spk = g.value(enc.mu_spk);
  out.logvar_spk = g.value(enc.logvar_spk);
  out.mu_emo = g.value(enc.mu_emo);
  out.logvar_emo = g.value(enc.logvar_emo);
  out.z_spk = g.value(enc.z_spk);
  out.z_emo = g.value(enc.z_emo);
  return out;
}

Tensor DtgVae::decode(const Tensor &z_spk, const Tensor &z_emo) const {
  if (z_spk.rank() != 2 || z_emo.rank() != 2 ||
      z_spk.cols() != dims_.latent_dim || z_emo.cols() != dims_.latent_dim ||
      z_spk.rows() != z_emo.rows()) {
    throw DimensionError("decode: latents must be [batch x " +
                         std::to_string(dims_.latent_dim) + "]");
  }
  Graph g;
  GraphParams p = register_params(g, false);
  return g.value(build_decoder(g, p, g.constant(z_spk), g.constant(z_emo)));
}

Tensor DtgVae::bottleneck(const Tensor &x) const {
  return encode(x, EncodeMode::kMean).mu_spk;
}

Tensor DtgVae::speaker_logits(const Tensor &z_spk) const {
  if (z_spk.rank() != 2 || z_spk.cols() != dims_.latent_dim) {
    throw DimensionError("speaker_logits: expected [batch x latent]");
  }
  Graph g;
  NodeId w = g.constant(cls_spk_.weight);
  NodeId b = g.constant(cls_spk_.bias);
  return g.value(dense_forward(g, g.constant(z_spk), w, b));
}

Tensor DtgVae::emotion_logits(const Tensor &z_emo) const {
  if (z_emo.rank() != 2 || z_emo.cols() != dims_.latent_dim) {
    throw DimensionError("emotion_logits: expected [batch x latent]");
  }
  Graph g;
  NodeId w = g.constant(cls_emo_.weight);
  NodeId b = g.constant(cls_emo_.bias);
  return g.value(dense_forward(g, g.constant(z_emo), w, b));
}

BatchLossGraph DtgVae::build_loss_graph(const Tensor &x,
                                        const std::vector<int> &y_spk,
                                        const std::vector<int> &y_emo,
                                        const Tensor *eps_spk,
                                        const Tensor *eps_emo,
                                        const LossMask &mask, double beta) {
  if (x.rank() != 2 || x.cols() != dims_.input_dim) {
    throw DimensionError("loss graph: input must be [batch x " +
                         std::to_string(dims_.input_dim) + "]");
  }
  if (!mask.any()) {
    throw std::invalid_argument("loss graph: at least one loss term must be active");
  }
  if (beta < 0.0) throw std::invalid_argument("loss graph: beta must be >= 0");
  const std::size_t batch = x.rows();
  if ((mask.spk && y_spk.size() != batch) || (mask.emo && y_emo.size() != batch)) {
    throw DimensionError("loss graph: label count does not match batch size");
  }

  BatchLossGraph out;
  Graph &g = out.graph;
  GraphParams p = register_params(g, true);
  out.params = p.ordered;
  NodeId xn = g.constant(x);
  EncoderNodes enc = build_encoder(g, p, xn, eps_spk, eps_emo);
  out.z_spk = enc.z_spk;
  out.z_emo = enc.z_emo;

  std::vector<NodeId> active;
  if (mask.rec) {
    NodeId x_hat = build_decoder(g, p, enc.z_spk, enc.z_emo);
    out.rec = loss_reconstruction_node(g, xn, x_hat);
    active.push_back(out.rec);
  }
  if (mask.kl) {
    NodeId s = kl_divergence_node(g, enc.mu_spk, enc.logvar_spk);
    NodeId e = kl_divergence_node(g, enc.mu_emo, enc.logvar_emo);
    out.kl = g.scale(g.add(s, e), beta);
    active.push_back(out.kl);
  }
  if (mask.mi) {
    out.mi = mutual_information_node(g, enc.z_spk, enc.z_emo);
    active.push_back(out.mi);
  }
  if (mask.spk) {
    NodeId logits = dense_forward(g, enc.z_spk, p.cls_spk.w, p.cls_spk.b);
    out.spk = g.cross_entropy(logits, y_spk);
    active.push_back(out.spk);
  }
  if (mask.emo) {
    NodeId logits = dense_forward(g, enc.z_emo, p.cls_emo.w, p.cls_emo.b);
    out.emo = g.cross_entropy(logits, y_emo);
    active.push_back(out.emo);
  }

  NodeId total = active[0];
  for (std::size_t i = 1; i < active.size(); ++i) total = g.add(total, active[i]);
  out.total = total;
  return out;
}

Checkpoint DtgVae::to_checkpoint(std::uint32_t epoch, std::uint64_t seed) const {
  Checkpoint c;
  c.dims = dims_;
  c.epoch = epoch;
  c.seed = seed;
  visit_parameters([&c](const std::string &name, const Tensor &t) {
    c.tensors.emplace_back(name, t);
  });
  return c;
}

DtgVae DtgVae::from_checkpoint(const Checkpoint &c) {
  DtgVae model(c.dims, 0);
  auto params = model.parameters();
  if (params.size() != c.tensors.size()) {
    throw CheckpointError(CheckpointError::Kind::kNameShapeMismatch,
                          "checkpoint holds " + std::to_string(c.tensors.size()) +
                              " tensors, model expects " +
                              std::to_string(params.size()));
  }
  for (NamedParam &p : params) {
    const Tensor *t = c.find(p.name);
    if (t == nullptr) {
      throw CheckpointError(CheckpointError::Kind::kNameShapeMismatch,
                            "checkpoint is missing tensor '" + p.name + "'");
    }
    if (!t->same_shape(*p.tensor)) {
      throw CheckpointError(CheckpointError::Kind::kNameShapeMismatch,
                            "checkpoint tensor '" + p.name + "' has wrong shape");
    }
    *p.tensor = *t;
  }
  return model;
}

// ---------------------------------------------------------------------------
// Training.

namespace {

double speaker_accuracy(const DtgVae &model, const EmbeddingDataset &ds,
                        std::span<const std::size_t> rows, EncodeMode mode,
                        Rng *rng) {
  if (rows.empty()) return 0.0;
  const std::size_t chunk = 512;
  std::size_t correct = 0;
  for (std::size_t start = 0; start < rows.size(); start += chunk) {
    const std::size_t n = std::min(chunk, rows.size() - start);
    std::span<const std::size_t> part = rows.subspan(start, n);
    Tensor x = gather_rows(ds.features, part);
    LatentPosterior post = model.encode(x, mode, rng);
    Tensor logits = model.speaker_logits(post.z_spk);
    for (std::size_t i = 0; i < n; ++i) {
      const double *row = logits.row_ptr(i);
      std::size_t best = 0;
      for (std::size_t j = 1; j < logits.cols(); ++j) {
        if (row[j] > row[best]) best = j;
      }
      if (static_cast<int>(best) == ds.speakers[part[i]]) ++correct;
    }
  }
  return static_cast<double>(correct) / static_cast<double>(rows.size());
}

}  // namespace

TrainResult train(const EmbeddingDataset &ds, const SplitPlan &split,
                  const TrainConfig &cfg) {
  if (cfg.epochs <= 0 || cfg.batch_size == 0) {
    throw std::invalid_argument("train: epochs and batch size must be positive");
  }
  if (cfg.beta < 0.0) throw std::invalid_argument("train: beta must be >= 0");
  if (!cfg.mask.any()) throw std::invalid_argument("train: empty loss mask");
  if (split.train.empty()) throw DataError("train: empty training split");

  std::set<int> spk_seen, emo_seen;
  for (std::size_t i : split.train) {
    spk_seen.insert(ds.speakers[i]);
    emo_seen.insert(ds.emotions[i]);
  }
  if (spk_seen.size() < 2 || emo_seen.size() < 2) {
    throw DataError("train: degenerate dataset, training split must contain >= 2 "
                    "speakers and >= 2 emotions");
  }

  const ModelDims dims{ds.dim(), cfg.hidden_dim, cfg.latent_dim,
                       ds.speaker_names.size(), ds.emotion_names.size()};
  DtgVae model(dims, derive_seed(cfg.seed, kStageInit));
  auto params = model.parameters();
  Adam adam(AdamConfig{cfg.learning_rate, 0.9, 0.999, 1e-8});
  Rng shuffle_rng(derive_seed(cfg.seed, kStageShuffle));
  Rng noise_rng(derive_seed(cfg.seed, kStageNoise));

  std::vector<std::size_t> order = split.train;
  TrainResult res;
  double best_acc = -1.0;
  int since_best = 0;
  bool have_best = false;
  int last_epoch = 0;

  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    last_epoch = epoch;
    shuffle_rng.shuffle(order);

    double sum_rec = 0, sum_kl = 0, sum_mi = 0, sum_spk = 0, sum_emo = 0,
           sum_total = 0;
    std::size_t n_batches = 0, mi_batches = 0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t bsz = std::min(cfg.batch_size, order.size() - start);
      std::span<const std::size_t> rows(order.data() + start, bsz);
      Tensor x = gather_rows(ds.features, rows);
      std::vector<int> ys = gather_labels(ds.speakers, rows);
      std::vector<int> ye = gather_labels(ds.emotions, rows);
      Tensor es = draw_normal(noise_rng, bsz, cfg.latent_dim);
      Tensor ee = draw_normal(noise_rng, bsz, cfg.latent_dim);

      LossMask bm = cfg.mask;
      if (bm.mi && bsz < 4) bm.mi = false;  // covariance needs >= 4 samples

      try {
        BatchLossGraph blg =
            model.build_loss_graph(x, ys, ye, &es, &ee, bm, cfg.beta);
        blg.graph.backward(blg.total);
        std::vector<Tensor> grads;
        grads.reserve(blg.params.size());
        for (NodeId id : blg.params) grads.push_back(blg.graph.grad(id));
        adam.step(params, grads);

        const LossBreakdown lb = blg.breakdown();
        sum_rec += lb.rec;
        sum_kl += lb.kl;
        sum_spk += lb.spk;
        sum_emo += lb.emo;
        sum_total += lb.total;
        if (bm.mi) {
          sum_mi += lb.mi;
          ++mi_batches;
        }
        ++n_batches;
      } catch (const NumericError &e) {
        throw NumericError("training aborted at epoch " + std::to_string(epoch) +
                           ", batch " + std::to_string(n_batches) + ": " +
                           e.what());
      }
    }

    const EncodeMode val_mode =
        cfg.deterministic_eval ? EncodeMode::kMean : EncodeMode::kSample;
    const double val_acc =
        speaker_accuracy(model, ds, split.val, val_mode,
                         cfg.deterministic_eval ? nullptr : &noise_rng);

    EpochLog lg;
    lg.epoch = epoch;
    const double nb = static_cast<double>(std::max<std::size_t>(1, n_batches));
    lg.rec = sum_rec / nb;
    lg.kl = sum_kl / nb;
    lg.mi = sum_mi / static_cast<double>(std::max<std::size_t>(1, mi_batches));
    lg.spk = sum_spk / nb;
    lg.emo = sum_emo / nb;
    lg.total = sum_total / nb;
    lg.val_spk_acc = val_acc;
    res.log.push_back(lg);

    if (!split.val.empty()) {
      if (val_acc > best_acc) {
        best_acc = val_acc;
        res.best = model.to_checkpoint(static_cast<std::uint32_t>(epoch), cfg.seed);
        res.best_epoch = epoch;
        have_best = true;
        since_best = 0;
      } else {
        if (val_acc == best_acc && have_best) {
          // Tie on a saturated metric: keep the most-trained of the equally
          // good models. Ties do not extend patience.
          res.best = model.to_checkpoint(static_cast<std::uint32_t>(epoch), cfg.seed);
          res.best_epoch = epoch;
        }
        ++since_best;
      }
      if (since_best >= cfg.patience) break;
    }
  }

  if (!have_best) {
    // No validation split: keep the final parameters.
    res.best = model.to_checkpoint(static_cast<std::uint32_t>(last_epoch), cfg.seed);
    res.best_epoch = last_epoch;
    best_acc = res.log.empty() ? 0.0 : res.log.back().val_spk_acc;
  }
  res.best_val_accuracy = std::max(best_acc, 0.0);
  return res;
}

TrainResult train(const EmbeddingDataset &ds, const TrainConfig &cfg) {
  const auto plans = make_splits(ds, cfg.seed, 1);
  return train(ds, plans[0], cfg);
}

BottleneckLatents extract_latents(const Checkpoint &ckpt,
                                  const EmbeddingDataset &ds) {
  if (ds.dim() != ckpt.dims.input_dim) {
    throw DimensionError("extract: dataset dimension " + std::to_string(ds.dim()) +
                         " does not match checkpoint input dimension " +
                         std::to_string(ckpt.dims.input_dim));
  }
  const DtgVae model = DtgVae::from_checkpoint(ckpt);
  const std::size_t n = ds.size(), l = ckpt.dims.latent_dim;
  BottleneckLatents out;
  out.mu_spk = Tensor({n, l});
  out.mu_emo = Tensor({n, l});
  const std::size_t chunk = 512;
  std::vector<std::size_t> idx(chunk);
  for (std::size_t start = 0; start < n; start += chunk) {
    const std::size_t m = std::min(chunk, n - start);
    idx.resize(m);
    for (std::size_t i = 0; i < m; ++i) idx[i] = start + i;
    Tensor x = gather_rows(ds.features, idx);
    LatentPosterior post = model.encode(x, EncodeMode::kMean);
    for (std::size_t i = 0; i < m; ++i) {
      for (std::size_t j = 0; j < l; ++j) {
        out.mu_spk.at(start + i, j) = post.mu_spk.at(i, j);
        out.mu_emo.at(start + i, j) = post.mu_emo.at(i, j);
      }
    }
  }
  return out;
}

Tensor extract_bottleneck(const Checkpoint &ckpt, const EmbeddingDataset &ds) {
  return extract_latents(ckpt, ds).mu_spk;
}

void save_loss_log(const std::vector<EpochLog> &log,
                   const std::filesystem::path &path) {
  std::ostringstream out;
  out << "epoch,rec,kl,mi,spk,emo,total,val_spk_acc\n";
  char buf[32];
  auto put = [&](double v) {
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    out << ',' << buf;
  };
  for (const EpochLog &e : log) {
    out << e.epoch;
    put(e.rec);
    put(e.kl);
    put(e.mi);
    put(e.spk);
    put(e.emo);
    put(e.total);
    put(e.val_spk_acc);
    out << '\n';
  }
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw DataError("cannot open '" + tmp.string() + "' for writing");
    const std::string s = out.str();
    f.write(s.data(), static_cast<std::streamsize>(s.size()));
    if (!f) throw DataError("short write to '" + tmp.string() + "'");
  }
  std::filesystem::rename(tmp, path);
}

}  // namespace dtgvae
