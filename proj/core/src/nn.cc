// core/src/nn.cc

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

#include "dtgvae/nn.h"

#include <bit>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>

#include "dtgvae/errors.h"

namespace dtgvae {

NodeId dense_forward(Graph &g, NodeId x, NodeId w, NodeId b) {
  return g.add_rowvec(g.matmul(x, w), b);
}

NodeId layernorm_forward(Graph &g, NodeId x, NodeId gain, NodeId shift,
                         double eps) {
  return g.layer_norm(x, gain, shift, eps);
}

Tensor glorot_uniform(Rng &rng, std::size_t fan_in, std::size_t fan_out) {
  const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  Tensor w({fan_in, fan_out});
  for (double &v : w.values()) v = rng.uniform(-limit, limit);
  return w;
}

DenseLayer make_dense(Rng &rng, std::size_t in, std::size_t out) {
  return DenseLayer{glorot_uniform(rng, in, out), Tensor::zeros({out})};
}

LayerNormParams make_layernorm(std::size_t d, double epsilon) {
  return LayerNormParams{Tensor::full({d}, 1.0), Tensor::zeros({d}), epsilon};
}

void Adam::step(std::span<const NamedParam> params,
                std::span<const Tensor> grads) {
  if (params.size() != grads.size()) {
    throw DimensionError("adam: parameter/gradient count mismatch");
  }
  if (m_.empty()) {
    m_.reserve(params.size());
    v_.reserve(params.size());
    for (const NamedParam &p : params) {
      m_.push_back(Tensor::zeros(p.tensor->shape()));
      v_.push_back(Tensor::zeros(p.tensor->shape()));
    }
  }
  if (params.size() != m_.size()) {
    throw DimensionError("adam: parameter count changed between steps");
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (!params[i].tensor->same_shape(grads[i])) {
      throw DimensionError("adam: gradient shape mismatch for parameter '" +
                           params[i].name + "'");
    }
    if (!grads[i].all_finite()) {
      throw NumericError("adam: non-finite gradient for parameter '" +
                         params[i].name + "'");
    }
  }

  ++t_;
  const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
  for (std::size_t i = 0; i < params.size(); ++i) {
    Tensor &p = *params[i].tensor;
    const Tensor &gt = grads[i];
    Tensor &m = m_[i];
    Tensor &v = v_[i];
    for (std::size_t j = 0; j < p.size(); ++j) {
      m[j] = cfg_.beta1 * m[j] + (1.0 - cfg_.beta1) * gt[j];
      v[j] = cfg_.beta2 * v[j] + (1.0 - cfg_.beta2) * gt[j] * gt[j];
      const double m_hat = m[j] / bc1;
      const double v_hat = v[j] / bc2;
      p[j] -= cfg_.learning_rate * m_hat / (std::sqrt(v_hat) + cfg_.epsilon);
    }
  }
}

// ---------------------------------------------------------------------------
// Checkpoint serialization.

namespace {

void append_u32(std::string &out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void append_u64(std::string &out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void append_f64(std::string &out, double v) {
  append_u64(out, std::bit_cast<std::uint64_t>(v));
}

class Reader {
 public:
  Reader(const char *data, std::size_t size) : data_(data), size_(size) {}

  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) {
      v |= static_cast<std::uint32_t>(static_cast<unsigned char>(data_[pos_ + i]))
           << (8 * i);
    }
    pos_ += 4;
    return v;
  }

  std::uint64_t u64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) {
      v |= static_cast<std::uint64_t>(static_cast<unsigned char>(data_[pos_ + i]))
           << (8 * i);
    }
    pos_ += 8;
    return v;
  }

  double f64() { return std::bit_cast<double>(u64()); }

  std::string bytes(std::size_t n) {
    need(n);
    std::string s(data_ + pos_, n);
    pos_ += n;
    return s;
  }

 private:
  void need(std::size_t n) {
    if (pos_ + n > size_) {
      throw CheckpointError(CheckpointError::Kind::kTruncated,
                            "checkpoint file is truncated");
    }
  }

  const char *data_;
  std::size_t size_;
  std::size_t pos_ = 0;
};

constexpr char kMagic[4] = {'D', 'T', 'G', 'V'};

}  // namespace

const Tensor *Checkpoint::find(const std::string &name) const {
  for (const auto &[n, t] : tensors) {
    if (n == name) return &t;
  }
  return nullptr;
}

void save_checkpoint(const Checkpoint &c, const std::filesystem::path &path) {
  std::string buf;
  buf.append(kMagic, 4);
  append_u32(buf, c.version);
  append_u32(buf, static_cast<std::uint32_t>(c.dims.input_dim));
  append_u32(buf, static_cast<std::uint32_t>(c.dims.hidden_dim));
  append_u32(buf, static_cast<std::uint32_t>(c.dims.latent_dim));
  append_u32(buf, static_cast<std::uint32_t>(c.dims.n_speakers));
  append_u32(buf, static_cast<std::uint32_t>(c.dims.n_emotions));
  append_u32(buf, c.epoch);
  append_u64(buf, c.seed);
  append_u32(buf, static_cast<std::uint32_t>(c.tensors.size()));
  for (const auto &[name, t] : c.tensors) {
    append_u32(buf, static_cast<std::uint32_t>(name.size()));
    buf.append(name);
    append_u32(buf, static_cast<std::uint32_t>(t.rank()));
    for (std::size_t d : t.shape()) append_u32(buf, static_cast<std::uint32_t>(d));
    for (double v : t.values()) append_f64(buf, v);
  }

  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) {
      throw CheckpointError(CheckpointError::Kind::kIo,
                            "cannot open '" + tmp.string() + "' for writing");
    }
    out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
    if (!out) {
      throw CheckpointError(CheckpointError::Kind::kIo,
                            "short write to '" + tmp.string() + "'");
    }
  }
  std::filesystem::rename(tmp, path);
}

Checkpoint load_checkpoint(const std::filesystem::path &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw CheckpointError(CheckpointError::Kind::kIo,
                          "cannot open '" + path.string() + "'");
  }
  std::string buf((std::istreambuf_iterator<char>(in)),
                  std::istreambuf_iterator<char>());
  Reader r(buf.data(), buf.size());

  const std::string magic = r.bytes(4);
  if (std::memcmp(magic.data(), kMagic, 4) != 0) {
    throw CheckpointError(CheckpointError::Kind::kBadMagic,
                          "bad magic in '" + path.string() + "'");
  }
  Checkpoint c;
  c.version = r.u32();
  if (c.version != kCheckpointVersion) {
    throw CheckpointError(CheckpointError::Kind::kVersionMismatch,
                          "unsupported checkpoint version " +
                              std::to_string(c.version));
  }
  c.dims.input_dim = r.u32();
  c.dims.hidden_dim = r.u32();
  c.dims.latent_dim = r.u32();
  c.dims.n_speakers = r.u32();
  c.dims.n_emotions = r.u32();
  c.epoch = r.u32();
  c.seed = r.u64();
  const std::uint32_t count = r.u32();
  c.tensors.reserve(count);
  for (std::uint32_t i = 0; i < count; ++i) {
    const std::uint32_t name_len = r.u32();
    std::string name = r.bytes(name_len);
    const std::uint32_t rank = r.u32();
    if (rank > 2) {
      throw CheckpointError(CheckpointError::Kind::kNameShapeMismatch,
                            "tensor '" + name + "' has unsupported rank " +
                                std::to_string(rank));
    }
    std::vector<std::size_t> shape(rank);
    std::size_t n = 1;
    for (std::uint32_t d = 0; d < rank; ++d) {
      shape[d] = r.u32();
      n *= shape[d];
    }
    if (rank == 0) n = 0;
    std::vector<double> values(n);
    for (std::size_t j = 0; j < n; ++j) values[j] = r.f64();
    c.tensors.emplace_back(std::move(name),
                           Tensor::from_values(std::move(shape), std::move(values)));
  }
  return c;
}

}  // namespace dtgvae
