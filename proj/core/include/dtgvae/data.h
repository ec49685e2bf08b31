// dtgvae/data.h

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

#ifndef DTGVAE_DATA_H_
#define DTGVAE_DATA_H_

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "dtgvae/tensor.h"

namespace dtgvae {

/// Labeled collection of fixed-dimension embedding vectors. Label indices are
/// dense in [0, #classes), assigned in first-appearance order; utterance ids
/// are unique; every vector has the same dimension (features is [N x D]).
struct EmbeddingDataset {
  std::vector<std::string> utt_ids;
  std::vector<int> speakers;  // index into speaker_names
  std::vector<int> emotions;  // index into emotion_names
  Tensor features;            // [N x D]
  std::vector<std::string> speaker_names;
  std::vector<std::string> emotion_names;

  std::size_t size() const { return utt_ids.size(); }
  std::size_t dim() const { return features.cols(); }
};

struct DatasetSummary {
  std::size_t count = 0;
  std::size_t dim = 0;
  std::vector<std::pair<std::string, std::size_t>> speaker_counts;
  std::vector<std::pair<std::string, std::size_t>> emotion_counts;
};

DatasetSummary describe(const EmbeddingDataset &ds);

/// CSV interchange format. Header: utt_id,speaker,emotion,f0,...,f{D-1}
/// (or z0,... for latent files); one record per line; LF line endings.
/// Values are written with 17 significant digits so 64-bit floats round-trip
/// exactly. Parse errors carry the offending line number or id.
EmbeddingDataset load_csv(const std::filesystem::path &path);
void save_csv(const EmbeddingDataset &ds, const std::filesystem::path &path,
              std::string_view feature_prefix = "f");

/// One stratified 80/10/10 split. Partitions are disjoint, cover all record
/// indices, and every speaker appears in train.
struct SplitPlan {
  std::uint64_t seed = 0;
  int fold = 0;
  std::vector<std::size_t> train, val, test;
};

/// n_repeats independent seeded splits, stratified per speaker (each
/// speaker's records are split 80/10/10 internally, keeping every speaker
/// represented in training). Requires >= 3 records per speaker.
std::vector<SplitPlan> make_splits(const EmbeddingDataset &ds,
                                   std::uint64_t seed, int n_repeats = 10);

/// Synthetic generator: x = centroid(speaker) + offset(emotion) + noise.
/// Speaker centroids are drawn once from N(0, centroid_scale^2 I), emotion
/// offsets once from N(0, offset_scale^2 I) and shared across speakers, and
/// per-utterance noise from N(0, noise_sigma^2 I). offset_scale controls how
/// strongly emotion entangles the embedding space.
struct SynthConfig {
  std::size_t n_speakers = 10;
  std::size_t n_emotions = 5;
  std::size_t utterances_per_cell = 30;
  std::size_t dim = 256;
  double centroid_scale = 1.0;
  double offset_scale = 1.0;
  double noise_sigma = 0.05;
  std::uint64_t seed = 0;
};

EmbeddingDataset synth_generate(const SynthConfig &cfg);

/// Row-subset helpers used by the training loop and evaluation.
Tensor gather_rows(const Tensor &m, std::span<const std::size_t> rows);
std::vector<int> gather_labels(const std::vector<int> &labels,
                               std::span<const std::size_t> rows);

}  // namespace dtgvae

#endif  // DTGVAE_DATA_H_
