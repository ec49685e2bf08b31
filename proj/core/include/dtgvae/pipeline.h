// dtgvae/pipeline.h

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

#ifndef DTGVAE_PIPELINE_H_
#define DTGVAE_PIPELINE_H_

#include <string>
#include <string_view>
#include <vector>

#include "dtgvae/cluster.h"
#include "dtgvae/data.h"
#include "dtgvae/model.h"

namespace dtgvae {

inline constexpr std::string_view kDtgvaeVersion = "0.1.0";

/// End-to-end comparison run: baseline clustering of the raw embeddings
/// against clustering of the extracted speaker latents, optionally with
/// ablated loss configurations, repeated over seeds.
struct PipelineConfig {
  TrainConfig train;
  int repeats = 1;
  /// Loss terms to ablate, each producing an extra method row:
  /// any of "emo", "spk", "mi".
  std::vector<std::string> ablations;
  /// Cluster count; 0 means the dataset's speaker count.
  std::size_t k = 0;
  std::uint64_t seed = 0;
  /// Clustering algorithms to run: "km", "sc", "ac".
  std::vector<std::string> algorithms = {"km", "sc", "ac"};
};

/// Metrics for one (method, algorithm) cell, aggregated over repeats.
/// Speaker-label NMI/ARI measure clustering quality; emotion-label NMI
/// measures how much emotional structure leaks into the clustering.
struct PipelineRow {
  std::string method;
  std::string algo;
  double nmi_mean = 0, nmi_std = 0;
  double ari_mean = 0, ari_std = 0;
  double silhouette_mean = 0, silhouette_std = 0;
  double emotion_nmi_mean = 0, emotion_nmi_std = 0;
};

/// Dispatch helper shared with the CLI: algo is "km", "sc" or "ac".
ClusterAssignment run_clustering(const std::string &algo, const Tensor &x,
                                 std::size_t k, std::uint64_t seed);

std::vector<PipelineRow> run_pipeline(const EmbeddingDataset &ds,
                                      const PipelineConfig &cfg);

void save_pipeline_csv(const std::vector<PipelineRow> &rows,
                       const std::filesystem::path &path);

}  // namespace dtgvae

#endif  // DTGVAE_PIPELINE_H_
