// core/src/pipeline.cc

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

#include "dtgvae/pipeline.h"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "dtgvae/errors.h"
#include "dtgvae/metrics.h"
#include "dtgvae/rng.h"

namespace dtgvae {

namespace {

struct CellStats {
  std::vector<double> nmi, ari, sil, emo_nmi;
};

void mean_std(const std::vector<double> &v, double &mean, double &stddev) {
  mean = 0.0;
  for (double x : v) mean += x;
  mean /= static_cast<double>(v.size());
  stddev = 0.0;
  if (v.size() > 1) {
    double s = 0.0;
    for (double x : v) s += (x - mean) * (x - mean);
    stddev = std::sqrt(s / static_cast<double>(v.size() - 1));
  }
}

LossMask mask_for_method(const std::string &method) {
  LossMask mask;
  if (method == "dtgvae") return mask;
  if (method == "dtgvae-no_emo") {
    mask.emo = false;
  } else if (method == "dtgvae-no_spk") {
    mask.spk = false;
  } else if (method == "dtgvae-no_mi") {
    mask.mi = false;
  } else {
    throw std::invalid_argument("unknown pipeline method '" + method + "'");
  }
  return mask;
}

}  // namespace

ClusterAssignment run_clustering(const std::string &algo, const Tensor &x,
                                 std::size_t k, std::uint64_t seed) {
  if (algo == "km") return kmeans(x, k, seed);
  if (algo == "sc") return spectral(x, k, seed);
  if (algo == "ac") return agglomerative(x, k);
  throw std::invalid_argument("unknown clustering algorithm '" + algo +
                              "', expected km, sc or ac");
}

std::vector<PipelineRow> run_pipeline(const EmbeddingDataset &ds,
                                      const PipelineConfig &cfg) {
  if (cfg.repeats < 1) throw std::invalid_argument("pipeline: repeats must be >= 1");
  const std::size_t k = cfg.k != 0 ? cfg.k : ds.speaker_names.size();

  std::vector<std::string> methods = {"baseline", "dtgvae"};
  for (const std::string &a : cfg.ablations) {
    if (a != "emo" && a != "spk" && a != "mi") {
      throw std::invalid_argument("unknown ablation '" + a +
                                  "', expected emo, spk or mi");
    }
    methods.push_back("dtgvae-no_" + a);
  }

  const auto plans = make_splits(ds, cfg.seed, cfg.repeats);

  std::vector<std::vector<CellStats>> stats(
      methods.size(), std::vector<CellStats>(cfg.algorithms.size()));

  for (int r = 0; r < cfg.repeats; ++r) {
    const std::uint64_t repeat_seed = derive_seed(cfg.seed, 100 + static_cast<std::uint64_t>(r));
    for (std::size_t mi = 0; mi < methods.size(); ++mi) {
      const std::string &method = methods[mi];
      Tensor embeddings;
      if (method == "baseline") {
        embeddings = ds.features;
      } else {
        TrainConfig tc = cfg.train;
        tc.seed = repeat_seed;
        tc.mask = mask_for_method(method);
        const TrainResult res = train(ds, plans[static_cast<std::size_t>(r)], tc);
        embeddings = extract_bottleneck(res.best, ds);
      }
      for (std::size_t ai = 0; ai < cfg.algorithms.size(); ++ai) {
        const ClusterAssignment assign = run_clustering(
            cfg.algorithms[ai], embeddings, k,
            derive_seed(repeat_seed, 200 + ai));
        CellStats &cell = stats[mi][ai];
        cell.nmi.push_back(nmi(ds.speakers, assign.labels));
        cell.ari.push_back(ari(ds.speakers, assign.labels));
        cell.sil.push_back(silhouette(embeddings, assign.labels));
        cell.emo_nmi.push_back(nmi(ds.emotions, assign.labels));
      }
    }
  }

  std::vector<PipelineRow> rows;
  rows.reserve(methods.size() * cfg.algorithms.size());
  for (std::size_t mi = 0; mi < methods.size(); ++mi) {
    for (std::size_t ai = 0; ai < cfg.algorithms.size(); ++ai) {
      PipelineRow row;
      row.method = methods[mi];
      row.algo = cfg.algorithms[ai];
      mean_std(stats[mi][ai].nmi, row.nmi_mean, row.nmi_std);
      mean_std(stats[mi][ai].ari, row.ari_mean, row.ari_std);
      mean_std(stats[mi][ai].sil, row.silhouette_mean, row.silhouette_std);
      mean_std(stats[mi][ai].emo_nmi, row.emotion_nmi_mean, row.emotion_nmi_std);
      rows.push_back(std::move(row));
    }
  }
  return rows;
}

void save_pipeline_csv(const std::vector<PipelineRow> &rows,
                       const std::filesystem::path &path) {
  std::ostringstream out;
  out << "method,algo,nmi_mean,nmi_std,ari_mean,ari_std,"
         "silhouette_mean,silhouette_std,emotion_nmi_mean,emotion_nmi_std\n";
  char buf[32];
  auto put = [&](double v) {
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    out << ',' << buf;
  };
  for (const PipelineRow &r : rows) {
    out << r.method << ',' << r.algo;
    put(r.nmi_mean);
    put(r.nmi_std);
    put(r.ari_mean);
    put(r.ari_std);
    put(r.silhouette_mean);
    put(r.silhouette_std);
    put(r.emotion_nmi_mean);
    put(r.emotion_nmi_std);
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
