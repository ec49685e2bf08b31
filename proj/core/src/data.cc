// core/src/data.cc

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

#include "dtgvae/data.h"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "dtgvae/errors.h"
#include "dtgvae/rng.h"

namespace dtgvae {

namespace {

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      out.push_back(line.substr(start));
      break;
    }
    out.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
  return out;
}

double parse_double(std::string_view field, std::size_t line_no) {
  double v = 0.0;
  const char *first = field.data();
  const char *last = field.data() + field.size();
  auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last || field.empty()) {
    throw DataError("line " + std::to_string(line_no) +
                    ": non-numeric feature value '" + std::string(field) + "'");
  }
  return v;
}

int intern_label(std::vector<std::string> &vocab,
                 std::unordered_map<std::string, int> &index,
                 std::string_view name) {
  auto it = index.find(std::string(name));
  if (it != index.end()) return it->second;
  const int id = static_cast<int>(vocab.size());
  vocab.emplace_back(name);
  index.emplace(std::string(name), id);
  return id;
}

}  // namespace

DatasetSummary describe(const EmbeddingDataset &ds) {
  DatasetSummary s;
  s.count = ds.size();
  s.dim = ds.dim();
  std::vector<std::size_t> spk(ds.speaker_names.size(), 0);
  std::vector<std::size_t> emo(ds.emotion_names.size(), 0);
  for (int v : ds.speakers) spk[static_cast<std::size_t>(v)]++;
  for (int v : ds.emotions) emo[static_cast<std::size_t>(v)]++;
  for (std::size_t i = 0; i < spk.size(); ++i) {
    s.speaker_counts.emplace_back(ds.speaker_names[i], spk[i]);
  }
  for (std::size_t i = 0; i < emo.size(); ++i) {
    s.emotion_counts.emplace_back(ds.emotion_names[i], emo[i]);
  }
  return s;
}

EmbeddingDataset load_csv(const std::filesystem::path &path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open '" + path.string() + "'");

  std::string line;
  if (!std::getline(in, line)) {
    throw DataError("'" + path.string() + "': missing header line");
  }
  if (!line.empty() && line.back() == '\r') line.pop_back();

  const auto header = split_fields(line);
  if (header.size() < 4 || header[0] != "utt_id" || header[1] != "speaker" ||
      header[2] != "emotion") {
    throw DataError("'" + path.string() +
                    "': malformed header, expected utt_id,speaker,emotion,f0,...");
  }
  const char prefix = header[3].empty() ? '\0' : header[3][0];
  if (prefix != 'f' && prefix != 'z') {
    throw DataError("'" + path.string() +
                    "': feature columns must be named f0,f1,... or z0,z1,...");
  }
  const std::size_t dim = header.size() - 3;
  for (std::size_t j = 0; j < dim; ++j) {
    const std::string expect = std::string(1, prefix) + std::to_string(j);
    if (header[3 + j] != expect) {
      throw DataError("'" + path.string() + "': feature column " +
                      std::to_string(j) + " named '" + std::string(header[3 + j]) +
                      "', expected '" + expect + "'");
    }
  }

  EmbeddingDataset ds;
  std::unordered_map<std::string, int> spk_index, emo_index;
  std::unordered_set<std::string> seen_ids;
  std::vector<double> values;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto fields = split_fields(line);
    if (fields.size() != 3 + dim) {
      throw DataError("line " + std::to_string(line_no) + ": expected " +
                      std::to_string(3 + dim) + " fields, got " +
                      std::to_string(fields.size()));
    }
    std::string id(fields[0]);
    if (!seen_ids.insert(id).second) {
      throw DataError("duplicate utterance id '" + id + "' at line " +
                      std::to_string(line_no));
    }
    ds.utt_ids.push_back(std::move(id));
    ds.speakers.push_back(intern_label(ds.speaker_names, spk_index, fields[1]));
    ds.emotions.push_back(intern_label(ds.emotion_names, emo_index, fields[2]));
    for (std::size_t j = 0; j < dim; ++j) {
      values.push_back(parse_double(fields[3 + j], line_no));
    }
  }
  ds.features = Tensor::from_values({ds.utt_ids.size(), dim}, std::move(values));
  return ds;
}

void save_csv(const EmbeddingDataset &ds, const std::filesystem::path &path,
              std::string_view feature_prefix) {
  std::ostringstream out;
  out << "utt_id,speaker,emotion";
  for (std::size_t j = 0; j < ds.dim(); ++j) out << ',' << feature_prefix << j;
  out << '\n';
  char buf[32];
  for (std::size_t i = 0; i < ds.size(); ++i) {
    out << ds.utt_ids[i] << ',' << ds.speaker_names[ds.speakers[i]] << ','
        << ds.emotion_names[ds.emotions[i]];
    const double *row = ds.features.row_ptr(i);
    for (std::size_t j = 0; j < ds.dim(); ++j) {
      std::snprintf(buf, sizeof(buf), "%.17g", row[j]);
      out << ',' << buf;
    }
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

std::vector<SplitPlan> make_splits(const EmbeddingDataset &ds,
                                   std::uint64_t seed, int n_repeats) {
  if (n_repeats < 1) throw DataError("make_splits: n_repeats must be >= 1");
  std::vector<std::vector<std::size_t>> by_speaker(ds.speaker_names.size());
  for (std::size_t i = 0; i < ds.size(); ++i) {
    by_speaker[static_cast<std::size_t>(ds.speakers[i])].push_back(i);
  }
  for (std::size_t s = 0; s < by_speaker.size(); ++s) {
    if (by_speaker[s].size() < 3) {
      throw DataError("speaker '" + ds.speaker_names[s] + "' has only " +
                      std::to_string(by_speaker[s].size()) +
                      " records; at least 3 are needed for a stratified split");
    }
  }

  std::vector<SplitPlan> plans;
  plans.reserve(static_cast<std::size_t>(n_repeats));
  for (int r = 0; r < n_repeats; ++r) {
    SplitPlan plan;
    plan.seed = seed;
    plan.fold = r;
    Rng rng(derive_seed(seed, 0x5000 + static_cast<std::uint64_t>(r)));
    for (auto indices : by_speaker) {
      rng.shuffle(indices);
      const std::size_t n = indices.size();
      std::size_t n_val = static_cast<std::size_t>(std::llround(0.1 * static_cast<double>(n)));
      std::size_t n_test = static_cast<std::size_t>(std::llround(0.1 * static_cast<double>(n)));
      // Keep every speaker represented in train.
      while (n - n_val - n_test < 1) {
        if (n_val > 0) --n_val;
        else --n_test;
      }
      std::size_t pos = 0;
      for (std::size_t i = 0; i < n - n_val - n_test; ++i) plan.train.push_back(indices[pos++]);
      for (std::size_t i = 0; i < n_val; ++i) plan.val.push_back(indices[pos++]);
      for (std::size_t i = 0; i < n_test; ++i) plan.test.push_back(indices[pos++]);
    }
    plans.push_back(std::move(plan));
  }
  return plans;
}

EmbeddingDataset synth_generate(const SynthConfig &cfg) {
  if (cfg.n_speakers == 0 || cfg.n_emotions == 0 || cfg.utterances_per_cell == 0 ||
      cfg.dim == 0) {
    throw DataError("synth_generate: all counts must be positive");
  }
  if (cfg.centroid_scale < 0 || cfg.offset_scale < 0 || cfg.noise_sigma < 0) {
    throw DataError("synth_generate: scales must be non-negative");
  }
  Rng rng(cfg.seed);

  Tensor centroids({cfg.n_speakers, cfg.dim});
  for (double &v : centroids.values()) v = cfg.centroid_scale * rng.normal();
  Tensor offsets({cfg.n_emotions, cfg.dim});
  for (double &v : offsets.values()) v = cfg.offset_scale * rng.normal();

  EmbeddingDataset ds;
  char buf[64];
  for (std::size_t s = 0; s < cfg.n_speakers; ++s) {
    std::snprintf(buf, sizeof(buf), "spk%02zu", s);
    ds.speaker_names.emplace_back(buf);
  }
  for (std::size_t e = 0; e < cfg.n_emotions; ++e) {
    std::snprintf(buf, sizeof(buf), "emo%zu", e);
    ds.emotion_names.emplace_back(buf);
  }

  const std::size_t n = cfg.n_speakers * cfg.n_emotions * cfg.utterances_per_cell;
  ds.features = Tensor({n, cfg.dim});
  std::size_t row = 0;
  for (std::size_t s = 0; s < cfg.n_speakers; ++s) {
    for (std::size_t e = 0; e < cfg.n_emotions; ++e) {
      for (std::size_t u = 0; u < cfg.utterances_per_cell; ++u) {
        std::snprintf(buf, sizeof(buf), "spk%02zu_emo%zu_u%04zu", s, e, u);
        ds.utt_ids.emplace_back(buf);
        ds.speakers.push_back(static_cast<int>(s));
        ds.emotions.push_back(static_cast<int>(e));
        double *x = ds.features.row_ptr(row++);
        const double *c = centroids.row_ptr(s);
        const double *o = offsets.row_ptr(e);
        for (std::size_t j = 0; j < cfg.dim; ++j) {
          x[j] = c[j] + o[j] + cfg.noise_sigma * rng.normal();
        }
      }
    }
  }
  return ds;
}

Tensor gather_rows(const Tensor &m, std::span<const std::size_t> rows) {
  Tensor out({rows.size(), m.cols()});
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const double *src = m.row_ptr(rows[i]);
    double *dst = out.row_ptr(i);
    for (std::size_t j = 0; j < m.cols(); ++j) dst[j] = src[j];
  }
  return out;
}

std::vector<int> gather_labels(const std::vector<int> &labels,
                               std::span<const std::size_t> rows) {
  std::vector<int> out;
  out.reserve(rows.size());
  for (std::size_t i : rows) out.push_back(labels[i]);
  return out;
}

}  // namespace dtgvae
