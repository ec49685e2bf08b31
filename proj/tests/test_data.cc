// tests/test_data.cc

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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <fstream>
#include <set>
#include <string>

#include "dtgvae/cluster.h"
#include "dtgvae/data.h"
#include "dtgvae/metrics.h"
#include "test_support.h"

using namespace dtgvae;
using dtgvae::test::TempDir;

namespace {

void write_file(const std::filesystem::path &p, const std::string &content) {
  std::ofstream out(p, std::ios::binary);
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
}

std::string read_file(const std::filesystem::path &p) {
  std::ifstream in(p, std::ios::binary);
  return std::string((std::istreambuf_iterator<char>(in)),
                     std::istreambuf_iterator<char>());
}

}  // namespace

TEST_CASE("csv round trip is lossless, including awkward doubles") {
  TempDir dir("csv");
  EmbeddingDataset ds;
  ds.utt_ids = {"u1", "u2", "u3"};
  ds.speaker_names = {"alice", "bob"};
  ds.emotion_names = {"calm", "tense"};
  ds.speakers = {0, 1, 0};
  ds.emotions = {0, 0, 1};
  ds.features = Tensor::from_values(
      {3, 4}, {0.1, -1e-300, 3.141592653589793, 6.02214076e23,
               1.0 / 3.0, -0.0, 1e308, 5e-324,
               123456789.123456789, 2.2250738585072014e-308, -7.7, 42.0});

  const auto path = dir.path("ds.csv");
  save_csv(ds, path);
  EmbeddingDataset back = load_csv(path);
  CHECK(back.utt_ids == ds.utt_ids);
  CHECK(back.speaker_names == ds.speaker_names);
  CHECK(back.emotion_names == ds.emotion_names);
  CHECK(back.speakers == ds.speakers);
  CHECK(back.emotions == ds.emotions);
  CHECK(back.features == ds.features);  // bitwise

  // Saving again reproduces the same bytes.
  const auto path2 = dir.path("ds2.csv");
  save_csv(back, path2);
  CHECK(read_file(path) == read_file(path2));
}

TEST_CASE("csv loader reports malformed input precisely") {
  TempDir dir("csv_err");

  const auto ragged = dir.path("ragged.csv");
  write_file(ragged, "utt_id,speaker,emotion,f0,f1\nu1,a,x,1.0,2.0\nu2,a,x,1.0\n");
  try {
    load_csv(ragged);
    FAIL("expected DataError");
  } catch (const DataError &e) {
    CHECK(std::string(e.what()).find("line 3") != std::string::npos);
  }

  const auto dup = dir.path("dup.csv");
  write_file(dup, "utt_id,speaker,emotion,f0\nu7,a,x,1.0\nu7,b,y,2.0\n");
  try {
    load_csv(dup);
    FAIL("expected DataError");
  } catch (const DataError &e) {
    CHECK(std::string(e.what()).find("u7") != std::string::npos);
  }

  const auto bad_num = dir.path("badnum.csv");
  write_file(bad_num, "utt_id,speaker,emotion,f0\nu1,a,x,oops\n");
  try {
    load_csv(bad_num);
    FAIL("expected DataError");
  } catch (const DataError &e) {
    CHECK(std::string(e.what()).find("line 2") != std::string::npos);
  }

  const auto no_header = dir.path("nohdr.csv");
  write_file(no_header, "id,spk,emo,f0\nu1,a,x,1.0\n");
  CHECK_THROWS_AS(load_csv(no_header), DataError);

  const auto empty = dir.path("empty.csv");
  write_file(empty, "");
  CHECK_THROWS_AS(load_csv(empty), DataError);

  CHECK_THROWS_AS(load_csv(dir.path("does_not_exist.csv")), DataError);
}

TEST_CASE("csv loader accepts latent-prefix feature columns") {
  TempDir dir("csv_z");
  const auto p = dir.path("lat.csv");
  write_file(p, "utt_id,speaker,emotion,z0,z1\nu1,a,x,0.5,-0.25\n");
  EmbeddingDataset ds = load_csv(p);
  CHECK(ds.dim() == 2);
  CHECK(ds.features.at(0, 1) == doctest::Approx(-0.25));
}

TEST_CASE("splits are disjoint, covering, stratified, and seed-deterministic") {
  SynthConfig cfg;
  cfg.n_speakers = 6;
  cfg.n_emotions = 3;
  cfg.utterances_per_cell = 9;
  cfg.dim = 4;
  cfg.seed = 11;
  EmbeddingDataset ds = synth_generate(cfg);

  const auto plans = make_splits(ds, 42, 10);
  REQUIRE(plans.size() == 10);
  for (const SplitPlan &p : plans) {
    std::vector<char> seen(ds.size(), 0);
    for (auto part : {&p.train, &p.val, &p.test}) {
      for (std::size_t i : *part) {
        CHECK(!seen[i]);
        seen[i] = 1;
      }
    }
    for (char c : seen) CHECK(c == 1);

    std::set<int> train_speakers;
    for (std::size_t i : p.train) train_speakers.insert(ds.speakers[i]);
    CHECK(train_speakers.size() == 6);  // every speaker in train

    // 80/10/10 within rounding.
    const double n = static_cast<double>(ds.size());
    CHECK(static_cast<double>(p.train.size()) / n == doctest::Approx(0.8).epsilon(0.05));
    CHECK(static_cast<double>(p.val.size()) / n == doctest::Approx(0.1).epsilon(0.25));
    CHECK(static_cast<double>(p.test.size()) / n == doctest::Approx(0.1).epsilon(0.25));
  }

  const auto again = make_splits(ds, 42, 10);
  for (std::size_t r = 0; r < 10; ++r) {
    CHECK(plans[r].train == again[r].train);
    CHECK(plans[r].val == again[r].val);
    CHECK(plans[r].test == again[r].test);
  }
  CHECK(!(make_splits(ds, 43, 1)[0].train == plans[0].train));
}

TEST_CASE("splits reject speakers with too few records") {
  EmbeddingDataset ds;
  ds.utt_ids = {"a", "b", "c", "d", "e"};
  ds.speaker_names = {"s0", "s1"};
  ds.emotion_names = {"e0"};
  ds.speakers = {0, 0, 0, 1, 1};  // s1 has only 2 records
  ds.emotions = {0, 0, 0, 0, 0};
  ds.features = Tensor::zeros({5, 2});
  CHECK_THROWS_AS(make_splits(ds, 1, 1), DataError);
}

TEST_CASE("synthetic generator determinism and labeling") {
  SynthConfig cfg;
  cfg.n_speakers = 10;
  cfg.n_emotions = 5;
  cfg.utterances_per_cell = 2;
  cfg.dim = 8;
  cfg.seed = 123;
  EmbeddingDataset a = synth_generate(cfg);
  EmbeddingDataset b = synth_generate(cfg);
  CHECK(a.features == b.features);
  CHECK(a.utt_ids == b.utt_ids);
  CHECK(a.size() == 100);

  DatasetSummary s = describe(a);
  CHECK(s.count == 100);
  CHECK(s.dim == 8);
  CHECK(s.speaker_counts.size() == 10);
  CHECK(s.emotion_counts.size() == 5);
  std::size_t total = 0;
  for (const auto &[name, count] : s.speaker_counts) {
    CHECK(count == 10);
    total += count;
  }
  CHECK(total == s.count);
  for (const auto &[name, count] : s.emotion_counts) CHECK(count == 20);

  DatasetSummary empty = describe(EmbeddingDataset{});
  CHECK(empty.count == 0);

  CHECK_THROWS_AS(synth_generate(SynthConfig{0, 5, 1, 8}), DataError);
}

TEST_CASE("zero emotion offsets with tiny noise make speakers trivially separable") {
  SynthConfig cfg;
  cfg.n_speakers = 10;
  cfg.n_emotions = 5;
  cfg.utterances_per_cell = 6;
  cfg.dim = 16;
  cfg.centroid_scale = 1.0;
  cfg.offset_scale = 0.0;
  cfg.noise_sigma = 1e-6;
  cfg.seed = 99;
  EmbeddingDataset ds = synth_generate(cfg);
  ClusterAssignment a = kmeans(ds.features, 10, 5);
  CHECK(nmi(ds.speakers, a.labels) == doctest::Approx(1.0));
}

TEST_CASE("dominant emotion offsets make clusters follow emotion, not speaker") {
  SynthConfig cfg;
  cfg.n_speakers = 10;
  cfg.n_emotions = 5;
  cfg.utterances_per_cell = 6;
  cfg.dim = 16;
  cfg.centroid_scale = 0.1;
  cfg.offset_scale = 10.0;
  cfg.noise_sigma = 0.01;
  cfg.seed = 77;
  EmbeddingDataset ds = synth_generate(cfg);
  ClusterAssignment a = kmeans(ds.features, 5, 3);
  CHECK(nmi(ds.emotions, a.labels) > nmi(ds.speakers, a.labels));
  CHECK(nmi(ds.emotions, a.labels) > 0.9);
}

TEST_CASE("within-speaker noise averages out (law of large numbers)") {
  SynthConfig clean;
  clean.n_speakers = 4;
  clean.n_emotions = 3;
  clean.utterances_per_cell = 50;
  clean.dim = 256;
  clean.noise_sigma = 0.0;
  clean.seed = 31;
  SynthConfig noisy = clean;
  noisy.noise_sigma = 0.5;

  // Same seed: identical centroids and offsets, so the mean difference is
  // exactly the averaged noise.
  EmbeddingDataset d0 = synth_generate(clean);
  EmbeddingDataset d1 = synth_generate(noisy);

  const std::size_t per_speaker = 3 * 50;
  for (std::size_t s = 0; s < 4; ++s) {
    std::vector<double> mean_diff(clean.dim, 0.0);
    for (std::size_t i = 0; i < d0.size(); ++i) {
      if (static_cast<std::size_t>(d0.speakers[i]) != s) continue;
      for (std::size_t j = 0; j < clean.dim; ++j) {
        mean_diff[j] += (d1.features.at(i, j) - d0.features.at(i, j));
      }
    }
    double avg_sq = 0.0;
    for (double &v : mean_diff) {
      v /= static_cast<double>(per_speaker);
      avg_sq += v * v;
    }
    avg_sq /= static_cast<double>(clean.dim);
    // Per-dim averaged noise is N(0, sigma^2 / n); its squared magnitude
    // averaged over 256 dims concentrates within 3 sigma of sigma^2 / n.
    const double expected = noisy.noise_sigma * noisy.noise_sigma /
                            static_cast<double>(per_speaker);
    const double band = 3.0 * expected * std::sqrt(2.0 / 256.0);
    CHECK(avg_sq > expected - band);
    CHECK(avg_sq < expected + band);
  }
}

TEST_CASE("gather helpers keep order") {
  Tensor m = Tensor::matrix({{1, 2}, {3, 4}, {5, 6}});
  std::vector<std::size_t> rows{2, 0};
  Tensor g = gather_rows(m, rows);
  CHECK(g == Tensor::matrix({{5, 6}, {1, 2}}));
  std::vector<int> labels{7, 8, 9};
  CHECK(gather_labels(labels, rows) == std::vector<int>{9, 7});
}
