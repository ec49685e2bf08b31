// tools/dtgvae_main.cc

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

// Command line driver: synthesize embedding datasets, train the dual-latent
// VAE, extract speaker latents, cluster, evaluate, and run the full
// baseline-vs-model comparison pipeline.
//
// Exit codes: 0 ok, 1 usage error, 2 data error, 3 numeric failure.

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include "dtgvae/cluster.h"
#include "dtgvae/data.h"
#include "dtgvae/errors.h"
#include "dtgvae/metrics.h"
#include "dtgvae/model.h"
#include "dtgvae/pipeline.h"

namespace {

using dtgvae::CheckpointError;
using dtgvae::DataError;
using dtgvae::DimensionError;
using dtgvae::NumericError;
using json = nlohmann::json;

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitNumeric = 3;

void write_text_atomic(const std::filesystem::path &path, const std::string &s) {
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot open '" + tmp.string() + "' for writing");
    out.write(s.data(), static_cast<std::streamsize>(s.size()));
    if (!out) throw DataError("short write to '" + tmp.string() + "'");
  }
  std::filesystem::rename(tmp, path);
}

/// Reproduction record written next to every primary output.
void write_manifest(const std::filesystem::path &primary_output,
                    const std::string &command,
                    const std::map<std::string, json> &flags,
                    const std::vector<std::string> &inputs,
                    const std::vector<std::string> &outputs) {
  json m;
  m["tool"] = "dtgvae";
  m["version"] = std::string(dtgvae::kDtgvaeVersion);
  m["command"] = command;
  m["flags"] = json(flags);
  m["inputs"] = inputs;
  m["outputs"] = outputs;
  write_text_atomic(primary_output.string() + ".manifest.json", m.dump(2) + "\n");
}

dtgvae::LossMask parse_mask(const std::string &spec) {
  dtgvae::LossMask mask;
  if (spec.empty() || spec == "full") return mask;
  std::stringstream ss(spec);
  std::string token;
  while (std::getline(ss, token, ',')) {
    if (token == "no-rec") mask.rec = false;
    else if (token == "no-kl") mask.kl = false;
    else if (token == "no-mi") mask.mi = false;
    else if (token == "no-spk") mask.spk = false;
    else if (token == "no-emo") mask.emo = false;
    else throw CLI::ValidationError("--mask", "unknown mask token '" + token + "'");
  }
  return mask;
}

std::vector<std::string> split_csv_flag(const std::string &spec) {
  std::vector<std::string> out;
  std::stringstream ss(spec);
  std::string token;
  while (std::getline(ss, token, ',')) {
    if (!token.empty()) out.push_back(token);
  }
  return out;
}

// ---------------------------------------------------------------------------
// synth

struct SynthArgs {
  std::string out;
  dtgvae::SynthConfig cfg;
};

void run_synth(const SynthArgs &a) {
  const dtgvae::EmbeddingDataset ds = dtgvae::synth_generate(a.cfg);
  dtgvae::save_csv(ds, a.out);
  write_manifest(a.out, "synth",
                 {{"speakers", a.cfg.n_speakers},
                  {"emotions", a.cfg.n_emotions},
                  {"per-cell", a.cfg.utterances_per_cell},
                  {"dim", a.cfg.dim},
                  {"centroid-scale", a.cfg.centroid_scale},
                  {"offset-scale", a.cfg.offset_scale},
                  {"noise", a.cfg.noise_sigma},
                  {"seed", a.cfg.seed}},
                 {}, {a.out});
  std::printf("wrote %zu rows (%zu speakers x %zu emotions, D=%zu) to %s\n",
              ds.size(), a.cfg.n_speakers, a.cfg.n_emotions, a.cfg.dim,
              a.out.c_str());
}

// ---------------------------------------------------------------------------
// train

struct TrainArgs {
  std::string data;
  std::string out;
  dtgvae::TrainConfig cfg;
  std::string mask = "full";
  int repeat = 1;
};

void run_train(const TrainArgs &a) {
  dtgvae::TrainConfig cfg = a.cfg;
  cfg.mask = parse_mask(a.mask);
  const dtgvae::EmbeddingDataset ds = dtgvae::load_csv(a.data);
  const auto plans = dtgvae::make_splits(ds, cfg.seed, a.repeat);

  std::vector<std::string> outputs;
  for (int r = 0; r < a.repeat; ++r) {
    std::filesystem::path ckpt_path = a.out;
    if (a.repeat > 1) {
      std::filesystem::path p(a.out);
      ckpt_path = p.parent_path() /
                  (p.stem().string() + "-r" + std::to_string(r) + p.extension().string());
    }
    dtgvae::TrainConfig run_cfg = cfg;
    if (a.repeat > 1) {
      run_cfg.seed = dtgvae::derive_seed(cfg.seed, 100 + static_cast<std::uint64_t>(r));
    }
    const dtgvae::TrainResult res = dtgvae::train(ds, plans[static_cast<std::size_t>(r)], run_cfg);
    dtgvae::save_checkpoint(res.best, ckpt_path);
    const std::string log_path = ckpt_path.string() + ".loss.csv";
    dtgvae::save_loss_log(res.log, log_path);
    outputs.push_back(ckpt_path.string());
    outputs.push_back(log_path);
    std::printf("repeat %d: best epoch %d, val speaker accuracy %.4f -> %s\n", r,
                res.best_epoch, res.best_val_accuracy, ckpt_path.string().c_str());
  }
  write_manifest(a.out, "train",
                 {{"data", a.data},
                  {"epochs", cfg.epochs},
                  {"lr", cfg.learning_rate},
                  {"batch", cfg.batch_size},
                  {"seed", cfg.seed},
                  {"beta", cfg.beta},
                  {"mask", a.mask},
                  {"patience", cfg.patience},
                  {"hidden", cfg.hidden_dim},
                  {"latent", cfg.latent_dim},
                  {"repeat", a.repeat}},
                 {a.data}, outputs);
}

// ---------------------------------------------------------------------------
// extract

struct ExtractArgs {
  std::string ckpt, data, out;
};

void run_extract(const ExtractArgs &a) {
  const dtgvae::Checkpoint ckpt = dtgvae::load_checkpoint(a.ckpt);
  const dtgvae::EmbeddingDataset ds = dtgvae::load_csv(a.data);
  const dtgvae::Tensor latents = dtgvae::extract_bottleneck(ckpt, ds);

  dtgvae::EmbeddingDataset out = ds;
  out.features = latents;
  dtgvae::save_csv(out, a.out, "z");
  write_manifest(a.out, "extract", {{"ckpt", a.ckpt}, {"data", a.data}},
                 {a.ckpt, a.data}, {a.out});
  std::printf("extracted %zu x %zu speaker latents to %s\n", latents.rows(),
              latents.cols(), a.out.c_str());
}

// ---------------------------------------------------------------------------
// cluster

struct ClusterArgs {
  std::string embeddings, algo = "km", out;
  std::size_t k = 0;
  std::uint64_t seed = 0;
};

void run_cluster(const ClusterArgs &a) {
  const dtgvae::EmbeddingDataset ds = dtgvae::load_csv(a.embeddings);
  const dtgvae::ClusterAssignment assign =
      dtgvae::run_clustering(a.algo, ds.features, a.k, a.seed);

  std::ostringstream out;
  out << "utt_id,cluster\n";
  for (std::size_t i = 0; i < ds.size(); ++i) {
    out << ds.utt_ids[i] << ',' << assign.labels[i] << '\n';
  }
  write_text_atomic(a.out, out.str());
  write_manifest(a.out, "cluster",
                 {{"embeddings", a.embeddings},
                  {"algo", a.algo},
                  {"k", a.k},
                  {"seed", a.seed}},
                 {a.embeddings}, {a.out});
  std::printf("%s clustering: %zu rows into %zu clusters -> %s\n",
              a.algo.c_str(), ds.size(), a.k, a.out.c_str());
}

// ---------------------------------------------------------------------------
// eval

struct EvalArgs {
  std::string assignments, data, embeddings, out;
  std::string label = "speaker";
};

void run_eval(const EvalArgs &a) {
  const dtgvae::EmbeddingDataset ds = dtgvae::load_csv(a.data);
  const dtgvae::EmbeddingDataset emb = dtgvae::load_csv(a.embeddings);

  std::ifstream in(a.assignments);
  if (!in) throw DataError("cannot open '" + a.assignments + "'");
  std::string line;
  if (!std::getline(in, line) || (line != "utt_id,cluster" && line != "utt_id,cluster\r")) {
    throw DataError("'" + a.assignments + "': expected header utt_id,cluster");
  }
  std::unordered_map<std::string, int> clusters;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const std::size_t comma = line.find(',');
    if (comma == std::string::npos) {
      throw DataError("line " + std::to_string(line_no) + ": expected utt_id,cluster");
    }
    clusters[line.substr(0, comma)] = std::stoi(line.substr(comma + 1));
  }

  std::vector<int> truth, pred;
  truth.reserve(ds.size());
  pred.reserve(ds.size());
  for (std::size_t i = 0; i < ds.size(); ++i) {
    auto it = clusters.find(ds.utt_ids[i]);
    if (it == clusters.end()) {
      throw DataError("assignments are missing utterance id '" + ds.utt_ids[i] + "'");
    }
    truth.push_back(a.label == "speaker" ? ds.speakers[i] : ds.emotions[i]);
    pred.push_back(it->second);
  }
  // The embeddings file must describe the same utterances in the same order.
  if (emb.utt_ids != ds.utt_ids) {
    throw DataError("embeddings file ids do not match the dataset ids");
  }

  const double v_nmi = dtgvae::nmi(truth, pred);
  const double v_ari = dtgvae::ari(truth, pred);
  const double v_sil = dtgvae::silhouette(emb.features, pred);

  char buf[160];
  std::snprintf(buf, sizeof(buf), "label,nmi,ari,silhouette\n%s,%.6f,%.6f,%.6f\n",
                a.label.c_str(), v_nmi, v_ari, v_sil);
  write_text_atomic(a.out, buf);
  write_manifest(a.out, "eval",
                 {{"assignments", a.assignments},
                  {"data", a.data},
                  {"embeddings", a.embeddings},
                  {"label", a.label}},
                 {a.assignments, a.data, a.embeddings}, {a.out});
  std::printf("%s: NMI=%.4f ARI=%.4f Silhouette=%.4f -> %s\n", a.label.c_str(),
              v_nmi, v_ari, v_sil, a.out.c_str());
}

// ---------------------------------------------------------------------------
// pipeline

struct PipelineArgs {
  std::string data;
  bool use_synth = false;
  dtgvae::SynthConfig synth;
  std::string out;
  dtgvae::TrainConfig train_cfg;
  int repeat = 1;
  std::string ablate;
  std::string algos = "km,sc,ac";
  std::size_t k = 0;
  std::uint64_t seed = 0;
};

void run_pipeline_cmd(const PipelineArgs &a) {
  dtgvae::EmbeddingDataset ds;
  if (a.use_synth) {
    dtgvae::SynthConfig synth = a.synth;
    synth.seed = dtgvae::derive_seed(a.seed, 1);
    ds = dtgvae::synth_generate(synth);
  } else {
    if (a.data.empty()) {
      throw CLI::ValidationError("pipeline", "either --data or --synth is required");
    }
    ds = dtgvae::load_csv(a.data);
  }

  dtgvae::PipelineConfig cfg;
  cfg.train = a.train_cfg;
  cfg.repeats = a.repeat;
  cfg.ablations = split_csv_flag(a.ablate);
  cfg.algorithms = split_csv_flag(a.algos);
  cfg.k = a.k;
  cfg.seed = a.seed;

  const auto rows = dtgvae::run_pipeline(ds, cfg);
  dtgvae::save_pipeline_csv(rows, a.out);
  write_manifest(a.out, "pipeline",
                 {{"data", a.use_synth ? "(synthetic)" : a.data},
                  {"synth", a.use_synth},
                  {"repeat", a.repeat},
                  {"ablate", a.ablate},
                  {"algos", a.algos},
                  {"k", cfg.k},
                  {"seed", a.seed},
                  {"epochs", cfg.train.epochs},
                  {"lr", cfg.train.learning_rate},
                  {"batch", cfg.train.batch_size},
                  {"beta", cfg.train.beta},
                  {"hidden", cfg.train.hidden_dim},
                  {"latent", cfg.train.latent_dim}},
                 a.use_synth ? std::vector<std::string>{} : std::vector<std::string>{a.data},
                 {a.out});
  for (const auto &r : rows) {
    std::printf("%-14s %-3s NMI %.3f+-%.3f ARI %.3f+-%.3f Sil %.3f+-%.3f emoNMI %.3f\n",
                r.method.c_str(), r.algo.c_str(), r.nmi_mean, r.nmi_std,
                r.ari_mean, r.ari_std, r.silhouette_mean, r.silhouette_std,
                r.emotion_nmi_mean);
  }
  std::printf("wrote %zu rows to %s\n", rows.size(), a.out.c_str());
}

void add_train_flags(CLI::App *cmd, dtgvae::TrainConfig &cfg) {
  cmd->add_option("--epochs", cfg.epochs, "Max training epochs")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  cmd->add_option("--lr", cfg.learning_rate, "Adam learning rate")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  cmd->add_option("--batch", cfg.batch_size, "Minibatch size")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  cmd->add_option("--beta", cfg.beta, "KL weight")
      ->check(CLI::NonNegativeNumber)
      ->capture_default_str();
  cmd->add_option("--patience", cfg.patience,
                  "Early-stop patience on validation speaker accuracy")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  cmd->add_option("--hidden", cfg.hidden_dim, "Hidden layer width")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  cmd->add_option("--latent", cfg.latent_dim, "Latent dimension per branch")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
}

void add_synth_flags(CLI::App *cmd, dtgvae::SynthConfig &cfg) {
  cmd->add_option("--speakers", cfg.n_speakers, "Number of speakers")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  cmd->add_option("--emotions", cfg.n_emotions, "Number of emotional styles")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  cmd->add_option("--per-cell", cfg.utterances_per_cell,
                  "Utterances per (speaker, emotion) cell")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  cmd->add_option("--dim", cfg.dim, "Embedding dimension D")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  cmd->add_option("--centroid-scale", cfg.centroid_scale, "Speaker centroid scale")
      ->check(CLI::NonNegativeNumber)
      ->capture_default_str();
  cmd->add_option("--offset-scale", cfg.offset_scale,
                  "Emotion offset scale (entanglement strength)")
      ->check(CLI::NonNegativeNumber)
      ->capture_default_str();
  cmd->add_option("--noise", cfg.noise_sigma, "Per-utterance noise sigma")
      ->check(CLI::NonNegativeNumber)
      ->capture_default_str();
}

}  // namespace

int main(int argc, char **argv) {
  CLI::App app{"Disentangled dual-latent VAE for speaker clustering on "
               "fixed-dimension embedding vectors"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(dtgvae::kDtgvaeVersion));

  SynthArgs synth_args;
  CLI::App *synth = app.add_subcommand("synth", "Generate a synthetic embedding dataset CSV");
  synth->add_option("--out", synth_args.out, "Output CSV path")->required();
  add_synth_flags(synth, synth_args.cfg);
  synth->add_option("--seed", synth_args.cfg.seed, "RNG seed")->capture_default_str();

  TrainArgs train_args;
  CLI::App *train = app.add_subcommand("train", "Train the model on a dataset CSV");
  train->add_option("--data", train_args.data, "Input dataset CSV")->required();
  train->add_option("--out", train_args.out, "Output checkpoint path")->required();
  add_train_flags(train, train_args.cfg);
  train->add_option("--seed", train_args.cfg.seed, "Root RNG seed")->capture_default_str();
  train->add_option("--mask", train_args.mask,
                    "Loss mask: 'full' or comma list of no-rec,no-kl,no-mi,no-spk,no-emo")
      ->capture_default_str();
  train->add_option("--repeat", train_args.repeat, "Train this many seeds")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();

  ExtractArgs extract_args;
  CLI::App *extract = app.add_subcommand(
      "extract", "Extract speaker latents (mu_spk) from a trained checkpoint");
  extract->add_option("--ckpt", extract_args.ckpt, "Checkpoint path")->required();
  extract->add_option("--data", extract_args.data, "Input dataset CSV")->required();
  extract->add_option("--out", extract_args.out, "Output latent CSV")->required();

  ClusterArgs cluster_args;
  CLI::App *cluster = app.add_subcommand("cluster", "Cluster an embeddings CSV");
  cluster->add_option("--embeddings", cluster_args.embeddings, "Embeddings CSV")
      ->required();
  cluster->add_option("--algo", cluster_args.algo, "Algorithm")
      ->check(CLI::IsMember({"km", "sc", "ac"}))
      ->capture_default_str();
  cluster->add_option("--k", cluster_args.k, "Number of clusters")
      ->required()
      ->check(CLI::PositiveNumber);
  cluster->add_option("--seed", cluster_args.seed, "RNG seed")->capture_default_str();
  cluster->add_option("--out", cluster_args.out, "Output assignment CSV")->required();

  EvalArgs eval_args;
  CLI::App *eval = app.add_subcommand(
      "eval", "Score a cluster assignment against dataset labels");
  eval->add_option("--assignments", eval_args.assignments, "Assignment CSV")->required();
  eval->add_option("--data", eval_args.data, "Dataset CSV with labels")->required();
  eval->add_option("--embeddings", eval_args.embeddings,
                   "Embeddings CSV used for the silhouette score")
      ->required();
  eval->add_option("--label", eval_args.label, "Label target")
      ->check(CLI::IsMember({"speaker", "emotion"}))
      ->capture_default_str();
  eval->add_option("--out", eval_args.out, "Output metrics CSV")->required();

  PipelineArgs pipe_args;
  CLI::App *pipe = app.add_subcommand(
      "pipeline", "Baseline vs model comparison table over clustering algorithms");
  pipe->add_option("--data", pipe_args.data, "Input dataset CSV");
  pipe->add_flag("--synth", pipe_args.use_synth, "Generate a synthetic dataset instead");
  add_synth_flags(pipe, pipe_args.synth);
  pipe->add_option("--out", pipe_args.out, "Output table CSV")->required();
  add_train_flags(pipe, pipe_args.train_cfg);
  pipe->add_option("--seed", pipe_args.seed, "Root RNG seed")->capture_default_str();
  pipe->add_option("--repeat", pipe_args.repeat, "Seeds to average over")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  pipe->add_option("--ablate", pipe_args.ablate,
                   "Comma list of loss ablations to add: emo,spk,mi")
      ->capture_default_str();
  pipe->add_option("--algos", pipe_args.algos, "Comma list of algorithms to run")
      ->capture_default_str();
  pipe->add_option("--k", pipe_args.k, "Cluster count (0 = #speakers)")
      ->capture_default_str();

  try {
    app.parse(argc, argv);
    if (synth->parsed()) run_synth(synth_args);
    else if (train->parsed()) run_train(train_args);
    else if (extract->parsed()) run_extract(extract_args);
    else if (cluster->parsed()) run_cluster(cluster_args);
    else if (eval->parsed()) run_eval(eval_args);
    else if (pipe->parsed()) run_pipeline_cmd(pipe_args);
    return kExitOk;
  } catch (const CLI::ParseError &e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  } catch (const DataError &e) {
    std::fprintf(stderr, "data error: %s\n", e.what());
    return kExitData;
  } catch (const CheckpointError &e) {
    std::fprintf(stderr, "checkpoint error: %s\n", e.what());
    return kExitData;
  } catch (const DimensionError &e) {
    std::fprintf(stderr, "data error: %s\n", e.what());
    return kExitData;
  } catch (const NumericError &e) {
    std::fprintf(stderr, "numeric failure: %s\n", e.what());
    return kExitNumeric;
  } catch (const std::invalid_argument &e) {
    std::fprintf(stderr, "usage error: %s\n", e.what());
    return kExitUsage;
  } catch (const std::exception &e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitNumeric;
  }
}
