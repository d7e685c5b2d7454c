// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "kgcl/training.hpp"
#include "kgcl/tsne.hpp"

namespace kgcl {

/// Flat key=value run configuration. Every module default is a key here;
/// unknown keys are rejected. '#' starts a comment.
struct RunConfig {
  // paths
  std::string dataset_dir;
  std::string test_dir;
  std::string glove_path;
  std::string checkpoint;
  std::string checkpoint_out;
  std::string out_dir = ".";

  // relation semantics
  int glove_dim = 300;

  // encoder / subgraph
  int hops = 3;
  int embed_dim = 32;
  int iterations = 3;
  int n_c = 5;

  // dimensionality reduction
  std::string reducer = "tsne";  // tsne | pca
  int d_r = 2;
  double perplexity = 30.0;
  int tsne_iters = 1000;
  double tsne_learning_rate = 200.0;
  double tsne_exaggeration = 12.0;
  int tsne_exaggeration_iters = 250;
  double tsne_momentum_initial = 0.5;
  double tsne_momentum_final = 0.8;
  int tsne_momentum_switch = 250;

  // training
  double tau = 0.5;
  double learning_rate = 1e-3;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  int epochs_pretrain = 10;
  int epochs_finetune = 20;
  int batch_size = 16;
  int negatives_per_positive = 1;
  std::string ablation = "none";
  std::string sim = "flatten";         // flatten | mean-rows
  std::string aggregation = "sum";     // sum | mean
  bool include_positive_in_denominator = false;
  bool filtered_corruption = true;
  int kmeans_restarts = 10;
  int empty_resample_retries = 10;

  // evaluation
  std::string longtail_thresholds = "5,10,20";
  bool extra_metrics = false;
  std::string unseen_relation;
  int unseen_cluster_override = -1;

  // run control
  std::uint64_t seed = 42;
  int threads = 1;

  void set(const std::string& key, const std::string& value);
  std::string to_text() const;  // fixed key order, parse round-trips

  TrainConfig train_config() const;
  TsneConfig tsne_config() const;
  std::vector<long> longtail_threshold_list() const;

  /// Paths may be relative to the config file's directory.
  void resolve_paths(const std::filesystem::path& base);
};

RunConfig parse_config_text(const std::string& text);
RunConfig load_config(const std::filesystem::path& path);

/// Applies "key=value" strings (command-line overrides beat file values).
void apply_overrides(RunConfig& cfg, const std::vector<std::string>& overrides);

}  // namespace kgcl
