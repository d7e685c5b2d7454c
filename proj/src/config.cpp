// SPDX-License-Identifier: Apache-2.0
#include "kgcl/config.hpp"

#include <fmt/format.h>

#include <charconv>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace kgcl {

namespace {

long parse_long(const std::string& key, const std::string& value) {
  long out = 0;
  const auto [p, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
  if (ec != std::errc() || p != value.data() + value.size()) {
    throw std::invalid_argument(fmt::format("config: key '{}' expects an integer, got '{}'", key, value));
  }
  return out;
}

int parse_int(const std::string& key, const std::string& value) {
  return static_cast<int>(parse_long(key, value));
}

std::uint64_t parse_u64(const std::string& key, const std::string& value) {
  std::uint64_t out = 0;
  const auto [p, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
  if (ec != std::errc() || p != value.data() + value.size()) {
    throw std::invalid_argument(
        fmt::format("config: key '{}' expects an unsigned integer, got '{}'", key, value));
  }
  return out;
}

double parse_double(const std::string& key, const std::string& value) {
  double out = 0.0;
  const auto [p, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
  if (ec != std::errc() || p != value.data() + value.size()) {
    throw std::invalid_argument(fmt::format("config: key '{}' expects a number, got '{}'", key, value));
  }
  return out;
}

bool parse_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1") return true;
  if (value == "false" || value == "0") return false;
  throw std::invalid_argument(fmt::format("config: key '{}' expects true/false, got '{}'", key, value));
}

std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r");
  if (begin == std::string::npos) return "";
  const auto end = s.find_last_not_of(" \t\r");
  return s.substr(begin, end - begin + 1);
}

}  // namespace

void RunConfig::set(const std::string& key, const std::string& value) {
  if (key == "dataset_dir") dataset_dir = value;
  else if (key == "test_dir") test_dir = value;
  else if (key == "glove_path") glove_path = value;
  else if (key == "checkpoint") checkpoint = value;
  else if (key == "checkpoint_out") checkpoint_out = value;
  else if (key == "out_dir") out_dir = value;
  else if (key == "glove_dim") glove_dim = parse_int(key, value);
  else if (key == "hops") hops = parse_int(key, value);
  else if (key == "embed_dim") embed_dim = parse_int(key, value);
  else if (key == "iterations") iterations = parse_int(key, value);
  else if (key == "n_c") n_c = parse_int(key, value);
  else if (key == "reducer") {
    if (value != "tsne" && value != "pca") {
      throw std::invalid_argument(fmt::format("config: reducer must be tsne or pca, got '{}'", value));
    }
    reducer = value;
  } else if (key == "d_r") d_r = parse_int(key, value);
  else if (key == "perplexity") perplexity = parse_double(key, value);
  else if (key == "tsne_iters") tsne_iters = parse_int(key, value);
  else if (key == "tsne_learning_rate") tsne_learning_rate = parse_double(key, value);
  else if (key == "tsne_exaggeration") tsne_exaggeration = parse_double(key, value);
  else if (key == "tsne_exaggeration_iters") tsne_exaggeration_iters = parse_int(key, value);
  else if (key == "tsne_momentum_initial") tsne_momentum_initial = parse_double(key, value);
  else if (key == "tsne_momentum_final") tsne_momentum_final = parse_double(key, value);
  else if (key == "tsne_momentum_switch") tsne_momentum_switch = parse_int(key, value);
  else if (key == "tau") tau = parse_double(key, value);
  else if (key == "learning_rate") learning_rate = parse_double(key, value);
  else if (key == "adam_beta1") adam_beta1 = parse_double(key, value);
  else if (key == "adam_beta2") adam_beta2 = parse_double(key, value);
  else if (key == "adam_eps") adam_eps = parse_double(key, value);
  else if (key == "epochs_pretrain") epochs_pretrain = parse_int(key, value);
  else if (key == "epochs_finetune") epochs_finetune = parse_int(key, value);
  else if (key == "batch_size") batch_size = parse_int(key, value);
  else if (key == "negatives_per_positive") negatives_per_positive = parse_int(key, value);
  else if (key == "ablation") {
    if (!parse_ablation(value)) {
      throw std::invalid_argument(fmt::format("config: unknown ablation '{}'", value));
    }
    ablation = value;
  } else if (key == "sim") {
    if (value != "flatten" && value != "mean-rows") {
      throw std::invalid_argument(fmt::format("config: sim must be flatten or mean-rows, got '{}'", value));
    }
    sim = value;
  } else if (key == "aggregation") {
    if (value != "sum" && value != "mean") {
      throw std::invalid_argument(fmt::format("config: aggregation must be sum or mean, got '{}'", value));
    }
    aggregation = value;
  } else if (key == "include_positive_in_denominator") {
    include_positive_in_denominator = parse_bool(key, value);
  } else if (key == "filtered_corruption") filtered_corruption = parse_bool(key, value);
  else if (key == "kmeans_restarts") kmeans_restarts = parse_int(key, value);
  else if (key == "empty_resample_retries") empty_resample_retries = parse_int(key, value);
  else if (key == "longtail_thresholds") longtail_thresholds = value;
  else if (key == "extra_metrics") extra_metrics = parse_bool(key, value);
  else if (key == "unseen_relation") unseen_relation = value;
  else if (key == "unseen_cluster_override") unseen_cluster_override = parse_int(key, value);
  else if (key == "seed") seed = parse_u64(key, value);
  else if (key == "threads") threads = parse_int(key, value);
  else throw std::invalid_argument(fmt::format("config: unknown key '{}'", key));
}

std::string RunConfig::to_text() const {
  std::string s;
  auto emit = [&s](const char* key, const auto& value) {
    s += fmt::format("{}={}\n", key, value);
  };
  emit("dataset_dir", dataset_dir);
  emit("test_dir", test_dir);
  emit("glove_path", glove_path);
  emit("checkpoint", checkpoint);
  emit("checkpoint_out", checkpoint_out);
  emit("out_dir", out_dir);
  emit("glove_dim", glove_dim);
  emit("hops", hops);
  emit("embed_dim", embed_dim);
  emit("iterations", iterations);
  emit("n_c", n_c);
  emit("reducer", reducer);
  emit("d_r", d_r);
  emit("perplexity", perplexity);
  emit("tsne_iters", tsne_iters);
  emit("tsne_learning_rate", tsne_learning_rate);
  emit("tsne_exaggeration", tsne_exaggeration);
  emit("tsne_exaggeration_iters", tsne_exaggeration_iters);
  emit("tsne_momentum_initial", tsne_momentum_initial);
  emit("tsne_momentum_final", tsne_momentum_final);
  emit("tsne_momentum_switch", tsne_momentum_switch);
  emit("tau", tau);
  emit("learning_rate", learning_rate);
  emit("adam_beta1", adam_beta1);
  emit("adam_beta2", adam_beta2);
  emit("adam_eps", adam_eps);
  emit("epochs_pretrain", epochs_pretrain);
  emit("epochs_finetune", epochs_finetune);
  emit("batch_size", batch_size);
  emit("negatives_per_positive", negatives_per_positive);
  emit("ablation", ablation);
  emit("sim", sim);
  emit("aggregation", aggregation);
  emit("include_positive_in_denominator", include_positive_in_denominator);
  emit("filtered_corruption", filtered_corruption);
  emit("kmeans_restarts", kmeans_restarts);
  emit("empty_resample_retries", empty_resample_retries);
  emit("longtail_thresholds", longtail_thresholds);
  emit("extra_metrics", extra_metrics);
  emit("unseen_relation", unseen_relation);
  emit("unseen_cluster_override", unseen_cluster_override);
  emit("seed", seed);
  emit("threads", threads);
  return s;
}

TrainConfig RunConfig::train_config() const {
  TrainConfig t;
  t.tau = tau;
  t.hops = hops;
  t.embed_dim = embed_dim;
  t.iterations = iterations;
  t.n_c = n_c;
  t.epochs_pretrain = epochs_pretrain;
  t.epochs_finetune = epochs_finetune;
  t.batch_size = batch_size;
  t.learning_rate = learning_rate;
  t.adam_beta1 = adam_beta1;
  t.adam_beta2 = adam_beta2;
  t.adam_eps = adam_eps;
  t.negatives_per_positive_finetune = negatives_per_positive;
  t.seed = seed;
  t.ablation = *parse_ablation(ablation);
  t.mean_aggregation = aggregation == "mean";
  t.sim_mean_rows = sim == "mean-rows";
  t.include_positive_in_denominator = include_positive_in_denominator;
  t.empty_resample_retries = empty_resample_retries;
  t.filtered_corruption = filtered_corruption;
  t.kmeans_restarts = kmeans_restarts;
  return t;
}

TsneConfig RunConfig::tsne_config() const {
  TsneConfig t;
  t.output_dim = d_r;
  t.perplexity = perplexity;
  t.iters = tsne_iters;
  t.learning_rate = tsne_learning_rate;
  t.exaggeration_factor = tsne_exaggeration;
  t.exaggeration_iters = tsne_exaggeration_iters;
  t.momentum_initial = tsne_momentum_initial;
  t.momentum_final = tsne_momentum_final;
  t.momentum_switch_iter = tsne_momentum_switch;
  t.seed = SeedBundle::from_master(seed).clustering;
  return t;
}

std::vector<long> RunConfig::longtail_threshold_list() const {
  std::vector<long> out;
  std::stringstream ss(longtail_thresholds);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(parse_long("longtail_thresholds", item));
  }
  return out;
}

void RunConfig::resolve_paths(const std::filesystem::path& base) {
  auto resolve = [&base](std::string& p) {
    if (!p.empty() && std::filesystem::path(p).is_relative()) {
      p = (base / p).string();
    }
  };
  resolve(dataset_dir);
  resolve(test_dir);
  resolve(glove_path);
  resolve(checkpoint);
  resolve(checkpoint_out);
  resolve(out_dir);
}

RunConfig parse_config_text(const std::string& text) {
  RunConfig cfg;
  std::stringstream ss(text);
  std::string line;
  long line_no = 0;
  while (std::getline(ss, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw std::invalid_argument(fmt::format("config line {}: expected key=value", line_no));
    }
    cfg.set(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
  return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error(fmt::format("cannot open config file '{}'", path.string()));
  std::stringstream buffer;
  buffer << in.rdbuf();
  RunConfig cfg = parse_config_text(buffer.str());
  cfg.resolve_paths(path.parent_path());
  return cfg;
}

void apply_overrides(RunConfig& cfg, const std::vector<std::string>& overrides) {
  for (const std::string& kv : overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) {
      throw std::invalid_argument(fmt::format("override '{}' is not key=value", kv));
    }
    cfg.set(trim(kv.substr(0, eq)), trim(kv.substr(eq + 1)));
  }
}

}  // namespace kgcl
