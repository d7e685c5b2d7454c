// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "kgcl/cluster.hpp"
#include "kgcl/encoder.hpp"
#include "kgcl/kg.hpp"
#include "kgcl/subgraph.hpp"

namespace kgcl {

enum class Ablation { None, RandomClusters, NoPretrain, NoPositive, NoNegative };

const char* ablation_name(Ablation a);
std::optional<Ablation> parse_ablation(const std::string& name);

struct TrainConfig {
  double tau = 0.5;
  int hops = 3;        // m
  int embed_dim = 32;  // d
  int iterations = 3;  // K
  int n_c = 5;
  int epochs_pretrain = 10;
  int epochs_finetune = 20;
  int batch_size = 16;
  double learning_rate = 1e-3;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  int negatives_per_positive_finetune = 1;
  std::uint64_t seed = 42;  // master seed; stages derive fixed offsets
  Ablation ablation = Ablation::None;
  bool mean_aggregation = false;
  bool sim_mean_rows = false;  // cosine over mean of rows instead of flatten
  bool include_positive_in_denominator = false;
  int empty_resample_retries = 10;
  bool filtered_corruption = true;
  int kmeans_restarts = 10;

  SeedBundle seeds() const { return SeedBundle::from_master(seed); }
};

/// Per-encoder Adam moments; each encoder has one owner so cross-cluster
/// parameter isolation is bit-exact.
struct AdamState {
  std::vector<Matrix> m;
  std::vector<Matrix> v;
  long step = 0;
};

struct ModelState {
  ClusterModel clusters;
  std::vector<EncoderParams> encoders;
  std::vector<AdamState> optimizer;

  EncoderParams& encoder_for(int rel) {
    return encoders[static_cast<std::size_t>(clusters.cluster_of(rel))];
  }
};

ModelState init_model(ClusterModel clusters, const TrainConfig& cfg);

struct ContrastiveLossOptions {
  bool no_positive = false;
  bool no_negative = false;
  bool include_positive_in_denominator = false;
  bool sim_mean_rows = false;
};

/// Contrastive objective: -sim(tar, pos)/tau + logsumexp_j(sim(tar, neg_j)/tau),
/// with the denominator over negatives only.
autodiff::Tensor contrastive_loss(const GraphRepresentation& target,
                                  const GraphRepresentation& positive,
                                  const std::vector<GraphRepresentation>& negatives, double tau,
                                  const ContrastiveLossOptions& opts = {});

/// softplus(-label * score) for label in {-1, +1}.
autodiff::Tensor soft_margin_loss(const autodiff::Tensor& score, int label);

/// One bias-corrected Adam update over every parameter of the encoder;
/// parameters without accumulated gradients are left bit-identical.
void adam_step(EncoderParams& params, AdamState& state, const TrainConfig& cfg);

/// Memoizing wrapper around extract(); extraction is pure so the cache is
/// transparent.
class SubgraphCache {
 public:
  SubgraphCache(const KnowledgeGraph& g, int hops) : g_(&g), hops_(hops) {}

  /// Returned references stay valid until trim_if_over() evicts.
  const std::optional<Subgraph>& get(const Triplet& t);
  std::size_t size() const { return cache_.size(); }

  /// Call only while no reference from get() is live.
  void trim_if_over(std::size_t max_entries);

 private:
  const KnowledgeGraph* g_;
  int hops_;
  std::unordered_map<Triplet, std::optional<Subgraph>, TripletHash> cache_;
};

struct EpochLog {
  int epoch = 0;
  std::string phase;
  double mean_loss = 0.0;
  double seconds = 0.0;
  long samples_used = 0;
  long samples_skipped = 0;
};

/// Contrastive pretraining over all training triplets with cluster-based
/// positive/negative sampling. Deterministic for a fixed seed.
std::vector<EpochLog> pretrain(const KnowledgeGraph& g, ModelState& model,
                               const TrainConfig& cfg);

/// Soft-margin fine-tuning against corrupted negatives.
std::vector<EpochLog> finetune(const KnowledgeGraph& g, ModelState& model, const TrainConfig& cfg,
                               const TripletSet* extra_corruption_filter = nullptr);

}  // namespace kgcl
