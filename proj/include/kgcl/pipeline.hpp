// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "kgcl/checkpoint.hpp"
#include "kgcl/cluster.hpp"
#include "kgcl/config.hpp"
#include "kgcl/eval.hpp"
#include "kgcl/kg.hpp"
#include "kgcl/training.hpp"
#include "kgcl/word_vectors.hpp"

namespace kgcl {

struct Dataset {
  KnowledgeGraph train;
  std::vector<Triplet> valid;
  std::vector<Triplet> test;
  TripletSet all_true;  // train + valid + test, for filtered corruption
};

/// Loads <dir>/{train,valid,test}.txt. Relations of valid/test must exist
/// in the chosen vocabulary (train's own, or `relation_vocab` when the
/// split is an inductive test graph sharing the training relations).
Dataset load_dataset(const std::filesystem::path& dir, const Vocab* relation_vocab = nullptr);

/// Semantics -> reduction -> k-means, honoring the ablation and reducer
/// settings. Falls back to the raw semantic vectors when n_r < 4 (t-SNE
/// undefined). Returns the fitted clusters and the reduced embedding.
struct ClusterFit {
  ClusterModel clusters;
  Matrix reduced;
};
ClusterFit fit_clusters(const KnowledgeGraph& g, const WordVectors& wv, const RunConfig& cfg);

/// Extract + encode + score with the relation's cluster encoder; nullopt
/// for empty subgraphs. Never records on the tape.
std::optional<double> score_triplet(const KnowledgeGraph& facts, ModelState& model,
                                    const Triplet& t, const TrainConfig& cfg);

/// Scores every query against its corruption pools: one paired negative
/// (AUC pools) and 50 ranking negatives (Hits@10), all with non-empty
/// subgraphs. Deterministic per seed and per item, thread count does not
/// change results.
EvalPools build_eval_pools(const KnowledgeGraph& facts, const std::vector<Triplet>& queries,
                           ModelState& model, const TrainConfig& cfg,
                           std::uint64_t negative_seed, const TripletSet* corruption_filter,
                           int threads);

struct UnseenCase {
  Triplet triplet;          // ids in the protocol graph's vocabulary
  int label = 1;            // +1 positive, -1 corruption
  double score = 0.0;
};

struct UnseenReport {
  std::string relation;
  int assigned_cluster = -1;
  std::string nearest_relation;
  std::vector<std::string> cluster_relations;
  std::vector<UnseenCase> cases;  // positive immediately followed by its corruption
  double positives_above_corruption = 0.0;
  long n_scored = 0;
  long n_skipped_empty = 0;
  KnowledgeGraph graph;  // vocabulary for rendering the cases
};

/// Hold-out protocol: drop every triplet of `relation` from the training
/// graph, run the full pipeline on the rest, then assign the held-out
/// relation a cluster by semantic nearest neighbor and score the
/// eliminated triplets against paired corruptions.
UnseenReport unseen_relation_protocol(const Dataset& data, const WordVectors& wv,
                                      const std::string& relation, const RunConfig& cfg);

struct PlotRow {
  double x = 0.0;
  double y = 0.0;
  int cluster_id = 0;
  std::string relation;
};

/// Encodes every training triplet with its cluster encoder and reduces
/// the representations to 2-D for the cluster-structure plot.
std::vector<PlotRow> export_plot_data(const KnowledgeGraph& g, ModelState& model,
                                      const RunConfig& cfg);

}  // namespace kgcl
