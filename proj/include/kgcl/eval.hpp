// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "kgcl/kg.hpp"

namespace kgcl {

/// Average precision over the merged score list (positive label = 1).
/// Equal scores form one tie group; every positive in a group takes the
/// precision at the end of the group, so an all-tied pool scores the
/// positive fraction.
double average_precision(const std::vector<double>& positive_scores,
                         const std::vector<double>& negative_scores);

/// Rank-based AUC-ROC with midrank tie handling: equals
/// P(pos > neg) + 0.5 P(pos = neg) over all positive/negative pairs.
double auc_roc(const std::vector<double>& positive_scores,
               const std::vector<double>& negative_scores);

/// Pessimistic rank among 1 + 50 candidates: ties count against the
/// positive. Requires exactly 50 negative scores.
bool hits_at_10(double positive_score, const std::vector<double>& negative_scores);

/// rank = 1 + |{neg > pos}| + |{neg = pos}| (no count restriction).
long pessimistic_rank(double positive_score, const std::vector<double>& negative_scores);

struct ScoredTriplet {
  Triplet triplet;
  double score = 0.0;
};

struct EvalPools {
  std::vector<ScoredTriplet> positives;
  std::vector<ScoredTriplet> paired_negatives;               // one per positive (AUC pools)
  std::vector<std::vector<ScoredTriplet>> ranking_negatives;  // 50 per positive (Hits@10)
  long n_skipped_empty = 0;
  std::uint64_t negative_seed = 0;
};

struct RelationMetrics {
  int rel = 0;
  long n = 0;
  double auc_pr = 0.0;
  double auc_roc = 0.0;
  double hits_at_10 = 0.0;
};

struct EvalReport {
  double auc_pr = 0.0;
  double auc_roc = 0.0;
  double hits_at_10 = 0.0;
  std::optional<double> mrr;       // extra metrics, off by default
  std::optional<double> hits_at_1;
  long n_scored = 0;
  long n_skipped_empty = 0;
  std::vector<RelationMetrics> per_relation;
};

EvalReport summarize(const EvalPools& pools, bool extra_metrics = false);

struct LongTailRow {
  long threshold = 0;
  long n = 0;
  std::optional<double> auc_pr;
  std::optional<double> auc_roc;
};

/// Restricts the pool to positives whose relation occurs fewer than
/// `threshold` times in the training graph and reports both AUC flavors.
std::vector<LongTailRow> long_tail_eval(const std::vector<long>& train_relation_frequency,
                                        const EvalPools& pools,
                                        const std::vector<long>& thresholds);

}  // namespace kgcl
