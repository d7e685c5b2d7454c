// SPDX-License-Identifier: Apache-2.0
#include "kgcl/eval.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <map>
#include <stdexcept>

namespace kgcl {

double average_precision(const std::vector<double>& positive_scores,
                         const std::vector<double>& negative_scores) {
  if (positive_scores.empty()) {
    throw std::invalid_argument("average_precision: no positives");
  }
  std::vector<std::pair<double, int>> items;  // (score, is_positive)
  items.reserve(positive_scores.size() + negative_scores.size());
  for (double s : positive_scores) items.emplace_back(s, 1);
  for (double s : negative_scores) items.emplace_back(s, 0);
  std::sort(items.begin(), items.end(),
            [](const auto& a, const auto& b) { return a.first > b.first; });

  double ap = 0.0;
  long tp = 0, seen = 0;
  std::size_t i = 0;
  while (i < items.size()) {
    std::size_t j = i;
    long group_pos = 0;
    while (j < items.size() && items[j].first == items[i].first) {
      group_pos += items[j].second;
      ++j;
    }
    tp += group_pos;
    seen += static_cast<long>(j - i);
    ap += static_cast<double>(group_pos) * static_cast<double>(tp) / static_cast<double>(seen);
    i = j;
  }
  return ap / static_cast<double>(positive_scores.size());
}

double auc_roc(const std::vector<double>& positive_scores,
               const std::vector<double>& negative_scores) {
  if (positive_scores.empty() || negative_scores.empty()) {
    throw std::invalid_argument("auc_roc: needs both positives and negatives");
  }
  // Midranks over the merged list.
  std::vector<std::pair<double, int>> items;
  items.reserve(positive_scores.size() + negative_scores.size());
  for (double s : positive_scores) items.emplace_back(s, 1);
  for (double s : negative_scores) items.emplace_back(s, 0);
  std::sort(items.begin(), items.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });

  double pos_rank_sum = 0.0;
  std::size_t i = 0;
  while (i < items.size()) {
    std::size_t j = i;
    long group_pos = 0;
    while (j < items.size() && items[j].first == items[i].first) {
      group_pos += items[j].second;
      ++j;
    }
    const double midrank = 0.5 * static_cast<double>(i + 1 + j);  // ranks are 1-based
    pos_rank_sum += midrank * static_cast<double>(group_pos);
    i = j;
  }
  const double p = static_cast<double>(positive_scores.size());
  const double n = static_cast<double>(negative_scores.size());
  return (pos_rank_sum - p * (p + 1.0) / 2.0) / (p * n);
}

long pessimistic_rank(double positive_score, const std::vector<double>& negative_scores) {
  long rank = 1;
  for (double s : negative_scores) {
    if (s >= positive_score) ++rank;
  }
  return rank;
}

bool hits_at_10(double positive_score, const std::vector<double>& negative_scores) {
  if (negative_scores.size() != 50) {
    throw std::invalid_argument(fmt::format(
        "hits_at_10: expected exactly 50 negative scores, got {}", negative_scores.size()));
  }
  return pessimistic_rank(positive_score, negative_scores) <= 10;
}

namespace {

EvalReport metrics_over(const std::vector<const ScoredTriplet*>& positives,
                        const EvalPools& pools, const std::vector<std::size_t>& indices,
                        bool extra_metrics) {
  EvalReport report;
  std::vector<double> pos, neg;
  long hits = 0, hits1 = 0;
  double mrr_sum = 0.0;
  for (std::size_t k = 0; k < positives.size(); ++k) {
    const std::size_t i = indices[k];
    pos.push_back(positives[k]->score);
    neg.push_back(pools.paired_negatives[i].score);
    std::vector<double> ranking;
    ranking.reserve(pools.ranking_negatives[i].size());
    for (const ScoredTriplet& s : pools.ranking_negatives[i]) ranking.push_back(s.score);
    const long rank = pessimistic_rank(positives[k]->score, ranking);
    if (rank <= 10) ++hits;
    if (rank <= 1) ++hits1;
    mrr_sum += 1.0 / static_cast<double>(rank);
  }
  report.n_scored = static_cast<long>(pos.size());
  report.auc_pr = average_precision(pos, neg);
  report.auc_roc = auc_roc(pos, neg);
  report.hits_at_10 = static_cast<double>(hits) / static_cast<double>(pos.size());
  if (extra_metrics) {
    report.mrr = mrr_sum / static_cast<double>(pos.size());
    report.hits_at_1 = static_cast<double>(hits1) / static_cast<double>(pos.size());
  }
  return report;
}

}  // namespace

EvalReport summarize(const EvalPools& pools, bool extra_metrics) {
  if (pools.positives.empty()) {
    throw std::invalid_argument("summarize: empty pool");
  }
  if (pools.paired_negatives.size() != pools.positives.size() ||
      pools.ranking_negatives.size() != pools.positives.size()) {
    throw std::invalid_argument("summarize: pool negative lists are misaligned");
  }
  std::vector<const ScoredTriplet*> all;
  std::vector<std::size_t> indices;
  for (std::size_t i = 0; i < pools.positives.size(); ++i) {
    all.push_back(&pools.positives[i]);
    indices.push_back(i);
  }
  EvalReport report = metrics_over(all, pools, indices, extra_metrics);
  report.n_skipped_empty = pools.n_skipped_empty;

  std::map<int, std::vector<std::size_t>> by_relation;
  for (std::size_t i = 0; i < pools.positives.size(); ++i) {
    by_relation[pools.positives[i].triplet.rel].push_back(i);
  }
  for (const auto& [rel, idx] : by_relation) {
    std::vector<const ScoredTriplet*> subset;
    for (std::size_t i : idx) subset.push_back(&pools.positives[i]);
    const EvalReport sub = metrics_over(subset, pools, idx, false);
    report.per_relation.push_back(
        {rel, sub.n_scored, sub.auc_pr, sub.auc_roc, sub.hits_at_10});
  }
  return report;
}

std::vector<LongTailRow> long_tail_eval(const std::vector<long>& train_relation_frequency,
                                        const EvalPools& pools,
                                        const std::vector<long>& thresholds) {
  std::vector<LongTailRow> rows;
  for (long threshold : thresholds) {
    LongTailRow row;
    row.threshold = threshold;
    std::vector<double> pos, neg;
    for (std::size_t i = 0; i < pools.positives.size(); ++i) {
      const int rel = pools.positives[i].triplet.rel;
      const long freq = rel < static_cast<int>(train_relation_frequency.size())
                            ? train_relation_frequency[static_cast<std::size_t>(rel)]
                            : 0;
      if (freq < threshold) {
        pos.push_back(pools.positives[i].score);
        neg.push_back(pools.paired_negatives[i].score);
      }
    }
    row.n = static_cast<long>(pos.size());
    if (row.n > 0) {
      row.auc_pr = average_precision(pos, neg);
      row.auc_roc = auc_roc(pos, neg);
    }
    rows.push_back(row);
  }
  return rows;
}

}  // namespace kgcl
