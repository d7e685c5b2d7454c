// SPDX-License-Identifier: Apache-2.0
//
// Independent oracle implementations used to cross-check the library:
// brute-force enumeration, dynamic programming, finite differences and
// straight-line re-evaluation. These deliberately avoid the code paths
// they verify.
#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "kgcl/autodiff.hpp"
#include "kgcl/common.hpp"
#include "kgcl/encoder.hpp"
#include "kgcl/kg.hpp"
#include "kgcl/subgraph.hpp"
#include "kgcl/word_vectors.hpp"

namespace oracle {

// ---------------------------------------------------------------------
// Relation frequency: naive scan over the triplet list.
inline std::vector<long> relation_counts(const kgcl::KnowledgeGraph& g) {
  std::vector<long> counts(static_cast<std::size_t>(g.num_relations()), 0);
  for (int i = 0; i < g.num_triplets(); ++i) {
    counts[static_cast<std::size_t>(g.triplets[static_cast<std::size_t>(i)].rel)] += 1;
  }
  return counts;
}

// ---------------------------------------------------------------------
// Exhaustive segmentation of a string into vocabulary words (min length
// 2), maximizing covered length and preferring longer earlier words on
// ties; dropped characters are allowed.
inline std::vector<std::string> dp_segmentation(const std::string& s,
                                                const kgcl::WordVectors& vocab) {
  const std::size_t n = s.size();
  // best[i] = (covered, tokens) for suffix starting at i.
  std::vector<long> covered(n + 1, -1);
  std::vector<std::vector<std::string>> tokens(n + 1);
  covered[n] = 0;
  for (std::size_t i = n; i-- > 0;) {
    // Option: drop s[i].
    covered[i] = covered[i + 1];
    tokens[i] = tokens[i + 1];
    // Option: take a vocabulary word starting at i (longest wins ties).
    for (std::size_t len = n - i; len >= 2; --len) {
      const std::string word = s.substr(i, len);
      if (!vocab.contains(word)) continue;
      const long c = static_cast<long>(len) + covered[i + len];
      if (c > covered[i]) {
        covered[i] = c;
        tokens[i] = {word};
        tokens[i].insert(tokens[i].end(), tokens[i + len].begin(), tokens[i + len].end());
      }
    }
  }
  return tokens[0];
}

// ---------------------------------------------------------------------
// Row entropy of a conditional affinity row, recomputed directly.
inline double row_perplexity(const kgcl::Matrix& conditional, int row) {
  double h = 0.0;
  for (int j = 0; j < conditional.cols(); ++j) {
    const double p = conditional(row, j);
    if (p > 0.0) h -= p * std::log2(p);
  }
  return std::exp2(h);
}

// ---------------------------------------------------------------------
// Exhaustive optimum over all 2-partitions (centroid = mean, objective =
// within-cluster sum of squared distances). n must be small.
inline double best_two_partition_objective(const kgcl::Matrix& points) {
  const int n = static_cast<int>(points.rows());
  double best = std::numeric_limits<double>::max();
  for (unsigned mask = 1; mask + 1 < (1u << n); ++mask) {
    Eigen::RowVectorXd mean_a = Eigen::RowVectorXd::Zero(points.cols());
    Eigen::RowVectorXd mean_b = Eigen::RowVectorXd::Zero(points.cols());
    int count_a = 0, count_b = 0;
    for (int i = 0; i < n; ++i) {
      if (mask & (1u << i)) {
        mean_a += points.row(i);
        ++count_a;
      } else {
        mean_b += points.row(i);
        ++count_b;
      }
    }
    mean_a /= count_a;
    mean_b /= count_b;
    double obj = 0.0;
    for (int i = 0; i < n; ++i) {
      obj += (mask & (1u << i)) ? (points.row(i) - mean_a).squaredNorm()
                                : (points.row(i) - mean_b).squaredNorm();
    }
    best = std::min(best, obj);
  }
  return best;
}

// ---------------------------------------------------------------------
// Subgraph oracle: all nodes reachable from `source` by directed walks of
// length <= depth (recursive enumeration, revisits allowed).
inline void enumerate_walks(const kgcl::KnowledgeGraph& g, int node, int remaining, bool forward,
                            std::set<int>& reached) {
  reached.insert(node);
  if (remaining == 0) return;
  const auto& adj = forward ? g.out_index[static_cast<std::size_t>(node)]
                            : g.in_index[static_cast<std::size_t>(node)];
  for (const kgcl::Neighbor& nb : adj) {
    enumerate_walks(g, nb.other, remaining - 1, forward, reached);
  }
}

struct SubgraphOracle {
  std::set<int> nodes;                                   // original entity ids
  std::set<std::tuple<int, int, int>> edges;             // (head, rel, tail), original ids
  std::map<int, int> dist_from_head;                     // clamped to m+1
  std::map<int, int> dist_to_tail;
  bool empty = true;
};

/// Mirrors the extraction contract with independent machinery: walk
/// enumeration for the neighborhoods and Floyd-Warshall for the labels.
inline SubgraphOracle subgraph_oracle(const kgcl::KnowledgeGraph& g, const kgcl::Triplet& target,
                                      int m) {
  SubgraphOracle out;
  std::set<int> from_head, to_tail;
  enumerate_walks(g, target.head, m, true, from_head);
  enumerate_walks(g, target.tail, m, false, to_tail);
  for (int v : from_head) {
    if (to_tail.count(v)) out.nodes.insert(v);
  }
  out.nodes.insert(target.head);
  out.nodes.insert(target.tail);

  for (const kgcl::Triplet& t : g.triplets) {
    if (t == target) continue;
    if (out.nodes.count(t.head) && out.nodes.count(t.tail)) {
      out.edges.emplace(t.head, t.rel, t.tail);
    }
  }
  out.empty = out.edges.empty();
  if (out.empty) return out;

  // Floyd-Warshall over the induced subgraph.
  std::vector<int> ids(out.nodes.begin(), out.nodes.end());
  std::map<int, int> index;
  for (std::size_t i = 0; i < ids.size(); ++i) index[ids[i]] = static_cast<int>(i);
  const int n = static_cast<int>(ids.size());
  const int inf = 1 << 20;
  std::vector<std::vector<int>> dist(static_cast<std::size_t>(n),
                                     std::vector<int>(static_cast<std::size_t>(n), inf));
  for (int i = 0; i < n; ++i) dist[static_cast<std::size_t>(i)][static_cast<std::size_t>(i)] = 0;
  for (const auto& [h, r, t] : out.edges) {
    (void)r;
    auto& d = dist[static_cast<std::size_t>(index[h])][static_cast<std::size_t>(index[t])];
    d = std::min(d, 1);
  }
  for (int k = 0; k < n; ++k) {
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) {
        dist[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] =
            std::min(dist[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)],
                     dist[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)] +
                         dist[static_cast<std::size_t>(k)][static_cast<std::size_t>(j)]);
      }
    }
  }
  const int clamp = m + 1;
  for (int v : out.nodes) {
    const int dh = dist[static_cast<std::size_t>(index[target.head])][static_cast<std::size_t>(index[v])];
    const int dt = dist[static_cast<std::size_t>(index[v])][static_cast<std::size_t>(index[target.tail])];
    out.dist_from_head[v] = std::min(dh, clamp);
    out.dist_to_tail[v] = std::min(dt, clamp);
  }
  return out;
}

/// Seeded random directed multigraph in GraIL text shape.
inline kgcl::KnowledgeGraph random_graph(kgcl::Rng& rng, int max_nodes, int max_edges,
                                         int max_relations) {
  const int n = 2 + static_cast<int>(rng.below(static_cast<std::uint64_t>(max_nodes - 1)));
  const int r = 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(max_relations)));
  const int e = 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(max_edges)));
  std::vector<kgcl::RawTriplet> raw;
  for (int i = 0; i < e; ++i) {
    raw.push_back({"n" + std::to_string(rng.below(static_cast<std::uint64_t>(n))),
                   "r" + std::to_string(rng.below(static_cast<std::uint64_t>(r))),
                   "n" + std::to_string(rng.below(static_cast<std::uint64_t>(n)))});
  }
  return kgcl::build_graph(raw);
}

// ---------------------------------------------------------------------
// Central finite differences against a scalar-rebuilding function.
// Returns the max relative error over all parameter elements, using the
// spec's normalization |g_a - g_fd| / max(1, |g_a|).
inline double max_grad_rel_error(
    const std::function<kgcl::autodiff::Tensor()>& build_loss,
    const std::vector<kgcl::autodiff::Tensor>& params, double h = 1e-5) {
  namespace ad = kgcl::autodiff;
  for (ad::Tensor p : params) p.zero_grad();
  ad::Tensor loss = build_loss();
  ad::backward(loss);
  std::vector<kgcl::Matrix> analytic;
  for (ad::Tensor p : params) {
    analytic.push_back(p.has_grad() ? p.grad() : kgcl::Matrix::Zero(p.rows(), p.cols()));
  }

  double worst = 0.0;
  for (std::size_t pi = 0; pi < params.size(); ++pi) {
    ad::Tensor p = params[pi];
    for (Eigen::Index r = 0; r < p.rows(); ++r) {
      for (Eigen::Index c = 0; c < p.cols(); ++c) {
        const double keep = p.value()(r, c);
        double up, down;
        {
          ad::NoGradGuard guard;
          p.mutable_value()(r, c) = keep + h;
          up = build_loss().scalar();
          p.mutable_value()(r, c) = keep - h;
          down = build_loss().scalar();
          p.mutable_value()(r, c) = keep;
        }
        const double fd = (up - down) / (2.0 * h);
        const double ga = analytic[pi](r, c);
        worst = std::max(worst, std::abs(ga - fd) / std::max(1.0, std::abs(ga)));
      }
    }
  }
  for (ad::Tensor p : params) p.zero_grad();
  return worst;
}

// ---------------------------------------------------------------------
// Straight-line evaluation of the encoder equations with plain Eigen
// (no autodiff), mirroring the published update rules directly.
struct PlainEncoder {
  kgcl::Matrix node_proj, edge_proj;
  std::vector<kgcl::Matrix> layer_w;
  std::vector<kgcl::Matrix> layer_b;  // 1 x d
  kgcl::Matrix head_w;                // 2d x 1
  double head_b = 0.0;
};

inline PlainEncoder plain_from(const kgcl::EncoderParams& p) {
  PlainEncoder out;
  out.node_proj = p.node_proj.value();
  out.edge_proj = p.edge_proj.value();
  for (const auto& l : p.layers) {
    out.layer_w.push_back(l.weight.value());
    out.layer_b.push_back(l.bias.value());
  }
  out.head_w = p.head_weight.value();
  out.head_b = p.head_bias.value()(0, 0);
  return out;
}

struct PlainForward {
  kgcl::Matrix representation;  // 2 x d
  double min_abs_preactivation = std::numeric_limits<double>::max();
  double score = 0.0;
};

inline PlainForward plain_encode(const kgcl::Subgraph& sg, const PlainEncoder& enc) {
  const kgcl::Incidence inc = kgcl::build_incidence(sg);
  const kgcl::Matrix labels = kgcl::label_nodes(sg);
  kgcl::Matrix ah = kgcl::Matrix(inc.head);
  kgcl::Matrix at = kgcl::Matrix(inc.tail);

  kgcl::Matrix nodes = labels * enc.node_proj;
  const kgcl::Matrix nodes0 = nodes;
  kgcl::Matrix edges = inc.edge_onehot * enc.edge_proj;
  PlainForward out;
  for (std::size_t k = 0; k < enc.layer_w.size(); ++k) {
    edges = edges + ah.transpose() * nodes + at.transpose() * nodes;
    kgcl::Matrix pre = (ah * edges + at * edges + nodes) * enc.layer_w[k];
    pre.rowwise() += enc.layer_b[k].row(0);
    out.min_abs_preactivation = std::min(out.min_abs_preactivation, pre.cwiseAbs().minCoeff());
    nodes = pre.cwiseMax(0.0);
  }
  const kgcl::Matrix v = nodes0 + nodes;
  out.representation.resize(2, v.cols());
  out.representation.row(0) = v.row(sg.head_local);
  out.representation.row(1) = v.row(sg.tail_local);
  kgcl::Matrix flat(1, 2 * v.cols());
  flat << out.representation.row(0), out.representation.row(1);
  out.score = (flat * enc.head_w)(0, 0) + enc.head_b;
  return out;
}

// ---------------------------------------------------------------------
// Pairwise AUC-ROC: P(pos > neg) + 0.5 P(pos = neg), enumerated.
inline double pairwise_auc(const std::vector<double>& pos, const std::vector<double>& neg) {
  double wins = 0.0;
  for (double p : pos) {
    for (double n : neg) {
      if (p > n) wins += 1.0;
      else if (p == n) wins += 0.5;
    }
  }
  return wins / (static_cast<double>(pos.size()) * static_cast<double>(neg.size()));
}

/// Rank-by-rank average precision with explicit tie-group precision.
inline double rank_by_rank_ap(const std::vector<double>& pos, const std::vector<double>& neg) {
  std::vector<std::pair<double, int>> items;
  for (double s : pos) items.emplace_back(s, 1);
  for (double s : neg) items.emplace_back(s, 0);
  std::sort(items.begin(), items.end(),
            [](const auto& a, const auto& b) { return a.first > b.first; });
  double ap = 0.0;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (!items[i].second) continue;
    // Count everything ranked at or above this item's tie group.
    long tp = 0, total = 0;
    for (std::size_t j = 0; j < items.size(); ++j) {
      if (items[j].first >= items[i].first) {
        ++total;
        tp += items[j].second;
      }
    }
    ap += static_cast<double>(tp) / static_cast<double>(total);
  }
  return ap / static_cast<double>(pos.size());
}

}  // namespace oracle
