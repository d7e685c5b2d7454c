// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <optional>
#include <vector>

#include "kgcl/common.hpp"
#include "kgcl/kg.hpp"

namespace kgcl {

struct SubgraphEdge {
  int head;  // local node index
  int rel;
  int tail;  // local node index

  friend bool operator==(const SubgraphEdge&, const SubgraphEdge&) = default;
};

/// Directed enclosing subgraph around a target triplet. Node order is
/// canonical (distance from the target head, ties by original entity id);
/// edge order is sorted by (head, tail, rel). Distances are computed
/// inside the subgraph after target-edge removal and clamped to m + 1.
struct Subgraph {
  std::vector<int> nodes;  // original entity ids
  std::vector<SubgraphEdge> edges;
  int head_local = 0;
  int tail_local = 0;
  int hops = 0;           // m
  int num_relations = 0;  // one-hot width for edge features
  std::vector<int> dist_from_head;
  std::vector<int> dist_to_tail;

  int num_nodes() const { return static_cast<int>(nodes.size()); }
  int num_edges() const { return static_cast<int>(edges.size()); }
  int label_width() const { return 2 * (hops + 2); }
};

/// Intersection of the m-hop directed out-neighborhood of the head with
/// the m-hop directed in-neighborhood of the tail (head and tail always
/// included), induced edges minus the exact target edge. Returns nullopt
/// when no edge survives.
std::optional<Subgraph> extract(const KnowledgeGraph& g, const Triplet& target, int m);

/// Node-label matrix N: row i = one-hot(d_hi) ++ one-hot(d_it), each half
/// of width m + 2.
Matrix label_nodes(const Subgraph& sg);

struct Incidence {
  SparseMatrix head;       // A_he: nodes x edges
  SparseMatrix tail;       // A_te: nodes x edges
  Matrix edge_onehot;      // E: edges x n_r
};

Incidence build_incidence(const Subgraph& sg);

}  // namespace kgcl
