// SPDX-License-Identifier: Apache-2.0
#include "kgcl/subgraph.hpp"

#include <algorithm>
#include <deque>
#include <stdexcept>
#include <unordered_map>

namespace kgcl {

namespace {

/// Bounded BFS over the full graph. `forward` follows edge direction from
/// the source; otherwise edges are traversed in reverse.
std::unordered_map<int, int> bounded_bfs(const KnowledgeGraph& g, int source, int max_depth,
                                         bool forward) {
  std::unordered_map<int, int> dist;
  dist.emplace(source, 0);
  std::deque<int> frontier{source};
  while (!frontier.empty()) {
    const int u = frontier.front();
    frontier.pop_front();
    const int du = dist[u];
    if (du == max_depth) continue;
    const auto& adj = forward ? g.out_index[static_cast<std::size_t>(u)]
                              : g.in_index[static_cast<std::size_t>(u)];
    for (const Neighbor& nb : adj) {
      if (dist.emplace(nb.other, du + 1).second) frontier.push_back(nb.other);
    }
  }
  return dist;
}

/// BFS over local adjacency lists; unreached nodes keep distance -1.
std::vector<int> local_bfs(const std::vector<std::vector<int>>& adj, int source) {
  std::vector<int> dist(adj.size(), -1);
  dist[static_cast<std::size_t>(source)] = 0;
  std::deque<int> frontier{source};
  while (!frontier.empty()) {
    const int u = frontier.front();
    frontier.pop_front();
    for (int v : adj[static_cast<std::size_t>(u)]) {
      if (dist[static_cast<std::size_t>(v)] < 0) {
        dist[static_cast<std::size_t>(v)] = dist[static_cast<std::size_t>(u)] + 1;
        frontier.push_back(v);
      }
    }
  }
  return dist;
}

}  // namespace

std::optional<Subgraph> extract(const KnowledgeGraph& g, const Triplet& target, int m) {
  if (m < 1) throw std::invalid_argument("extract: hop budget must be at least 1");
  if (target.head < 0 || target.head >= g.num_entities() || target.tail < 0 ||
      target.tail >= g.num_entities()) {
    throw std::invalid_argument("extract: target entities not present in the graph");
  }

  const auto from_head = bounded_bfs(g, target.head, m, /*forward=*/true);
  const auto to_tail = bounded_bfs(g, target.tail, m, /*forward=*/false);

  std::vector<int> node_ids;
  for (const auto& [node, d] : from_head) {
    (void)d;
    if (to_tail.count(node) > 0) node_ids.push_back(node);
  }
  for (int forced : {target.head, target.tail}) {
    if (std::find(node_ids.begin(), node_ids.end(), forced) == node_ids.end()) {
      node_ids.push_back(forced);
    }
  }
  std::sort(node_ids.begin(), node_ids.end());

  std::unordered_map<int, int> local;
  for (std::size_t i = 0; i < node_ids.size(); ++i) local.emplace(node_ids[i], static_cast<int>(i));

  // Induced edges, dropping every copy of the exact target triplet.
  std::vector<SubgraphEdge> edges;
  for (int u : node_ids) {
    for (const Neighbor& nb : g.out_index[static_cast<std::size_t>(u)]) {
      auto it = local.find(nb.other);
      if (it == local.end()) continue;
      if (u == target.head && nb.rel == target.rel && nb.other == target.tail) continue;
      edges.push_back({local[u], nb.rel, it->second});
    }
  }
  if (edges.empty()) return std::nullopt;

  // Distances inside the extracted subgraph (target edge already removed).
  const int n = static_cast<int>(node_ids.size());
  std::vector<std::vector<int>> adj_out(static_cast<std::size_t>(n));
  std::vector<std::vector<int>> adj_in(static_cast<std::size_t>(n));
  for (const SubgraphEdge& e : edges) {
    adj_out[static_cast<std::size_t>(e.head)].push_back(e.tail);
    adj_in[static_cast<std::size_t>(e.tail)].push_back(e.head);
  }
  const int clamp = m + 1;
  std::vector<int> d_head = local_bfs(adj_out, local[target.head]);
  std::vector<int> d_tail = local_bfs(adj_in, local[target.tail]);
  for (int i = 0; i < n; ++i) {
    auto& dh = d_head[static_cast<std::size_t>(i)];
    auto& dt = d_tail[static_cast<std::size_t>(i)];
    dh = (dh < 0 || dh > clamp) ? clamp : dh;
    dt = (dt < 0 || dt > clamp) ? clamp : dt;
  }

  // Canonical node order: distance from head, ties by entity id.
  std::vector<int> order(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) order[static_cast<std::size_t>(i)] = i;
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    const int da = d_head[static_cast<std::size_t>(a)];
    const int db = d_head[static_cast<std::size_t>(b)];
    if (da != db) return da < db;
    return node_ids[static_cast<std::size_t>(a)] < node_ids[static_cast<std::size_t>(b)];
  });
  std::vector<int> new_index(static_cast<std::size_t>(n));
  for (int pos = 0; pos < n; ++pos) new_index[static_cast<std::size_t>(order[static_cast<std::size_t>(pos)])] = pos;

  Subgraph sg;
  sg.hops = m;
  sg.num_relations = g.num_relations();
  sg.nodes.resize(static_cast<std::size_t>(n));
  sg.dist_from_head.resize(static_cast<std::size_t>(n));
  sg.dist_to_tail.resize(static_cast<std::size_t>(n));
  for (int old = 0; old < n; ++old) {
    const int pos = new_index[static_cast<std::size_t>(old)];
    sg.nodes[static_cast<std::size_t>(pos)] = node_ids[static_cast<std::size_t>(old)];
    sg.dist_from_head[static_cast<std::size_t>(pos)] = d_head[static_cast<std::size_t>(old)];
    sg.dist_to_tail[static_cast<std::size_t>(pos)] = d_tail[static_cast<std::size_t>(old)];
  }
  sg.head_local = new_index[static_cast<std::size_t>(local[target.head])];
  sg.tail_local = new_index[static_cast<std::size_t>(local[target.tail])];
  sg.edges.reserve(edges.size());
  for (SubgraphEdge e : edges) {
    e.head = new_index[static_cast<std::size_t>(e.head)];
    e.tail = new_index[static_cast<std::size_t>(e.tail)];
    sg.edges.push_back(e);
  }
  std::sort(sg.edges.begin(), sg.edges.end(), [](const SubgraphEdge& a, const SubgraphEdge& b) {
    if (a.head != b.head) return a.head < b.head;
    if (a.tail != b.tail) return a.tail < b.tail;
    return a.rel < b.rel;
  });
  return sg;
}

Matrix label_nodes(const Subgraph& sg) {
  const int half = sg.hops + 2;
  Matrix labels = Matrix::Zero(sg.num_nodes(), 2 * half);
  for (int i = 0; i < sg.num_nodes(); ++i) {
    labels(i, sg.dist_from_head[static_cast<std::size_t>(i)]) = 1.0;
    labels(i, half + sg.dist_to_tail[static_cast<std::size_t>(i)]) = 1.0;
  }
  return labels;
}

Incidence build_incidence(const Subgraph& sg) {
  Incidence inc;
  inc.head.resize(sg.num_nodes(), sg.num_edges());
  inc.tail.resize(sg.num_nodes(), sg.num_edges());
  inc.edge_onehot = Matrix::Zero(sg.num_edges(), sg.num_relations);
  std::vector<Eigen::Triplet<double>> head_entries, tail_entries;
  head_entries.reserve(sg.edges.size());
  tail_entries.reserve(sg.edges.size());
  for (int j = 0; j < sg.num_edges(); ++j) {
    const SubgraphEdge& e = sg.edges[static_cast<std::size_t>(j)];
    head_entries.emplace_back(e.head, j, 1.0);
    tail_entries.emplace_back(e.tail, j, 1.0);
    inc.edge_onehot(j, e.rel) = 1.0;
  }
  inc.head.setFromTriplets(head_entries.begin(), head_entries.end());
  inc.tail.setFromTriplets(tail_entries.begin(), tail_entries.end());
  return inc;
}

}  // namespace kgcl
