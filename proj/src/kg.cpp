// SPDX-License-Identifier: Apache-2.0
#include "kgcl/kg.hpp"

#include <fmt/format.h>

#include <fstream>
#include <stdexcept>

namespace kgcl {

std::vector<RawTriplet> load_split(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw std::runtime_error(fmt::format("cannot open triplet file '{}'", path.string()));
  }
  std::vector<RawTriplet> out;
  std::string line;
  long line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto first = line.find('\t');
    const auto second = first == std::string::npos ? std::string::npos : line.find('\t', first + 1);
    if (first == std::string::npos || second == std::string::npos ||
        line.find('\t', second + 1) != std::string::npos) {
      throw std::runtime_error(fmt::format(
          "{}:{}: expected 3 tab-separated fields", path.string(), line_no));
    }
    RawTriplet t;
    t.head = line.substr(0, first);
    t.rel = line.substr(first + 1, second - first - 1);
    t.tail = line.substr(second + 1);
    if (t.head.empty() || t.rel.empty() || t.tail.empty()) {
      throw std::runtime_error(
          fmt::format("{}:{}: empty field", path.string(), line_no));
    }
    out.push_back(std::move(t));
  }
  return out;
}

KnowledgeGraph build_graph(const std::vector<RawTriplet>& raw, const Vocab* relation_vocab) {
  KnowledgeGraph g;
  if (relation_vocab != nullptr) g.relations = *relation_vocab;
  for (const RawTriplet& r : raw) {
    Triplet t;
    t.head = g.entities.intern(r.head);
    if (relation_vocab != nullptr) {
      const auto id = g.relations.find(r.rel);
      if (!id) {
        throw std::runtime_error(fmt::format(
            "relation '{}' not present in the fixed relation vocabulary", r.rel));
      }
      t.rel = *id;
    } else {
      t.rel = g.relations.intern(r.rel);
    }
    t.tail = g.entities.intern(r.tail);
    if (g.triplet_set.insert(t).second) g.triplets.push_back(t);
  }
  g.out_index.resize(static_cast<std::size_t>(g.num_entities()));
  g.in_index.resize(static_cast<std::size_t>(g.num_entities()));
  for (int e = 0; e < g.num_triplets(); ++e) {
    const Triplet& t = g.triplets[static_cast<std::size_t>(e)];
    g.out_index[static_cast<std::size_t>(t.head)].push_back({t.rel, t.tail, e});
    g.in_index[static_cast<std::size_t>(t.tail)].push_back({t.rel, t.head, e});
  }
  return g;
}

Triplet corrupt(const Triplet& t, const KnowledgeGraph& g, Rng& rng,
                const CorruptOptions& opts) {
  const int n = g.num_entities();
  if (n < 2) throw std::invalid_argument("corrupt: graph needs at least 2 entities");
  for (int attempt = 0; attempt < opts.max_attempts; ++attempt) {
    const bool replace_head = opts.side == CorruptSide::Head ||
                              (opts.side == CorruptSide::Either && rng.below(2) == 0);
    const int current = replace_head ? t.head : t.tail;
    int candidate = rng.index(static_cast<std::size_t>(n));
    if (candidate == current) continue;
    Triplet c = t;
    (replace_head ? c.head : c.tail) = candidate;
    if (opts.filtered) {
      if (g.contains(c)) continue;
      if (opts.extra_filter != nullptr && opts.extra_filter->count(c) > 0) continue;
    }
    return c;
  }
  throw std::runtime_error(fmt::format(
      "corrupt: no valid corruption found for ({}, {}, {}) after {} attempts",
      t.head, t.rel, t.tail, opts.max_attempts));
}

std::vector<long> relation_frequency(const KnowledgeGraph& g) {
  std::vector<long> counts(static_cast<std::size_t>(g.num_relations()), 0);
  for (const Triplet& t : g.triplets) ++counts[static_cast<std::size_t>(t.rel)];
  return counts;
}

}  // namespace kgcl
