// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "kgcl/common.hpp"

namespace kgcl {

struct Triplet {
  int head = 0;
  int rel = 0;
  int tail = 0;

  friend bool operator==(const Triplet&, const Triplet&) = default;
};

struct TripletHash {
  std::size_t operator()(const Triplet& t) const {
    std::uint64_t h = static_cast<std::uint64_t>(t.head);
    h = h * 0x9e3779b97f4a7c15ull + static_cast<std::uint64_t>(t.rel);
    h = h * 0x9e3779b97f4a7c15ull + static_cast<std::uint64_t>(t.tail);
    h ^= h >> 32;
    return static_cast<std::size_t>(h);
  }
};

using TripletSet = std::unordered_set<Triplet, TripletHash>;

struct RawTriplet {
  std::string head;
  std::string rel;
  std::string tail;
};

/// Bidirectional string <-> id map; ids follow first-occurrence order.
class Vocab {
 public:
  int intern(const std::string& name) {
    auto it = ids_.find(name);
    if (it != ids_.end()) return it->second;
    const int id = static_cast<int>(names_.size());
    names_.push_back(name);
    ids_.emplace(name, id);
    return id;
  }

  std::optional<int> find(const std::string& name) const {
    auto it = ids_.find(name);
    if (it == ids_.end()) return std::nullopt;
    return it->second;
  }

  const std::string& name(int id) const { return names_.at(static_cast<std::size_t>(id)); }
  int size() const { return static_cast<int>(names_.size()); }
  const std::vector<std::string>& names() const { return names_; }

 private:
  std::vector<std::string> names_;
  std::unordered_map<std::string, int> ids_;
};

struct Neighbor {
  int rel;
  int other;  // tail for out_index, head for in_index
  int edge;
};

/// Immutable after construction; safe for concurrent reads.
struct KnowledgeGraph {
  std::vector<Triplet> triplets;
  Vocab entities;
  Vocab relations;
  std::vector<std::vector<Neighbor>> out_index;  // by head entity
  std::vector<std::vector<Neighbor>> in_index;   // by tail entity
  TripletSet triplet_set;

  int num_entities() const { return entities.size(); }
  int num_relations() const { return relations.size(); }
  int num_triplets() const { return static_cast<int>(triplets.size()); }
  bool contains(const Triplet& t) const { return triplet_set.count(t) > 0; }
};

/// Reads a 3-column TSV split file ("head\trelation\ttail" per line).
/// Empty file yields an empty list; a malformed line is an error that
/// names the line number.
std::vector<RawTriplet> load_split(const std::filesystem::path& path);

/// Builds a deduplicated graph with ids assigned in first-occurrence
/// order. When `relation_vocab` is given (inductive test graphs share the
/// training relations), unknown relations are an error; entities are
/// always assigned fresh ids.
KnowledgeGraph build_graph(const std::vector<RawTriplet>& raw,
                           const Vocab* relation_vocab = nullptr);

enum class CorruptSide { Head, Tail, Either };

struct CorruptOptions {
  CorruptSide side = CorruptSide::Either;
  bool filtered = true;  // exclude known-true triplets
  int max_attempts = 100;
  const TripletSet* extra_filter = nullptr;  // e.g. valid+test triplets
};

/// Replaces one entity slot of `t` with another entity. The result differs
/// from `t` and, when filtering, is not a member of the graph (or of
/// `extra_filter`). Throws after `max_attempts` failed draws.
Triplet corrupt(const Triplet& t, const KnowledgeGraph& g, Rng& rng,
                const CorruptOptions& opts = {});

/// Occurrence count per relation id; relations without triplets map to 0.
std::vector<long> relation_frequency(const KnowledgeGraph& g);

}  // namespace kgcl
