// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <string>
#include <unordered_map>
#include <vector>

#include "kgcl/common.hpp"
#include "kgcl/kg.hpp"

namespace kgcl {

struct WordVectors {
  int dim = 0;
  std::unordered_map<std::string, Vector> table;

  bool contains(const std::string& token) const { return table.count(token) > 0; }

  const Vector* find(const std::string& token) const {
    auto it = table.find(token);
    return it == table.end() ? nullptr : &it->second;
  }
};

/// Loads word vectors in the standard text format: one token per line,
/// "token v1 v2 ... v_dim", whitespace separated. Tokens are lowercased;
/// a duplicate token keeps the last occurrence (with a warning on stderr).
WordVectors load_word_vectors(const std::filesystem::path& path, int expected_dim);

/// Splits a relation name on {'/', '_', '.', ':', '-', whitespace} and
/// lowercases. A delimiter-free segment absent from `vocab` is segmented
/// greedily left to right (longest prefix in vocab, minimum length 2);
/// unsegmentable residue is dropped.
std::vector<std::string> tokenize_relation(const std::string& name, const WordVectors& vocab);

struct RelationSemantics {
  Matrix rows;                 // n_r x dim, one row per relation id
  std::vector<int> coverage;   // in-vocabulary token count per relation

  bool is_oov(int rel) const { return coverage[static_cast<std::size_t>(rel)] == 0; }
};

/// Row r = mean of the word vectors of relation r's tokens; a relation
/// with no in-vocabulary token gets the zero row and coverage 0.
RelationSemantics embed_relations(const KnowledgeGraph& g, const WordVectors& wv);

}  // namespace kgcl
