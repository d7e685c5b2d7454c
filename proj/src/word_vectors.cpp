// SPDX-License-Identifier: Apache-2.0
#include "kgcl/word_vectors.hpp"

#include <fmt/format.h>

#include <cctype>
#include <charconv>
#include <fstream>
#include <iostream>
#include <stdexcept>

namespace kgcl {

namespace {

std::string to_lower(std::string s) {
  for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

bool is_delimiter(char c) {
  switch (c) {
    case '/':
    case '_':
    case '.':
    case ':':
    case '-':
      return true;
    default:
      return std::isspace(static_cast<unsigned char>(c)) != 0;
  }
}

}  // namespace

WordVectors load_word_vectors(const std::filesystem::path& path, int expected_dim) {
  std::ifstream in(path);
  if (!in) {
    throw std::runtime_error(fmt::format("cannot open word vector file '{}'", path.string()));
  }
  WordVectors wv;
  wv.dim = expected_dim;
  std::string line;
  long line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;

    std::size_t pos = 0;
    while (pos < line.size() && line[pos] != ' ') ++pos;
    std::string token = to_lower(line.substr(0, pos));
    if (token.empty()) {
      throw std::runtime_error(fmt::format("{}:{}: missing token", path.string(), line_no));
    }

    Vector vec(expected_dim);
    int count = 0;
    const char* cursor = line.data() + pos;
    const char* end = line.data() + line.size();
    while (cursor < end) {
      while (cursor < end && *cursor == ' ') ++cursor;
      if (cursor == end) break;
      double value = 0.0;
      const auto [next, ec] = std::from_chars(cursor, end, value);
      if (ec != std::errc()) {
        throw std::runtime_error(
            fmt::format("{}:{}: bad float near column {}", path.string(), line_no,
                        cursor - line.data() + 1));
      }
      if (count < expected_dim) vec(count) = value;
      ++count;
      cursor = next;
    }
    if (count != expected_dim) {
      throw std::runtime_error(
          fmt::format("{}:{}: expected {} components, found {}", path.string(), line_no,
                      expected_dim, count));
    }
    auto [it, inserted] = wv.table.insert_or_assign(std::move(token), std::move(vec));
    if (!inserted) {
      std::cerr << fmt::format("warning: {}:{}: duplicate token '{}', keeping last\n",
                               path.string(), line_no, it->first);
    }
  }
  return wv;
}

std::vector<std::string> tokenize_relation(const std::string& name, const WordVectors& vocab) {
  std::vector<std::string> tokens;
  std::string segment;
  auto flush = [&]() {
    if (segment.empty()) return;
    if (vocab.contains(segment)) {
      tokens.push_back(segment);
    } else {
      // Greedy longest-match segmentation; minimum match length 2.
      std::size_t i = 0;
      while (i < segment.size()) {
        std::size_t best = 0;
        for (std::size_t len = segment.size() - i; len >= 2; --len) {
          if (vocab.contains(segment.substr(i, len))) {
            best = len;
            break;
          }
        }
        if (best > 0) {
          tokens.push_back(segment.substr(i, best));
          i += best;
        } else {
          ++i;  // drop unsegmentable character
        }
      }
    }
    segment.clear();
  };
  for (char raw : name) {
    if (is_delimiter(raw)) {
      flush();
    } else {
      segment.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(raw))));
    }
  }
  flush();
  return tokens;
}

RelationSemantics embed_relations(const KnowledgeGraph& g, const WordVectors& wv) {
  const int n_r = g.num_relations();
  RelationSemantics sem;
  sem.rows = Matrix::Zero(n_r, wv.dim);
  sem.coverage.assign(static_cast<std::size_t>(n_r), 0);
  for (int r = 0; r < n_r; ++r) {
    const auto tokens = tokenize_relation(g.relations.name(r), wv);
    Vector sum = Vector::Zero(wv.dim);
    int hits = 0;
    for (const std::string& tok : tokens) {
      if (const Vector* v = wv.find(tok)) {
        sum += *v;
        ++hits;
      }
    }
    if (hits > 0) sem.rows.row(r) = (sum / hits).transpose();
    sem.coverage[static_cast<std::size_t>(r)] = hits;
  }
  return sem;
}

}  // namespace kgcl
