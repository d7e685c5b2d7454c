// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "kgcl/word_vectors.hpp"
#include "oracles.hpp"

using namespace kgcl;
namespace fs = std::filesystem;

namespace {

fs::path write_temp(const std::string& name, const std::string& content) {
  const fs::path path = fs::temp_directory_path() / name;
  std::ofstream out(path, std::ios::trunc);
  out << content;
  return path;
}

WordVectors vocab_of(const std::vector<std::string>& tokens) {
  WordVectors wv;
  wv.dim = 2;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    Vector v(2);
    v << static_cast<double>(i), 1.0;
    wv.table.emplace(tokens[i], v);
  }
  return wv;
}

}  // namespace

TEST_CASE("load_word_vectors reads the text format") {
  const auto path = write_temp("kgcl_wv.txt", "cat 0.1 0.2\ndog -1 2.5\n");
  const auto wv = load_word_vectors(path, 2);
  REQUIRE(wv.table.size() == 2);
  CHECK((*wv.find("cat"))(0) == doctest::Approx(0.1));
  CHECK((*wv.find("dog"))(1) == doctest::Approx(2.5));
}

TEST_CASE("load_word_vectors rejects a dimension mismatch with the line number") {
  const auto path = write_temp("kgcl_wv_bad.txt", "cat 0.1 0.2\ndog 0.3\n");
  CHECK_THROWS_WITH_AS(load_word_vectors(path, 2), doctest::Contains(":2:"), std::runtime_error);
}

TEST_CASE("load_word_vectors keeps the last duplicate") {
  const auto path = write_temp("kgcl_wv_dup.txt", "cat 1 1\ncat 2 2\n");
  const auto wv = load_word_vectors(path, 2);
  CHECK((*wv.find("cat"))(0) == doctest::Approx(2.0));
}

TEST_CASE("a 10k-line file loads and lookup matches a byte-level scan") {
  std::ostringstream content;
  Rng rng(41);
  std::vector<double> expected_the;
  for (int i = 0; i < 10000; ++i) {
    const std::string token = i == 4321 ? "the" : "tok" + std::to_string(i);
    content << token;
    for (int d = 0; d < 5; ++d) {
      const double v = rng.uniform(-2.0, 2.0);
      if (i == 4321) expected_the.push_back(v);
      content << ' ' << v;
    }
    content << '\n';
  }
  const auto path = write_temp("kgcl_wv_big.txt", content.str());
  const auto wv = load_word_vectors(path, 5);
  REQUIRE(wv.table.size() == 10000);

  // Independent byte-level scan for the line starting with "the ".
  std::ifstream in(path);
  std::string line;
  std::vector<double> scanned;
  while (std::getline(in, line)) {
    if (line.rfind("the ", 0) == 0) {
      std::istringstream fields(line.substr(4));
      double v;
      while (fields >> v) scanned.push_back(v);
      break;
    }
  }
  REQUIRE(scanned.size() == 5);
  const Vector* loaded = wv.find("the");
  REQUIRE(loaded != nullptr);
  for (int d = 0; d < 5; ++d) {
    CHECK((*loaded)(d) == doctest::Approx(scanned[static_cast<std::size_t>(d)]).epsilon(1e-12));
    CHECK((*loaded)(d) == doctest::Approx(expected_the[static_cast<std::size_t>(d)]).epsilon(1e-12));
  }
}

TEST_CASE("tokenize_relation splits on delimiters and lowercases") {
  const auto wv = vocab_of({"people", "person", "place", "of", "birth"});
  const auto tokens = tokenize_relation("/people/person/place_of_birth", wv);
  CHECK(tokens == std::vector<std::string>{"people", "person", "place", "of", "birth"});
}

TEST_CASE("greedy segmentation matches the exhaustive DP oracle on a concatenated name") {
  const auto wv = vocab_of({"concept", "athlete", "plays", "in", "league"});
  const auto tokens = tokenize_relation("concept:athleteplaysinleague", wv);
  CHECK(tokens == std::vector<std::string>{"concept", "athlete", "plays", "in", "league"});
  const auto dp = oracle::dp_segmentation("athleteplaysinleague", wv);
  CHECK(std::vector<std::string>(tokens.begin() + 1, tokens.end()) == dp);
}

TEST_CASE("fully out-of-vocabulary segments are dropped") {
  const auto wv = vocab_of({"league"});
  CHECK(tokenize_relation("xqzt", wv).empty());
}

TEST_CASE("embed_relations averages token vectors") {
  WordVectors wv;
  wv.dim = 2;
  Vector cat(2), dog(2);
  cat << 1.0, 0.0;
  dog << 0.0, 1.0;
  wv.table.emplace("cat", cat);
  wv.table.emplace("dog", dog);

  std::vector<RawTriplet> raw{
      {"A", "cat_dog", "B"}, {"A", "cat", "B"}, {"A", "weird", "B"},
  };
  const auto g = build_graph(raw);
  const auto sem = embed_relations(g, wv);
  CHECK(sem.rows(0, 0) == doctest::Approx(0.5));
  CHECK(sem.rows(0, 1) == doctest::Approx(0.5));
  CHECK(sem.rows(1, 0) == doctest::Approx(1.0));  // single token
  CHECK(sem.rows.row(2).norm() == 0.0);           // all-OOV => zero row
  CHECK(sem.coverage[2] == 0);
  CHECK(sem.is_oov(2));
}

TEST_CASE("embedding is invariant to token order") {
  WordVectors wv;
  wv.dim = 3;
  Rng rng(5);
  for (const char* tok : {"alpha", "beta", "gamma"}) {
    Vector v(3);
    v << rng.normal(), rng.normal(), rng.normal();
    wv.table.emplace(tok, v);
  }
  const auto g1 = build_graph({{"A", "alpha_beta_gamma", "B"}});
  const auto g2 = build_graph({{"A", "gamma_beta_alpha", "B"}});
  const auto s1 = embed_relations(g1, wv);
  const auto s2 = embed_relations(g2, wv);
  CHECK((s1.rows.row(0) - s2.rows.row(0)).norm() == doctest::Approx(0.0));
}
