// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "kgcl/kg.hpp"
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

KnowledgeGraph tiny_graph() {
  std::vector<RawTriplet> raw{
      {"A", "r0", "B"}, {"C", "r0", "D"}, {"A", "r1", "B"},
  };
  return build_graph(raw);
}

}  // namespace

TEST_CASE("load_split parses tab-separated triplets in order") {
  const auto path = write_temp("kgcl_split.txt", "A\tstudent_of\tB\nC\tteacher_of\tD\n");
  const auto raw = load_split(path);
  REQUIRE(raw.size() == 2);
  CHECK(raw[0].head == "A");
  CHECK(raw[0].rel == "student_of");
  CHECK(raw[0].tail == "B");
  CHECK(raw[1].head == "C");
}

TEST_CASE("load_split of an empty file yields an empty list") {
  const auto path = write_temp("kgcl_empty.txt", "");
  CHECK(load_split(path).empty());
}

TEST_CASE("load_split rejects space-separated lines with the line number") {
  const auto path = write_temp("kgcl_bad.txt", "A student_of B\n");
  CHECK_THROWS_WITH_AS(load_split(path), doctest::Contains(":1:"), std::runtime_error);
}

TEST_CASE("build_graph counts entities and deduplicates") {
  std::vector<RawTriplet> raw{
      {"A", "r", "B"}, {"B", "r", "C"}, {"C", "r", "D"},
  };
  const auto g = build_graph(raw);
  CHECK(g.num_entities() == 4);
  CHECK(g.num_triplets() == 3);

  raw.push_back(raw.front());
  const auto deduped = build_graph(raw);
  CHECK(deduped.num_triplets() == 3);
}

TEST_CASE("build_graph with a fixed vocabulary rejects unknown relations") {
  const auto train = tiny_graph();
  std::vector<RawTriplet> test_raw{{"X", "r0", "Y"}, {"X", "r_new", "Y"}};
  CHECK_THROWS_WITH_AS(build_graph(test_raw, &train.relations), doctest::Contains("r_new"),
                       std::runtime_error);
  test_raw.pop_back();
  const auto g = build_graph(test_raw, &train.relations);
  CHECK(g.num_relations() == train.num_relations());
  CHECK(g.num_entities() == 2);  // entities are fresh
}

TEST_CASE("vocabulary assignment is deterministic over reloads") {
  const auto path = write_temp("kgcl_det.txt", "A\tr0\tB\nC\tr1\tA\nB\tr0\tC\n");
  const auto g1 = build_graph(load_split(path));
  const auto g2 = build_graph(load_split(path));
  REQUIRE(g1.num_entities() == g2.num_entities());
  for (int i = 0; i < g1.num_entities(); ++i) CHECK(g1.entities.name(i) == g2.entities.name(i));
  for (int i = 0; i < g1.num_relations(); ++i) {
    CHECK(g1.relations.name(i) == g2.relations.name(i));
  }
}

TEST_CASE("out_index and in_index reconstruct every edge") {
  Rng rng(7);
  const auto g = oracle::random_graph(rng, 20, 60, 3);
  for (int e = 0; e < g.num_triplets(); ++e) {
    const Triplet& t = g.triplets[static_cast<std::size_t>(e)];
    bool in_out = false, in_in = false;
    for (const Neighbor& nb : g.out_index[static_cast<std::size_t>(t.head)]) {
      if (nb.edge == e) {
        CHECK(nb.rel == t.rel);
        CHECK(nb.other == t.tail);
        in_out = true;
      }
    }
    for (const Neighbor& nb : g.in_index[static_cast<std::size_t>(t.tail)]) {
      if (nb.edge == e) {
        CHECK(nb.rel == t.rel);
        CHECK(nb.other == t.head);
        in_in = true;
      }
    }
    CHECK(in_out);
    CHECK(in_in);
  }
}

TEST_CASE("corrupt returns the only valid candidate") {
  // (A, r, A) is a member, so C is the only valid tail replacement.
  std::vector<RawTriplet> raw{{"A", "r", "B"}, {"A", "r", "A"}, {"C", "r", "C"}};
  const auto g = build_graph(raw);  // entities A, B, C
  Rng rng(1);
  const Triplet t = g.triplets[0];
  CorruptOptions opts;
  opts.side = CorruptSide::Tail;
  // (A, r, C) is the only non-member alternative for the tail slot.
  for (int i = 0; i < 10; ++i) {
    const Triplet c = corrupt(t, g, rng, opts);
    CHECK(c.head == t.head);
    CHECK(c.rel == t.rel);
    CHECK(c.tail == 2);
  }
}

TEST_CASE("corrupt errors when the graph is saturated") {
  // Every (A, r, x) and (x, r, B) exists: no filtered corruption remains.
  std::vector<RawTriplet> raw;
  for (const char* e : {"A", "B"}) {
    for (const char* x : {"A", "B"}) {
      raw.push_back({e, "r", x});
    }
  }
  const auto g = build_graph(raw);
  Rng rng(3);
  CHECK_THROWS_AS(corrupt(g.triplets[0], g, rng, {}), std::runtime_error);
}

TEST_CASE("corrupt never returns the input or a true triplet") {
  Rng graph_rng(11);
  const auto g = oracle::random_graph(graph_rng, 12, 40, 2);
  Rng rng(5);
  for (int i = 0; i < 200; ++i) {
    const Triplet& t = g.triplets[static_cast<std::size_t>(
        rng.below(static_cast<std::uint64_t>(g.num_triplets())))];
    const Triplet c = corrupt(t, g, rng, {});
    CHECK(c != t);
    CHECK(!g.contains(c));
    const bool head_changed = c.head != t.head;
    const bool tail_changed = c.tail != t.tail;
    CHECK(head_changed != tail_changed);  // exactly one slot differs
    CHECK(c.rel == t.rel);
  }
}

TEST_CASE("50 corruptions of one triplet are identical across runs") {
  Rng graph_rng(13);
  const auto g = oracle::random_graph(graph_rng, 15, 50, 3);
  const Triplet t = g.triplets[0];
  auto draw = [&g, &t]() {
    Rng rng(99);
    std::vector<Triplet> out;
    for (int i = 0; i < 50; ++i) out.push_back(corrupt(t, g, rng, {}));
    return out;
  };
  CHECK(draw() == draw());
}

TEST_CASE("relation_frequency matches TRIVIAL examples") {
  const auto g = tiny_graph();
  const auto freq = relation_frequency(g);
  REQUIRE(freq.size() == 2);
  CHECK(freq[0] == 2);
  CHECK(freq[1] == 1);

  const KnowledgeGraph empty = build_graph({});
  CHECK(relation_frequency(empty).empty());
}

TEST_CASE("relation_frequency equals the naive scan oracle on a random graph") {
  Rng rng(17);
  const auto g = oracle::random_graph(rng, 40, 1000, 7);
  CHECK(relation_frequency(g) == oracle::relation_counts(g));
  long total = 0;
  for (long c : relation_frequency(g)) total += c;
  CHECK(total == g.num_triplets());
}
