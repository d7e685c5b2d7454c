// SPDX-License-Identifier: Apache-2.0
#include "kgcl/synth.hpp"

#include <fmt/format.h>

#include <cmath>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "kgcl/common.hpp"

namespace kgcl {

namespace {

struct Edge {
  std::string head;
  std::string rel;
  std::string tail;
};

struct GraphFiles {
  std::vector<Edge> train;  // facts
  std::vector<Edge> valid;
  std::vector<Edge> test;   // queries for the inductive test graph
};

void write_split(const std::filesystem::path& path, const std::vector<Edge>& edges) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error(fmt::format("cannot write '{}'", path.string()));
  for (const Edge& e : edges) out << e.head << '\t' << e.rel << '\t' << e.tail << '\n';
}

/// One district holds a firm, a school, a city and a region plus several
/// households. Kin relations follow compositional rules (uncle = father's
/// brother, aunt = mother's sister; siblings are symmetric) and the org
/// edges form a small cycle (org -> city -> region -> city), so every
/// relation type has triplets whose enclosing subgraph is non-empty and
/// carries a characteristic shape.
GraphFiles build_graph(const std::string& prefix, int districts, int families_per_district,
                       bool inductive_test, Rng& rng) {
  GraphFiles files;
  std::vector<Edge>& facts = files.train;
  int mentor_quota = inductive_test ? 2 : 4;
  int cousin_pair_quota = inductive_test ? 1 : 2;
  int family_counter = 0;
  std::string previous_first_kid;

  for (int d = 0; d < districts; ++d) {
    const std::string firm = fmt::format("{}_d{}_firm", prefix, d);
    const std::string school = fmt::format("{}_d{}_school", prefix, d);
    const std::string city = fmt::format("{}_d{}_city", prefix, d);
    const std::string region = fmt::format("{}_d{}_region", prefix, d);
    if (inductive_test) {
      files.test.push_back({firm, "located_in", city});  // held out of facts
    } else {
      facts.push_back({firm, "located_in", city});
    }
    facts.push_back({school, "located_in", city});
    facts.push_back({region, "located_in", city});
    facts.push_back({firm, "part_of", region});
    facts.push_back({school, "part_of", region});
    facts.push_back({city, "part_of", region});

    for (int f = 0; f < families_per_district; ++f, ++family_counter) {
      const std::string base = fmt::format("{}_d{}_f{}", prefix, d, f);
      const std::string father = base + "_father";
      const std::string mother = base + "_mother";
      const std::string uncle = base + "_uncle";
      const std::string aunt = base + "_aunt";
      const int n_kids = 2 + static_cast<int>(rng.below(2));
      std::vector<std::string> kids;
      for (int k = 0; k < n_kids; ++k) kids.push_back(fmt::format("{}_kid{}", base, k));

      std::vector<Edge> family;
      for (const std::string& kid : kids) {
        family.push_back({father, "father_of", kid});
        family.push_back({mother, "mother_of", kid});
        family.push_back({uncle, "uncle_of", kid});
        family.push_back({aunt, "aunt_of", kid});
      }
      family.push_back({uncle, "brother_of", father});
      family.push_back({father, "brother_of", uncle});
      family.push_back({aunt, "sister_of", mother});
      family.push_back({mother, "sister_of", aunt});
      for (int k = 0; k + 1 < n_kids; ++k) {
        family.push_back({kids[static_cast<std::size_t>(k)], "brother_of",
                          kids[static_cast<std::size_t>(k + 1)]});
        family.push_back({kids[static_cast<std::size_t>(k + 1)], "brother_of",
                          kids[static_cast<std::size_t>(k)]});
      }
      for (const std::string& adult : {father, mother, uncle, aunt}) {
        family.push_back({adult, "works_at", firm});
      }
      for (const std::string& kid : kids) family.push_back({kid, "studies_at", school});

      if (mentor_quota > 0) {
        family.push_back({uncle, "mentor_of", kids[0]});
        --mentor_quota;
      }
      if (cousin_pair_quota > 0 && !previous_first_kid.empty()) {
        if (inductive_test) {
          // Both directions become queries: their subgraphs are empty, which
          // exercises the skip bookkeeping of the evaluation harness.
          files.test.push_back({kids[0], "cousin_of", previous_first_kid});
          files.test.push_back({previous_first_kid, "cousin_of", kids[0]});
        } else {
          family.push_back({kids[0], "cousin_of", previous_first_kid});
          family.push_back({previous_first_kid, "cousin_of", kids[0]});
        }
        --cousin_pair_quota;
      }
      previous_first_kid = kids[0];

      auto hold_out = [&family](std::vector<Edge>& dest, const std::string& h,
                                const std::string& r, const std::string& t) {
        for (std::size_t i = 0; i < family.size(); ++i) {
          if (family[i].head == h && family[i].rel == r && family[i].tail == t) {
            dest.push_back(family[i]);
            family.erase(family.begin() + static_cast<long>(i));
            return;
          }
        }
        throw std::logic_error("hold_out: edge not found");
      };

      if (inductive_test) {
        // One query per family; every query keeps an alternate directed
        // path in the remaining facts. The first two families trade their
        // rotation slot for a long-tail mentor query.
        if (family_counter < 2) {
          hold_out(files.test, uncle, "mentor_of", kids[0]);
        } else {
          switch (family_counter % 6) {
            case 0: hold_out(files.test, uncle, "uncle_of", kids[0]); break;
            case 1: hold_out(files.test, aunt, "aunt_of", kids[0]); break;
            case 2: hold_out(files.test, father, "father_of", kids[0]); break;
            case 3: hold_out(files.test, mother, "mother_of", kids[0]); break;
            case 4: hold_out(files.test, father, "works_at", firm); break;
            default: hold_out(files.test, father, "brother_of", uncle); break;
          }
        }
        if (f == 2) hold_out(files.valid, aunt, "works_at", firm);
      } else {
        if (f == 0) hold_out(files.valid, aunt, "works_at", firm);
        if (f == 1) hold_out(files.test, mother, "works_at", firm);
      }
      for (Edge& e : family) facts.push_back(std::move(e));
    }
  }
  return files;
}

void write_vectors(const std::filesystem::path& path, int dim, Rng& rng) {
  auto unit = [&rng, dim]() {
    Vector v(dim);
    for (int i = 0; i < dim; ++i) v(i) = rng.normal();
    return Vector(v / v.norm());
  };
  const Vector kin_anchor = unit();
  Vector org_anchor = unit();
  org_anchor -= kin_anchor.dot(org_anchor) * kin_anchor;
  org_anchor /= org_anchor.norm();

  auto near = [&rng, dim](const Vector& anchor, double spread) {
    Vector v = anchor;
    for (int i = 0; i < dim; ++i) v(i) += spread * rng.normal() / std::sqrt(dim);
    return v;
  };

  std::vector<std::pair<std::string, Vector>> vectors;
  const Vector uncle = near(kin_anchor, 0.08);
  vectors.emplace_back("father", near(kin_anchor, 0.08));
  vectors.emplace_back("mother", near(kin_anchor, 0.08));
  vectors.emplace_back("uncle", uncle);
  vectors.emplace_back("aunt", near(uncle, 0.01));  // tight synonym pair
  vectors.emplace_back("brother", near(kin_anchor, 0.08));
  vectors.emplace_back("sister", near(kin_anchor, 0.08));
  vectors.emplace_back("cousin", near(kin_anchor, 0.08));
  vectors.emplace_back("works", near(org_anchor, 0.08));
  vectors.emplace_back("studies", near(org_anchor, 0.08));
  vectors.emplace_back("located", near(org_anchor, 0.08));
  vectors.emplace_back("part", near(org_anchor, 0.08));
  vectors.emplace_back("mentor", near(org_anchor, 0.08));
  vectors.emplace_back("of", near(Vector::Zero(dim), 0.03));
  vectors.emplace_back("at", near(Vector::Zero(dim), 0.03));
  vectors.emplace_back("in", near(Vector::Zero(dim), 0.03));

  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error(fmt::format("cannot write '{}'", path.string()));
  for (const auto& [token, vec] : vectors) {
    out << token;
    for (int i = 0; i < dim; ++i) out << fmt::format(" {:.6f}", vec(i));
    out << '\n';
  }
}

}  // namespace

void generate_synth_dataset(const std::filesystem::path& out_dir, const SynthConfig& cfg) {
  namespace fs = std::filesystem;
  fs::create_directories(out_dir / "train");
  fs::create_directories(out_dir / "test");

  Rng rng(cfg.seed);
  const GraphFiles train = build_graph("tr", cfg.train_districts, cfg.families_per_district,
                                       /*inductive_test=*/false, rng);
  const GraphFiles test = build_graph("te", cfg.test_districts, cfg.families_per_district,
                                      /*inductive_test=*/true, rng);
  write_split(out_dir / "train" / "train.txt", train.train);
  write_split(out_dir / "train" / "valid.txt", train.valid);
  write_split(out_dir / "train" / "test.txt", train.test);
  write_split(out_dir / "test" / "train.txt", test.train);
  write_split(out_dir / "test" / "valid.txt", test.valid);
  write_split(out_dir / "test" / "test.txt", test.test);

  Rng vec_rng(cfg.seed + 101);
  write_vectors(out_dir / "vectors.txt", cfg.glove_dim, vec_rng);

  std::ofstream cfg_out(out_dir / "run.cfg", std::ios::trunc);
  if (!cfg_out) throw std::runtime_error("cannot write run.cfg");
  cfg_out << "# Generated alongside the synthetic dataset; paths are relative\n"
          << "# to this file's directory.\n"
          << "dataset_dir=train\n"
          << "test_dir=test\n"
          << "glove_path=vectors.txt\n"
          << fmt::format("glove_dim={}\n", cfg.glove_dim)
          << fmt::format("seed={}\n", cfg.seed);
}

}  // namespace kgcl
