// SPDX-License-Identifier: Apache-2.0
#include "kgcl/pipeline.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <atomic>
#include <stdexcept>
#include <thread>

#include "kgcl/tsne.hpp"

namespace kgcl {

Dataset load_dataset(const std::filesystem::path& dir, const Vocab* relation_vocab) {
  Dataset data;
  data.train = build_graph(load_split(dir / "train.txt"), relation_vocab);

  auto read_extra = [&data](const std::filesystem::path& path) {
    std::vector<Triplet> out;
    for (const RawTriplet& raw : load_split(path)) {
      const auto rel = data.train.relations.find(raw.rel);
      if (!rel) {
        throw std::runtime_error(fmt::format(
            "{}: relation '{}' does not appear in the training relations", path.string(),
            raw.rel));
      }
      Triplet t;
      t.head = data.train.entities.intern(raw.head);
      t.rel = *rel;
      t.tail = data.train.entities.intern(raw.tail);
      out.push_back(t);
    }
    return out;
  };
  data.valid = read_extra(dir / "valid.txt");
  data.test = read_extra(dir / "test.txt");

  data.all_true = data.train.triplet_set;
  for (const Triplet& t : data.valid) data.all_true.insert(t);
  for (const Triplet& t : data.test) data.all_true.insert(t);

  // Entities interned from valid/test may extend the vocabulary; keep the
  // adjacency indexes sized for corruption and extraction over them.
  data.train.out_index.resize(static_cast<std::size_t>(data.train.num_entities()));
  data.train.in_index.resize(static_cast<std::size_t>(data.train.num_entities()));
  return data;
}

ClusterFit fit_clusters(const KnowledgeGraph& g, const WordVectors& wv, const RunConfig& cfg) {
  const RelationSemantics sem = embed_relations(g, wv);
  for (int r = 0; r < g.num_relations(); ++r) {
    if (sem.coverage[static_cast<std::size_t>(r)] == 0) {
      fmt::print(stderr, "warning: relation '{}' has no in-vocabulary token; it embeds as zero\n",
                 g.relations.name(r));
    }
  }
  const int n_r = g.num_relations();
  const TrainConfig train_cfg = cfg.train_config();

  Matrix reduced;
  if (n_r < 4) {
    fmt::print(stderr,
               "warning: only {} relations; skipping dimensionality reduction (t-SNE needs 4)\n",
               n_r);
    reduced = sem.rows;
  } else if (cfg.reducer == "pca") {
    reduced = pca_reduce(sem.rows, std::min(cfg.d_r, std::min(n_r, cfg.glove_dim)));
  } else {
    reduced = tsne(sem.rows, cfg.tsne_config()).points;
  }

  ClusterFit fit;
  const std::uint64_t cluster_seed = train_cfg.seeds().clustering;
  if (train_cfg.ablation == Ablation::RandomClusters) {
    fit.clusters = random_clusters(reduced, cfg.n_c, cluster_seed);
  } else {
    fit.clusters = kmeans_restarts(reduced, cfg.n_c, cluster_seed, cfg.kmeans_restarts);
  }
  fit.clusters.semantic_ref = sem.rows;
  fit.clusters.semantic_coverage = sem.coverage;
  fit.reduced = reduced;
  return fit;
}

std::optional<double> score_triplet(const KnowledgeGraph& facts, ModelState& model,
                                    const Triplet& t, const TrainConfig& cfg) {
  const auto sg = extract(facts, t, cfg.hops);
  if (!sg) return std::nullopt;
  autodiff::NoGradGuard guard;
  EncoderParams& enc = model.encoder_for(t.rel);
  const EncodeOptions opts{cfg.mean_aggregation};
  return score(encode(*sg, enc, opts), enc).scalar();
}

namespace {

/// Corruption that also requires a non-empty subgraph, so every pool slot
/// is scoreable. Bounded by draw attempts.
Triplet corrupt_scoreable(const Triplet& t, const KnowledgeGraph& facts, Rng& rng,
                          const CorruptOptions& base, int max_draws, int hops) {
  CorruptOptions opts = base;
  opts.max_attempts = 1000;
  for (int draw = 0; draw < max_draws; ++draw) {
    const Triplet candidate = corrupt(t, facts, rng, opts);
    if (extract(facts, candidate, hops).has_value()) return candidate;
  }
  throw std::runtime_error(fmt::format(
      "evaluation: no corruption of ({}, {}, {}) has a non-empty subgraph after {} draws",
      t.head, t.rel, t.tail, max_draws));
}

}  // namespace

EvalPools build_eval_pools(const KnowledgeGraph& facts, const std::vector<Triplet>& queries,
                           ModelState& model, const TrainConfig& cfg,
                           std::uint64_t negative_seed, const TripletSet* corruption_filter,
                           int threads) {
  constexpr int kRankingNegatives = 50;
  EvalPools pools;
  pools.negative_seed = negative_seed;

  CorruptOptions corrupt_opts;
  corrupt_opts.side = CorruptSide::Either;
  corrupt_opts.filtered = cfg.filtered_corruption;
  corrupt_opts.extra_filter = corruption_filter;

  struct ItemResult {
    bool scored = false;
    ScoredTriplet positive;
    ScoredTriplet paired;
    std::vector<ScoredTriplet> ranking;
  };
  std::vector<ItemResult> results(queries.size());

  auto process = [&](std::size_t i) {
    const Triplet& q = queries[i];
    ItemResult& res = results[i];
    const auto pos_score = score_triplet(facts, model, q, cfg);
    if (!pos_score) return;
    res.scored = true;
    res.positive = {q, *pos_score};

    // Independent per-item stream: thread count cannot affect draws.
    Rng rng(negative_seed ^ (0x9e3779b97f4a7c15ull * (i + 1)));
    const Triplet paired = corrupt_scoreable(q, facts, rng, corrupt_opts, 500, cfg.hops);
    res.paired = {paired, *score_triplet(facts, model, paired, cfg)};
    res.ranking.reserve(kRankingNegatives);
    for (int k = 0; k < kRankingNegatives; ++k) {
      const Triplet neg = corrupt_scoreable(q, facts, rng, corrupt_opts, 500, cfg.hops);
      res.ranking.push_back({neg, *score_triplet(facts, model, neg, cfg)});
    }
  };

  if (threads <= 1) {
    for (std::size_t i = 0; i < queries.size(); ++i) process(i);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> workers;
    const int n_workers = std::min<int>(threads, static_cast<int>(queries.size()));
    workers.reserve(static_cast<std::size_t>(n_workers));
    for (int w = 0; w < n_workers; ++w) {
      workers.emplace_back([&]() {
        for (std::size_t i = next.fetch_add(1); i < queries.size(); i = next.fetch_add(1)) {
          process(i);
        }
      });
    }
    for (std::thread& t : workers) t.join();
  }

  for (ItemResult& res : results) {
    if (!res.scored) {
      ++pools.n_skipped_empty;
      continue;
    }
    pools.positives.push_back(res.positive);
    pools.paired_negatives.push_back(res.paired);
    pools.ranking_negatives.push_back(std::move(res.ranking));
  }
  return pools;
}

UnseenReport unseen_relation_protocol(const Dataset& data, const WordVectors& wv,
                                      const std::string& relation, const RunConfig& cfg) {
  const auto held_rel = data.train.relations.find(relation);
  if (!held_rel) {
    throw std::runtime_error(
        fmt::format("unseen protocol: relation '{}' not found in the training graph", relation));
  }

  // Rebuild the training graph without the held-out relation. Entity and
  // relation ids are reassigned; the held-out triplets keep the original
  // entity NAMES so they can be mapped into the reduced graph.
  std::vector<RawTriplet> remaining;
  std::vector<RawTriplet> eliminated;
  for (const Triplet& t : data.train.triplets) {
    RawTriplet raw{data.train.entities.name(t.head), data.train.relations.name(t.rel),
                   data.train.entities.name(t.tail)};
    if (t.rel == *held_rel) {
      eliminated.push_back(std::move(raw));
    } else {
      remaining.push_back(std::move(raw));
    }
  }
  if (eliminated.empty()) {
    throw std::runtime_error(
        fmt::format("unseen protocol: relation '{}' has no triplets", relation));
  }

  UnseenReport report;
  report.relation = relation;
  report.graph = build_graph(remaining);
  KnowledgeGraph& g = report.graph;

  const ClusterFit fit = fit_clusters(g, wv, cfg);
  const TrainConfig train_cfg = cfg.train_config();
  ModelState model = init_model(fit.clusters, train_cfg);
  if (train_cfg.ablation != Ablation::NoPretrain) pretrain(g, model, train_cfg);
  finetune(g, model, train_cfg);

  // Cluster assignment for the held-out relation from its own name.
  int assigned = cfg.unseen_cluster_override;
  if (assigned < 0) {
    const auto tokens = tokenize_relation(relation, wv);
    Vector query = Vector::Zero(wv.dim);
    int hits = 0;
    for (const std::string& tok : tokens) {
      if (const Vector* v = wv.find(tok)) {
        query += *v;
        ++hits;
      }
    }
    if (hits == 0) {
      throw std::runtime_error(fmt::format(
          "unseen protocol: relation '{}' is fully out-of-vocabulary; "
          "pass a manual cluster override",
          relation));
    }
    query /= hits;
    const UnseenAssignment nn = assign_unseen(query, model.clusters);
    assigned = nn.cluster;
    report.nearest_relation = g.relations.name(nn.nearest_relation);
  }
  report.assigned_cluster = assigned;
  for (int r = 0; r < g.num_relations(); ++r) {
    if (model.clusters.cluster_of(r) == assigned) {
      report.cluster_relations.push_back(g.relations.name(r));
    }
  }

  // The held-out relation scores through the assigned cluster's encoder.
  // It gets a fresh relation id whose one-hot column the encoder never
  // saw; the edge projection row is untrained but the subgraph does not
  // contain the target edge anyway.
  EncoderParams& enc = model.encoders[static_cast<std::size_t>(assigned)];
  CorruptOptions corrupt_opts;
  corrupt_opts.side = CorruptSide::Either;
  corrupt_opts.filtered = cfg.filtered_corruption;
  TripletSet held_set;

  std::vector<Triplet> held_triplets;
  for (const RawTriplet& raw : eliminated) {
    const auto h = g.entities.find(raw.head);
    const auto t = g.entities.find(raw.tail);
    if (!h || !t) {
      ++report.n_skipped_empty;  // entity only appeared in eliminated triplets
      continue;
    }
    held_triplets.push_back({*h, *held_rel >= 0 ? g.num_relations() : 0, *t});
  }
  for (const Triplet& t : held_triplets) held_set.insert(t);
  corrupt_opts.extra_filter = &held_set;

  Rng rng(train_cfg.seeds().eval_negatives);
  const EncodeOptions enc_opts{train_cfg.mean_aggregation};
  long above = 0;
  for (const Triplet& pos : held_triplets) {
    const auto pos_sg = extract(g, pos, train_cfg.hops);
    if (!pos_sg) {
      ++report.n_skipped_empty;
      continue;
    }
    Triplet neg;
    std::optional<Subgraph> neg_sg;
    bool found = false;
    for (int draw = 0; draw < 500 && !found; ++draw) {
      neg = corrupt(pos, g, rng, corrupt_opts);
      neg_sg = extract(g, neg, train_cfg.hops);
      found = neg_sg.has_value();
    }
    if (!found) {
      ++report.n_skipped_empty;
      continue;
    }
    autodiff::NoGradGuard guard;
    const double pos_score = score(encode(*pos_sg, enc, enc_opts), enc).scalar();
    const double neg_score = score(encode(*neg_sg, enc, enc_opts), enc).scalar();
    report.cases.push_back({pos, +1, pos_score});
    report.cases.push_back({neg, -1, neg_score});
    ++report.n_scored;
    if (pos_score > neg_score) ++above;
  }
  if (report.n_scored == 0) {
    throw std::runtime_error("unseen protocol: no held-out triplet could be scored");
  }
  report.positives_above_corruption =
      static_cast<double>(above) / static_cast<double>(report.n_scored);
  return report;
}

std::vector<PlotRow> export_plot_data(const KnowledgeGraph& g, ModelState& model,
                                      const RunConfig& cfg) {
  const TrainConfig train_cfg = cfg.train_config();
  const EncodeOptions enc_opts{train_cfg.mean_aggregation};
  std::vector<int> rels;
  std::vector<Vector> reps;
  {
    autodiff::NoGradGuard guard;
    for (const Triplet& t : g.triplets) {
      const auto sg = extract(g, t, train_cfg.hops);
      if (!sg) continue;
      EncoderParams& enc = model.encoder_for(t.rel);
      const Matrix h = encode(*sg, enc, enc_opts).rep.value();
      Vector flat(h.size());
      Eigen::Index k = 0;
      for (Eigen::Index r = 0; r < h.rows(); ++r) {
        for (Eigen::Index c = 0; c < h.cols(); ++c) flat(k++) = h(r, c);
      }
      reps.push_back(std::move(flat));
      rels.push_back(t.rel);
    }
  }
  if (reps.empty()) return {};

  Matrix points(static_cast<Eigen::Index>(reps.size()), reps.front().size());
  for (std::size_t i = 0; i < reps.size(); ++i) points.row(static_cast<Eigen::Index>(i)) = reps[i];

  Matrix coords;
  if (points.rows() < 4) {
    coords = Matrix::Zero(points.rows(), 2);
  } else {
    TsneConfig tsne_cfg = cfg.tsne_config();
    tsne_cfg.output_dim = 2;
    coords = tsne(points, tsne_cfg).points;
  }

  std::vector<PlotRow> rows;
  rows.reserve(reps.size());
  for (std::size_t i = 0; i < reps.size(); ++i) {
    PlotRow row;
    row.x = coords(static_cast<Eigen::Index>(i), 0);
    row.y = coords(static_cast<Eigen::Index>(i), 1);
    row.cluster_id = model.clusters.cluster_of(rels[i]);
    row.relation = g.relations.name(rels[i]);
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace kgcl
