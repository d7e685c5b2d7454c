// SPDX-License-Identifier: Apache-2.0
//
// Command-line pipeline: semantic clustering of relations, contrastive
// pretraining of per-cluster subgraph encoders, soft-margin fine-tuning,
// and the evaluation protocols (AUC/Hits@10, long-tail, unseen-relation).

#include <CLI11.hpp>
#include <fmt/format.h>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "kgcl/checkpoint.hpp"
#include "kgcl/config.hpp"
#include "kgcl/eval.hpp"
#include "kgcl/pipeline.hpp"
#include "kgcl/synth.hpp"
#include "kgcl/training.hpp"
#include "kgcl/word_vectors.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct CommonArgs {
  std::string config_path;
  std::vector<std::string> overrides;
  std::string dataset_dir, test_dir, glove_path, checkpoint, checkpoint_out, out_dir;
  std::optional<std::uint64_t> seed;
  std::optional<int> threads;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
  cmd->add_option("--config", args.config_path, "key=value configuration file");
  cmd->add_option("--set", args.overrides, "override a config key (key=value), repeatable");
  cmd->add_option("--dataset-dir", args.dataset_dir, "training graph directory");
  cmd->add_option("--test-dir", args.test_dir, "inductive test graph directory");
  cmd->add_option("--glove", args.glove_path, "word vector file");
  cmd->add_option("--checkpoint", args.checkpoint, "checkpoint to load");
  cmd->add_option("--checkpoint-out", args.checkpoint_out, "checkpoint to write");
  cmd->add_option("--out", args.out_dir, "output directory for reports");
  cmd->add_option("--seed", args.seed, "master seed");
  cmd->add_option("--threads", args.threads, "worker threads (1 = bit-exact determinism)");
}

kgcl::RunConfig resolve_config(const CommonArgs& args) {
  kgcl::RunConfig cfg;
  if (!args.config_path.empty()) cfg = kgcl::load_config(args.config_path);
  kgcl::apply_overrides(cfg, args.overrides);
  if (!args.dataset_dir.empty()) cfg.dataset_dir = args.dataset_dir;
  if (!args.test_dir.empty()) cfg.test_dir = args.test_dir;
  if (!args.glove_path.empty()) cfg.glove_path = args.glove_path;
  if (!args.checkpoint.empty()) cfg.checkpoint = args.checkpoint;
  if (!args.checkpoint_out.empty()) cfg.checkpoint_out = args.checkpoint_out;
  if (!args.out_dir.empty()) cfg.out_dir = args.out_dir;
  if (args.seed) cfg.seed = *args.seed;
  if (args.threads) cfg.threads = *args.threads;
  return cfg;
}

void require(bool ok, const std::string& message) {
  if (!ok) throw std::runtime_error(message);
}

kgcl::WordVectors load_vectors(const kgcl::RunConfig& cfg) {
  require(!cfg.glove_path.empty(), "missing config key 'glove_path'");
  return kgcl::load_word_vectors(cfg.glove_path, cfg.glove_dim);
}

kgcl::Dataset load_train_dataset(const kgcl::RunConfig& cfg) {
  require(!cfg.dataset_dir.empty(), "missing config key 'dataset_dir'");
  return kgcl::load_dataset(cfg.dataset_dir);
}

struct LoadedModel {
  kgcl::Checkpoint ckpt;
  kgcl::ModelState model;
};

LoadedModel load_model(const kgcl::RunConfig& cfg) {
  require(!cfg.checkpoint.empty(), "missing config key 'checkpoint'");
  LoadedModel lm;
  lm.ckpt = kgcl::load_checkpoint(cfg.checkpoint);
  lm.model = kgcl::restore_model(lm.ckpt);
  return lm;
}

void check_model_compatibility(const kgcl::Checkpoint& ckpt, const kgcl::RunConfig& cfg,
                               const kgcl::KnowledgeGraph& g) {
  const kgcl::RunConfig saved = kgcl::parse_config_text(ckpt.config_text);
  require(saved.hops == cfg.hops && saved.embed_dim == cfg.embed_dim &&
              saved.iterations == cfg.iterations && saved.n_c == cfg.n_c,
          fmt::format("checkpoint was built with hops={} embed_dim={} iterations={} n_c={}, "
                      "which conflict with the current configuration",
                      saved.hops, saved.embed_dim, saved.iterations, saved.n_c));
  require(static_cast<int>(ckpt.relation_names.size()) == g.num_relations(),
          fmt::format("checkpoint has {} relations, graph has {}", ckpt.relation_names.size(),
                      g.num_relations()));
  for (int r = 0; r < g.num_relations(); ++r) {
    require(ckpt.relation_names[static_cast<std::size_t>(r)] == g.relations.name(r),
            fmt::format("relation vocabulary mismatch at id {}: checkpoint '{}' vs graph '{}'",
                        r, ckpt.relation_names[static_cast<std::size_t>(r)],
                        g.relations.name(r)));
  }
}

void save_model(const kgcl::RunConfig& cfg, const std::vector<std::string>& relation_names,
                const kgcl::Matrix& reduced, const kgcl::ModelState& model) {
  require(!cfg.checkpoint_out.empty(), "missing config key 'checkpoint_out'");
  const kgcl::Checkpoint ckpt =
      kgcl::make_checkpoint(cfg.to_text(), cfg.seed, relation_names, reduced, model);
  kgcl::save_checkpoint(cfg.checkpoint_out, ckpt);
  fmt::print("wrote checkpoint {}\n", cfg.checkpoint_out);
}

void write_training_log(const fs::path& path, const std::vector<kgcl::EpochLog>& logs) {
  std::ofstream out(path, std::ios::trunc);
  out << "phase,epoch,mean_loss,seconds,samples_used,samples_skipped\n";
  for (const kgcl::EpochLog& l : logs) {
    out << fmt::format("{},{},{},{},{},{}\n", l.phase, l.epoch, l.mean_loss, l.seconds,
                       l.samples_used, l.samples_skipped);
  }
}

void print_training_log(const std::vector<kgcl::EpochLog>& logs) {
  for (const kgcl::EpochLog& l : logs) {
    fmt::print("{} epoch {:>3}  mean loss {:>12.6f}  {:>7.2f}s  used {} skipped {}\n", l.phase,
               l.epoch, l.mean_loss, l.seconds, l.samples_used, l.samples_skipped);
  }
}

std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

kgcl::EvalPools run_evaluation(const kgcl::RunConfig& cfg, kgcl::ModelState& model,
                               const kgcl::Checkpoint& ckpt, kgcl::Dataset& test_data) {
  require(!cfg.test_dir.empty(), "missing config key 'test_dir'");
  // The inductive test graph shares the training relation vocabulary.
  kgcl::Vocab relation_vocab;
  for (const std::string& name : ckpt.relation_names) relation_vocab.intern(name);
  test_data = kgcl::load_dataset(cfg.test_dir, &relation_vocab);
  check_model_compatibility(ckpt, cfg, test_data.train);
  return kgcl::build_eval_pools(test_data.train, test_data.test, model, cfg.train_config(),
                                kgcl::SeedBundle::from_master(cfg.seed).eval_negatives,
                                &test_data.all_true, cfg.threads);
}

void write_eval_report(const kgcl::RunConfig& cfg, const kgcl::EvalReport& report,
                       const kgcl::KnowledgeGraph& g) {
  fmt::print("scored {} test triplets ({} skipped with empty subgraphs)\n", report.n_scored,
             report.n_skipped_empty);
  fmt::print("AUC-PR   {:.4f}\n", report.auc_pr);
  fmt::print("AUC-ROC  {:.4f}\n", report.auc_roc);
  fmt::print("Hits@10  {:.4f}\n", report.hits_at_10);
  if (report.mrr) fmt::print("MRR      {:.4f}\n", *report.mrr);
  if (report.hits_at_1) fmt::print("Hits@1   {:.4f}\n", *report.hits_at_1);

  fs::create_directories(cfg.out_dir);
  const fs::path path = fs::path(cfg.out_dir) / "eval_report.csv";
  std::ofstream out(path, std::ios::trunc);
  out << "scope,n,auc_pr,auc_roc,hits_at_10\n";
  out << fmt::format("overall,{},{},{},{}\n", report.n_scored, report.auc_pr, report.auc_roc,
                     report.hits_at_10);
  for (const kgcl::RelationMetrics& m : report.per_relation) {
    out << fmt::format("{},{},{},{},{}\n", csv_escape(g.relations.name(m.rel)), m.n, m.auc_pr,
                       m.auc_roc, m.hits_at_10);
  }
  fmt::print("wrote {}\n", path.string());
}

void write_pool_provenance(const kgcl::RunConfig& cfg, const kgcl::EvalPools& pools,
                           const kgcl::KnowledgeGraph& g) {
  fs::create_directories(cfg.out_dir);
  const fs::path path = fs::path(cfg.out_dir) / "negative_pools.csv";
  std::ofstream out(path, std::ios::trunc);
  out << fmt::format("# negative_seed={}\n", pools.negative_seed);
  out << "positive_index,kind,head,relation,tail,score\n";
  auto row = [&](std::size_t i, const char* kind, const kgcl::ScoredTriplet& s) {
    out << fmt::format("{},{},{},{},{},{}\n", i, kind,
                       csv_escape(g.entities.name(s.triplet.head)),
                       csv_escape(g.relations.name(s.triplet.rel)),
                       csv_escape(g.entities.name(s.triplet.tail)), s.score);
  };
  for (std::size_t i = 0; i < pools.positives.size(); ++i) {
    row(i, "positive", pools.positives[i]);
    row(i, "paired_negative", pools.paired_negatives[i]);
    for (const kgcl::ScoredTriplet& s : pools.ranking_negatives[i]) row(i, "ranking_negative", s);
  }
}

int cmd_synth(const CommonArgs& args, const std::string& out, const kgcl::SynthConfig& synth) {
  (void)args;
  kgcl::generate_synth_dataset(out, synth);
  fmt::print("wrote synthetic dataset to {}\n", out);
  return 0;
}

int cmd_cluster(const CommonArgs& args) {
  kgcl::RunConfig cfg = resolve_config(args);
  const kgcl::Dataset data = load_train_dataset(cfg);
  const kgcl::WordVectors wv = load_vectors(cfg);
  const kgcl::ClusterFit fit = kgcl::fit_clusters(data.train, wv, cfg);
  kgcl::ModelState model = kgcl::init_model(fit.clusters, cfg.train_config());

  fs::create_directories(cfg.out_dir);
  const fs::path csv = fs::path(cfg.out_dir) / "cluster_assignment.csv";
  std::ofstream out(csv, std::ios::trunc);
  out << "relation,cluster_id\n";
  for (int r = 0; r < data.train.num_relations(); ++r) {
    out << fmt::format("{},{}\n", csv_escape(data.train.relations.name(r)),
                       model.clusters.cluster_of(r));
  }
  fmt::print("k-means objective {:.6f} over {} relations in {} clusters\n",
             model.clusters.objective, data.train.num_relations(), cfg.n_c);
  fmt::print("wrote {}\n", csv.string());
  if (cfg.checkpoint_out.empty()) {
    cfg.checkpoint_out = (fs::path(cfg.out_dir) / "untrained.ckpt").string();
  }
  save_model(cfg, data.train.relations.names(), fit.reduced, model);
  return 0;
}

int cmd_pretrain(const CommonArgs& args) {
  kgcl::RunConfig cfg = resolve_config(args);
  const kgcl::Dataset data = load_train_dataset(cfg);
  LoadedModel lm = load_model(cfg);
  check_model_compatibility(lm.ckpt, cfg, data.train);
  if (cfg.train_config().ablation == kgcl::Ablation::NoPretrain) {
    fmt::print("ablation no-pretrain: skipping contrastive pretraining\n");
  } else {
    const auto logs = kgcl::pretrain(data.train, lm.model, cfg.train_config());
    print_training_log(logs);
    fs::create_directories(cfg.out_dir);
    write_training_log(fs::path(cfg.out_dir) / "pretrain_log.csv", logs);
  }
  if (cfg.checkpoint_out.empty()) {
    cfg.checkpoint_out = (fs::path(cfg.out_dir) / "pretrained.ckpt").string();
  }
  save_model(cfg, lm.ckpt.relation_names, lm.ckpt.reduced, lm.model);
  return 0;
}

int cmd_finetune(const CommonArgs& args) {
  kgcl::RunConfig cfg = resolve_config(args);
  const kgcl::Dataset data = load_train_dataset(cfg);
  LoadedModel lm;
  if (!cfg.checkpoint.empty()) {
    lm = load_model(cfg);
    check_model_compatibility(lm.ckpt, cfg, data.train);
  } else if (cfg.train_config().ablation == kgcl::Ablation::NoPretrain) {
    // Without a checkpoint the no-pretrain ablation fits clusters here.
    const kgcl::WordVectors wv = load_vectors(cfg);
    const kgcl::ClusterFit fit = kgcl::fit_clusters(data.train, wv, cfg);
    lm.model = kgcl::init_model(fit.clusters, cfg.train_config());
    lm.ckpt = kgcl::make_checkpoint(cfg.to_text(), cfg.seed, data.train.relations.names(),
                                    fit.reduced, lm.model);
  } else {
    throw std::runtime_error(
        "missing config key 'checkpoint' (required unless ablation=no-pretrain)");
  }
  const auto logs = kgcl::finetune(data.train, lm.model, cfg.train_config(), &data.all_true);
  print_training_log(logs);
  fs::create_directories(cfg.out_dir);
  write_training_log(fs::path(cfg.out_dir) / "finetune_log.csv", logs);
  if (cfg.checkpoint_out.empty()) {
    cfg.checkpoint_out = (fs::path(cfg.out_dir) / "finetuned.ckpt").string();
  }
  save_model(cfg, lm.ckpt.relation_names, lm.ckpt.reduced, lm.model);
  return 0;
}

int cmd_evaluate(const CommonArgs& args) {
  kgcl::RunConfig cfg = resolve_config(args);
  LoadedModel lm = load_model(cfg);
  kgcl::Dataset test_data;
  const kgcl::EvalPools pools = run_evaluation(cfg, lm.model, lm.ckpt, test_data);
  const kgcl::EvalReport report = kgcl::summarize(pools, cfg.extra_metrics);
  write_eval_report(cfg, report, test_data.train);
  write_pool_provenance(cfg, pools, test_data.train);
  return 0;
}

int cmd_longtail(const CommonArgs& args) {
  kgcl::RunConfig cfg = resolve_config(args);
  LoadedModel lm = load_model(cfg);
  kgcl::Dataset test_data;
  const kgcl::EvalPools pools = run_evaluation(cfg, lm.model, lm.ckpt, test_data);

  const kgcl::Dataset train_data = load_train_dataset(cfg);
  const auto freqs = kgcl::relation_frequency(train_data.train);
  const auto rows = kgcl::long_tail_eval(freqs, pools, cfg.longtail_threshold_list());

  fs::create_directories(cfg.out_dir);
  const fs::path path = fs::path(cfg.out_dir) / "longtail_report.csv";
  std::ofstream out(path, std::ios::trunc);
  out << "threshold,n,auc_pr,auc_roc\n";
  fmt::print("threshold  n      AUC-PR   AUC-ROC\n");
  for (const kgcl::LongTailRow& row : rows) {
    if (row.n > 0) {
      fmt::print("{:>9}  {:>5}  {:.4f}   {:.4f}\n", row.threshold, row.n, *row.auc_pr,
                 *row.auc_roc);
      out << fmt::format("{},{},{},{}\n", row.threshold, row.n, *row.auc_pr, *row.auc_roc);
    } else {
      fmt::print("{:>9}  {:>5}  -        -\n", row.threshold, row.n);
      out << fmt::format("{},{},,\n", row.threshold, row.n);
    }
  }
  fmt::print("wrote {}\n", path.string());
  return 0;
}

int cmd_unseen(const CommonArgs& args, const std::string& relation_flag) {
  kgcl::RunConfig cfg = resolve_config(args);
  if (!relation_flag.empty()) cfg.unseen_relation = relation_flag;
  require(!cfg.unseen_relation.empty(), "missing config key 'unseen_relation'");
  const kgcl::Dataset data = load_train_dataset(cfg);
  const kgcl::WordVectors wv = load_vectors(cfg);
  const kgcl::UnseenReport report =
      kgcl::unseen_relation_protocol(data, wv, cfg.unseen_relation, cfg);

  fmt::print("held-out relation '{}' assigned to cluster {} (nearest relation '{}')\n",
             report.relation, report.assigned_cluster, report.nearest_relation);
  fmt::print("relations in the same cluster:");
  for (const std::string& r : report.cluster_relations) fmt::print(" {}", r);
  fmt::print("\n{} of {} positives scored above their paired corruption ({} skipped)\n",
             static_cast<long>(report.positives_above_corruption * report.n_scored + 0.5),
             report.n_scored, report.n_skipped_empty);

  fs::create_directories(cfg.out_dir);
  const fs::path path = fs::path(cfg.out_dir) / "unseen_report.csv";
  std::ofstream out(path, std::ios::trunc);
  std::string members;
  for (const std::string& r : report.cluster_relations) {
    if (!members.empty()) members += ';';
    members += r;
  }
  out << "head,relation,tail,label,score,assigned_cluster,cluster_relations\n";
  for (const kgcl::UnseenCase& c : report.cases) {
    out << fmt::format("{},{},{},{},{},{},{}\n",
                       csv_escape(report.graph.entities.name(c.triplet.head)),
                       csv_escape(report.relation),
                       csv_escape(report.graph.entities.name(c.triplet.tail)), c.label, c.score,
                       report.assigned_cluster, csv_escape(members));
  }
  fmt::print("wrote {}\n", path.string());
  return 0;
}

int cmd_extract_debug(const CommonArgs& args, const std::string& head, const std::string& rel,
                      const std::string& tail) {
  kgcl::RunConfig cfg = resolve_config(args);
  const kgcl::Dataset data = load_train_dataset(cfg);
  const auto h = data.train.entities.find(head);
  const auto r = data.train.relations.find(rel);
  const auto t = data.train.entities.find(tail);
  require(h.has_value(), fmt::format("unknown entity '{}'", head));
  require(r.has_value(), fmt::format("unknown relation '{}'", rel));
  require(t.has_value(), fmt::format("unknown entity '{}'", tail));

  const auto sg = kgcl::extract(data.train, {*h, *r, *t}, cfg.hops);
  json doc;
  doc["target"] = {{"head", head}, {"relation", rel}, {"tail", tail}};
  doc["hops"] = cfg.hops;
  if (!sg) {
    doc["empty"] = true;
  } else {
    doc["empty"] = false;
    doc["num_nodes"] = sg->num_nodes();
    doc["num_edges"] = sg->num_edges();
    json nodes = json::array();
    for (int i = 0; i < sg->num_nodes(); ++i) {
      nodes.push_back({{"entity", data.train.entities.name(sg->nodes[static_cast<std::size_t>(i)])},
                       {"dist_from_head", sg->dist_from_head[static_cast<std::size_t>(i)]},
                       {"dist_to_tail", sg->dist_to_tail[static_cast<std::size_t>(i)]}});
    }
    doc["nodes"] = nodes;
    json edges = json::array();
    for (const kgcl::SubgraphEdge& e : sg->edges) {
      edges.push_back(
          {{"head", data.train.entities.name(sg->nodes[static_cast<std::size_t>(e.head)])},
           {"relation", data.train.relations.name(e.rel)},
           {"tail", data.train.entities.name(sg->nodes[static_cast<std::size_t>(e.tail)])}});
    }
    doc["edges"] = edges;
  }
  fmt::print("{}\n", doc.dump(2));
  return 0;
}

int cmd_export_plot(const CommonArgs& args) {
  kgcl::RunConfig cfg = resolve_config(args);
  const kgcl::Dataset data = load_train_dataset(cfg);
  LoadedModel lm = load_model(cfg);
  check_model_compatibility(lm.ckpt, cfg, data.train);
  const auto rows = kgcl::export_plot_data(data.train, lm.model, cfg);

  fs::create_directories(cfg.out_dir);
  const fs::path path = fs::path(cfg.out_dir) / "plot_data.csv";
  std::ofstream out(path, std::ios::trunc);
  out << "x,y,cluster_id,relation\n";
  for (const kgcl::PlotRow& row : rows) {
    out << fmt::format("{},{},{},{}\n", row.x, row.y, row.cluster_id, csv_escape(row.relation));
  }
  fmt::print("wrote {} ({} rows)\n", path.string(), rows.size());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Inductive relation prediction with cluster-sampled contrastive encoders"};
  app.require_subcommand(1);

  CommonArgs args;
  std::string synth_out = "synth_data";
  kgcl::SynthConfig synth;
  std::string unseen_relation;
  std::string debug_head, debug_rel, debug_tail;

  CLI::App* synth_cmd = app.add_subcommand("synth", "generate the synthetic dataset");
  synth_cmd->add_option("--out", synth_out, "output directory");
  synth_cmd->add_option("--seed", synth.seed, "generator seed");
  synth_cmd->add_option("--train-districts", synth.train_districts, "training districts");
  synth_cmd->add_option("--test-districts", synth.test_districts, "test districts");
  synth_cmd->add_option("--families", synth.families_per_district, "families per district");
  synth_cmd->add_option("--dim", synth.glove_dim, "word vector dimensionality");

  CLI::App* cluster_cmd =
      app.add_subcommand("cluster", "fit semantics -> reduction -> k-means, write a checkpoint");
  add_common(cluster_cmd, args);
  CLI::App* pretrain_cmd = app.add_subcommand("pretrain", "contrastive pretraining");
  add_common(pretrain_cmd, args);
  CLI::App* finetune_cmd = app.add_subcommand("finetune", "soft-margin fine-tuning");
  add_common(finetune_cmd, args);
  CLI::App* evaluate_cmd = app.add_subcommand("evaluate", "AUC-PR / AUC-ROC / Hits@10");
  add_common(evaluate_cmd, args);
  CLI::App* longtail_cmd = app.add_subcommand("longtail", "long-tail relation evaluation");
  add_common(longtail_cmd, args);
  CLI::App* unseen_cmd = app.add_subcommand("unseen", "unseen-relation hold-out protocol");
  add_common(unseen_cmd, args);
  unseen_cmd->add_option("--relation", unseen_relation, "relation to hold out");
  CLI::App* debug_cmd = app.add_subcommand("extract-debug", "print one enclosing subgraph");
  add_common(debug_cmd, args);
  debug_cmd->add_option("--head", debug_head, "head entity name")->required();
  debug_cmd->add_option("--rel", debug_rel, "relation name")->required();
  debug_cmd->add_option("--tail", debug_tail, "tail entity name")->required();
  CLI::App* plot_cmd =
      app.add_subcommand("export-plot", "2-D coordinates of triplet representations");
  add_common(plot_cmd, args);

  CLI11_PARSE(app, argc, argv);

  try {
    if (synth_cmd->parsed()) return cmd_synth(args, synth_out, synth);
    if (cluster_cmd->parsed()) return cmd_cluster(args);
    if (pretrain_cmd->parsed()) return cmd_pretrain(args);
    if (finetune_cmd->parsed()) return cmd_finetune(args);
    if (evaluate_cmd->parsed()) return cmd_evaluate(args);
    if (longtail_cmd->parsed()) return cmd_longtail(args);
    if (unseen_cmd->parsed()) return cmd_unseen(args, unseen_relation);
    if (debug_cmd->parsed()) return cmd_extract_debug(args, debug_head, debug_rel, debug_tail);
    if (plot_cmd->parsed()) return cmd_export_plot(args);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
