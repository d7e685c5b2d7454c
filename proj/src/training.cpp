// SPDX-License-Identifier: Apache-2.0
#include "kgcl/training.hpp"

#include <fmt/format.h>

#include <chrono>
#include <cmath>
#include <set>
#include <stdexcept>

namespace kgcl {

using autodiff::Tensor;

const char* ablation_name(Ablation a) {
  switch (a) {
    case Ablation::None: return "none";
    case Ablation::RandomClusters: return "random-clusters";
    case Ablation::NoPretrain: return "no-pretrain";
    case Ablation::NoPositive: return "no-positive";
    case Ablation::NoNegative: return "no-negative";
  }
  return "none";
}

std::optional<Ablation> parse_ablation(const std::string& name) {
  if (name == "none") return Ablation::None;
  if (name == "random-clusters") return Ablation::RandomClusters;
  if (name == "no-pretrain") return Ablation::NoPretrain;
  if (name == "no-positive") return Ablation::NoPositive;
  if (name == "no-negative") return Ablation::NoNegative;
  return std::nullopt;
}

ModelState init_model(ClusterModel clusters, const TrainConfig& cfg) {
  const int n_r = static_cast<int>(clusters.assignment.size());
  const EncoderDims dims =
      EncoderDims::for_graph(cfg.hops, n_r, cfg.embed_dim, cfg.iterations);
  ModelState model;
  model.clusters = std::move(clusters);
  const std::uint64_t init_seed = cfg.seeds().init;
  for (int c = 0; c < model.clusters.n_c; ++c) {
    model.encoders.push_back(init_params(dims, init_seed + static_cast<std::uint64_t>(c)));
    AdamState st;
    for (Tensor t : model.encoders.back().parameters()) {
      st.m.push_back(Matrix::Zero(t.rows(), t.cols()));
      st.v.push_back(Matrix::Zero(t.rows(), t.cols()));
    }
    model.optimizer.push_back(std::move(st));
  }
  return model;
}

namespace {

Tensor similarity_input(const GraphRepresentation& rep, bool mean_rows) {
  using namespace autodiff;
  if (!mean_rows) return rep.rep;
  return scale(add(row(rep.rep, 0), row(rep.rep, 1)), 0.5);
}

}  // namespace

Tensor contrastive_loss(const GraphRepresentation& target, const GraphRepresentation& positive,
                        const std::vector<GraphRepresentation>& negatives, double tau,
                        const ContrastiveLossOptions& opts) {
  using namespace autodiff;
  if (tau <= 0.0) throw std::invalid_argument("contrastive_loss: tau must be positive");
  const Tensor tar = similarity_input(target, opts.sim_mean_rows);

  Tensor pos_sim;
  if (opts.no_positive) {
    pos_sim = cosine_sim(tar, tar);
  } else {
    pos_sim = cosine_sim(tar, similarity_input(positive, opts.sim_mean_rows));
  }
  if (opts.no_negative) return scale(pos_sim, -1.0 / tau);

  if (negatives.empty()) {
    throw std::invalid_argument("contrastive_loss: needs at least one negative");
  }
  std::vector<Tensor> terms;
  terms.reserve(negatives.size() + 1);
  for (const GraphRepresentation& neg : negatives) {
    terms.push_back(scale(cosine_sim(tar, similarity_input(neg, opts.sim_mean_rows)), 1.0 / tau));
  }
  if (opts.include_positive_in_denominator) terms.push_back(scale(pos_sim, 1.0 / tau));
  return add(scale(pos_sim, -1.0 / tau), logsumexp(terms));
}

Tensor soft_margin_loss(const Tensor& score, int label) {
  if (label != 1 && label != -1) {
    throw std::invalid_argument("soft_margin_loss: label must be +1 or -1");
  }
  return autodiff::softplus(autodiff::scale(score, -static_cast<double>(label)));
}

void adam_step(EncoderParams& params, AdamState& state, const TrainConfig& cfg) {
  auto tensors = params.parameters();
  ++state.step;
  const double bc1 = 1.0 - std::pow(cfg.adam_beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(cfg.adam_beta2, static_cast<double>(state.step));
  for (std::size_t i = 0; i < tensors.size(); ++i) {
    Tensor& t = tensors[i];
    const Matrix g = t.has_grad() ? t.grad() : Matrix::Zero(t.rows(), t.cols());
    Matrix& m = state.m[i];
    Matrix& v = state.v[i];
    m = cfg.adam_beta1 * m + (1.0 - cfg.adam_beta1) * g;
    v = cfg.adam_beta2 * v + (1.0 - cfg.adam_beta2) * g.cwiseProduct(g);
    const Matrix m_hat = m / bc1;
    const Matrix v_hat = v / bc2;
    t.mutable_value() -= cfg.learning_rate *
        m_hat.cwiseQuotient(v_hat.cwiseSqrt() + Matrix::Constant(v.rows(), v.cols(), cfg.adam_eps));
  }
}

const std::optional<Subgraph>& SubgraphCache::get(const Triplet& t) {
  auto it = cache_.find(t);
  if (it == cache_.end()) it = cache_.emplace(t, extract(*g_, t, hops_)).first;
  return it->second;
}

void SubgraphCache::trim_if_over(std::size_t max_entries) {
  if (cache_.size() > max_entries) cache_.clear();
}

namespace {

/// Every cluster must be able to produce at least one non-empty subgraph.
void validate_clusters(const KnowledgeGraph& g, const ClusterModel& cm, SubgraphCache& cache) {
  std::vector<char> ok(static_cast<std::size_t>(cm.n_c), 0);
  std::vector<long> total(static_cast<std::size_t>(cm.n_c), 0);
  for (const Triplet& t : g.triplets) {
    const auto c = static_cast<std::size_t>(cm.cluster_of(t.rel));
    ++total[c];
    if (!ok[c] && cache.get(t).has_value()) ok[c] = 1;
  }
  for (int c = 0; c < cm.n_c; ++c) {
    if (total[static_cast<std::size_t>(c)] == 0) {
      throw std::runtime_error(fmt::format("cluster {} has no training triplets", c));
    }
    if (!ok[static_cast<std::size_t>(c)]) {
      throw std::runtime_error(
          fmt::format("cluster {} has no triplet with a non-empty subgraph", c));
    }
  }
}

std::vector<int> shuffled_indices(std::size_t n, Rng& rng) {
  std::vector<int> idx(n);
  for (std::size_t i = 0; i < n; ++i) idx[i] = static_cast<int>(i);
  rng.shuffle(idx);
  return idx;
}

struct BatchAccumulator {
  Tensor total;
  int count = 0;
  double loss_sum = 0.0;

  void add(const Tensor& loss) {
    total = count == 0 ? loss : autodiff::add(total, loss);
    loss_sum += loss.scalar();
    ++count;
  }
};

void apply_batch(BatchAccumulator& batch, ModelState& model, const std::set<int>& touched,
                 const TrainConfig& cfg) {
  if (batch.count == 0) return;
  const Tensor mean = autodiff::scale(batch.total, 1.0 / batch.count);
  autodiff::backward(mean);
  for (int c : touched) {
    adam_step(model.encoders[static_cast<std::size_t>(c)],
              model.optimizer[static_cast<std::size_t>(c)], cfg);
    model.encoders[static_cast<std::size_t>(c)].zero_grads();
  }
}

}  // namespace

std::vector<EpochLog> pretrain(const KnowledgeGraph& g, ModelState& model,
                               const TrainConfig& cfg) {
  if (model.clusters.n_c != static_cast<int>(model.encoders.size())) {
    throw std::invalid_argument("pretrain: model encoder count does not match n_c");
  }
  SubgraphCache cache(g, cfg.hops);
  validate_clusters(g, model.clusters, cache);
  const ClusterSampler sampler(g, model.clusters);
  ContrastiveLossOptions loss_opts;
  loss_opts.no_positive = cfg.ablation == Ablation::NoPositive;
  loss_opts.no_negative = cfg.ablation == Ablation::NoNegative;
  loss_opts.include_positive_in_denominator = cfg.include_positive_in_denominator;
  loss_opts.sim_mean_rows = cfg.sim_mean_rows;
  const EncodeOptions enc_opts{cfg.mean_aggregation};

  Rng rng(cfg.seeds().sampling);
  std::vector<EpochLog> logs;
  for (int epoch = 0; epoch < cfg.epochs_pretrain; ++epoch) {
    const auto start = std::chrono::steady_clock::now();
    EpochLog log;
    log.epoch = epoch;
    log.phase = "pretrain";
    double epoch_loss = 0.0;

    BatchAccumulator batch;
    std::set<int> touched;
    for (int idx : shuffled_indices(g.triplets.size(), rng)) {
      const Triplet target = g.triplets[static_cast<std::size_t>(idx)];
      const auto& target_sg = cache.get(target);
      if (!target_sg) {
        ++log.samples_skipped;
        continue;
      }
      const int target_cluster = model.clusters.cluster_of(target.rel);

      // Positive whose subgraph is non-empty, with bounded resampling.
      Triplet positive = target;
      const Subgraph* positive_sg = nullptr;
      for (int retry = 0; retry <= cfg.empty_resample_retries; ++retry) {
        positive = sampler.sample_positive(target, rng);
        const auto& sg = positive == target ? target_sg : cache.get(positive);
        if (sg) {
          positive_sg = &*sg;
          break;
        }
      }
      if (positive_sg == nullptr && !loss_opts.no_positive) {
        ++log.samples_skipped;
        continue;
      }

      // One negative per other cluster; empty-subgraph draws are retried
      // and dropped after the retry budget.
      std::vector<std::pair<int, const Subgraph*>> negative_sgs;
      if (!loss_opts.no_negative) {
        for (int c = 0; c < model.clusters.n_c; ++c) {
          if (c == target_cluster) continue;
          for (int retry = 0; retry <= cfg.empty_resample_retries; ++retry) {
            const Triplet neg = sampler.sample_from_cluster(c, rng);
            const auto& sg = cache.get(neg);
            if (sg) {
              negative_sgs.emplace_back(c, &*sg);
              break;
            }
          }
        }
        if (negative_sgs.empty()) {
          ++log.samples_skipped;
          continue;
        }
      }

      const GraphRepresentation target_rep =
          encode(*target_sg, model.encoders[static_cast<std::size_t>(target_cluster)], enc_opts);
      GraphRepresentation positive_rep = target_rep;
      if (!loss_opts.no_positive && positive != target) {
        positive_rep =
            encode(*positive_sg, model.encoders[static_cast<std::size_t>(target_cluster)], enc_opts);
      }
      std::vector<GraphRepresentation> negative_reps;
      negative_reps.reserve(negative_sgs.size());
      for (const auto& [c, sg] : negative_sgs) {
        negative_reps.push_back(encode(*sg, model.encoders[static_cast<std::size_t>(c)], enc_opts));
        touched.insert(c);
      }
      touched.insert(target_cluster);

      batch.add(contrastive_loss(target_rep, positive_rep, negative_reps, cfg.tau, loss_opts));
      ++log.samples_used;

      if (batch.count >= cfg.batch_size) {
        apply_batch(batch, model, touched, cfg);
        epoch_loss += batch.loss_sum;
        batch = BatchAccumulator{};
        touched.clear();
      }
    }
    apply_batch(batch, model, touched, cfg);
    epoch_loss += batch.loss_sum;

    log.mean_loss = log.samples_used > 0 ? epoch_loss / log.samples_used : 0.0;
    log.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    logs.push_back(log);
  }
  return logs;
}

std::vector<EpochLog> finetune(const KnowledgeGraph& g, ModelState& model, const TrainConfig& cfg,
                               const TripletSet* extra_corruption_filter) {
  SubgraphCache cache(g, cfg.hops);
  validate_clusters(g, model.clusters, cache);
  const EncodeOptions enc_opts{cfg.mean_aggregation};
  CorruptOptions corrupt_opts;
  corrupt_opts.side = CorruptSide::Either;
  corrupt_opts.filtered = cfg.filtered_corruption;
  corrupt_opts.extra_filter = extra_corruption_filter;

  Rng rng(cfg.seeds().sampling + 0x10000);
  std::vector<EpochLog> logs;
  for (int epoch = 0; epoch < cfg.epochs_finetune; ++epoch) {
    const auto start = std::chrono::steady_clock::now();
    EpochLog log;
    log.epoch = epoch;
    log.phase = "finetune";
    double epoch_loss = 0.0;

    BatchAccumulator batch;
    std::set<int> touched;
    for (int idx : shuffled_indices(g.triplets.size(), rng)) {
      cache.trim_if_over(200000);
      const Triplet positive = g.triplets[static_cast<std::size_t>(idx)];
      const auto& pos_sg = cache.get(positive);
      if (!pos_sg) {
        ++log.samples_skipped;
        continue;
      }
      const int cluster = model.clusters.cluster_of(positive.rel);
      EncoderParams& enc = model.encoders[static_cast<std::size_t>(cluster)];

      std::vector<Tensor> sample_losses;
      sample_losses.push_back(
          soft_margin_loss(score(encode(*pos_sg, enc, enc_opts), enc), +1));
      for (int k = 0; k < cfg.negatives_per_positive_finetune; ++k) {
        const Triplet neg = corrupt(positive, g, rng, corrupt_opts);
        const auto& neg_sg = cache.get(neg);
        if (!neg_sg) continue;  // empty-subgraph negatives are skipped
        sample_losses.push_back(
            soft_margin_loss(score(encode(*neg_sg, enc, enc_opts), enc), -1));
      }
      Tensor triplet_loss = sample_losses[0];
      for (std::size_t i = 1; i < sample_losses.size(); ++i) {
        triplet_loss = autodiff::add(triplet_loss, sample_losses[i]);
      }
      triplet_loss = autodiff::scale(triplet_loss, 1.0 / static_cast<double>(sample_losses.size()));

      touched.insert(cluster);
      batch.add(triplet_loss);
      ++log.samples_used;

      if (batch.count >= cfg.batch_size) {
        apply_batch(batch, model, touched, cfg);
        epoch_loss += batch.loss_sum;
        batch = BatchAccumulator{};
        touched.clear();
      }
    }
    apply_batch(batch, model, touched, cfg);
    epoch_loss += batch.loss_sum;

    log.mean_loss = log.samples_used > 0 ? epoch_loss / log.samples_used : 0.0;
    log.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    logs.push_back(log);
  }
  return logs;
}

}  // namespace kgcl
