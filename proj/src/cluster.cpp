// SPDX-License-Identifier: Apache-2.0
#include "kgcl/cluster.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <limits>
#include <stdexcept>

namespace kgcl {

std::vector<std::vector<int>> ClusterModel::members() const {
  std::vector<std::vector<int>> out(static_cast<std::size_t>(n_c));
  for (int r = 0; r < static_cast<int>(assignment.size()); ++r) {
    out[static_cast<std::size_t>(assignment[static_cast<std::size_t>(r)])].push_back(r);
  }
  return out;
}

namespace {

int nearest_centroid(const Matrix& centroids, const Eigen::RowVectorXd& point) {
  int best = 0;
  double best_d = (centroids.row(0) - point).squaredNorm();
  for (int c = 1; c < centroids.rows(); ++c) {
    const double d = (centroids.row(c) - point).squaredNorm();
    if (d < best_d) {
      best_d = d;
      best = c;
    }
  }
  return best;
}

double sum_squared_error(const Matrix& points, const Matrix& centroids,
                         const std::vector<int>& assignment) {
  double obj = 0.0;
  for (int i = 0; i < points.rows(); ++i) {
    obj += (points.row(i) - centroids.row(assignment[static_cast<std::size_t>(i)])).squaredNorm();
  }
  return obj;
}

Matrix plus_plus_init(const Eigen::Ref<const Matrix>& points, int n_c, Rng& rng) {
  const int n = static_cast<int>(points.rows());
  std::vector<int> chosen;
  chosen.push_back(rng.index(static_cast<std::size_t>(n)));
  Vector best_d2 = Vector::Constant(n, std::numeric_limits<double>::max());
  while (static_cast<int>(chosen.size()) < n_c) {
    const int last = chosen.back();
    for (int i = 0; i < n; ++i) {
      best_d2(i) = std::min(best_d2(i), (points.row(i) - points.row(last)).squaredNorm());
    }
    const double total = best_d2.sum();
    int pick = -1;
    if (total > 0.0) {
      double r = rng.uniform01() * total;
      for (int i = 0; i < n; ++i) {
        r -= best_d2(i);
        if (r <= 0.0) {
          pick = i;
          break;
        }
      }
      if (pick < 0) pick = n - 1;
    } else {
      // All points coincide with a chosen center; fall back to an unused index.
      for (int i = 0; i < n; ++i) {
        if (std::find(chosen.begin(), chosen.end(), i) == chosen.end()) {
          pick = i;
          break;
        }
      }
      if (pick < 0) pick = rng.index(static_cast<std::size_t>(n));
    }
    chosen.push_back(pick);
  }
  Matrix centroids(n_c, points.cols());
  for (int c = 0; c < n_c; ++c) centroids.row(c) = points.row(chosen[static_cast<std::size_t>(c)]);
  return centroids;
}

}  // namespace

ClusterModel kmeans(const Eigen::Ref<const Matrix>& points, int n_c, std::uint64_t seed) {
  const int n = static_cast<int>(points.rows());
  if (n_c < 2) throw std::invalid_argument("kmeans: n_c must be at least 2");
  if (n < n_c) {
    throw std::invalid_argument(fmt::format("kmeans: {} points cannot fill {} clusters", n, n_c));
  }
  Rng rng(seed);
  Matrix centroids = plus_plus_init(points, n_c, rng);
  std::vector<int> assignment(static_cast<std::size_t>(n), -1);
  std::vector<double> trace;

  for (int iter = 0; iter < 300; ++iter) {
    std::vector<int> next(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) next[static_cast<std::size_t>(i)] = nearest_centroid(centroids, points.row(i));

    // Repair empty clusters with the point farthest from its centroid,
    // never draining a singleton cluster.
    std::vector<int> sizes(static_cast<std::size_t>(n_c), 0);
    for (int a : next) ++sizes[static_cast<std::size_t>(a)];
    for (int c = 0; c < n_c; ++c) {
      if (sizes[static_cast<std::size_t>(c)] > 0) continue;
      int farthest = -1;
      double far_d = -1.0;
      for (int i = 0; i < n; ++i) {
        const int a = next[static_cast<std::size_t>(i)];
        if (sizes[static_cast<std::size_t>(a)] < 2) continue;
        const double d = (points.row(i) - centroids.row(a)).squaredNorm();
        if (d > far_d) {
          far_d = d;
          farthest = i;
        }
      }
      if (farthest < 0) throw std::logic_error("kmeans: cannot repair empty cluster");
      --sizes[static_cast<std::size_t>(next[static_cast<std::size_t>(farthest)])];
      next[static_cast<std::size_t>(farthest)] = c;
      ++sizes[static_cast<std::size_t>(c)] ;
    }

    const bool converged = next == assignment;
    assignment = std::move(next);
    for (int c = 0; c < n_c; ++c) {
      Eigen::RowVectorXd mean = Eigen::RowVectorXd::Zero(points.cols());
      for (int i = 0; i < n; ++i) {
        if (assignment[static_cast<std::size_t>(i)] == c) mean += points.row(i);
      }
      centroids.row(c) = mean / sizes[static_cast<std::size_t>(c)];
    }
    const double obj = sum_squared_error(points, centroids, assignment);
    if (!trace.empty() && obj > trace.back() + 1e-9 * std::max(1.0, trace.back())) {
      throw std::logic_error(fmt::format(
          "kmeans: objective increased from {} to {}", trace.back(), obj));
    }
    trace.push_back(obj);
    if (converged) break;
  }

  ClusterModel cm;
  cm.n_c = n_c;
  cm.assignment = std::move(assignment);
  cm.centroids = std::move(centroids);
  cm.objective = trace.back();
  cm.objective_trace = std::move(trace);
  return cm;
}

ClusterModel kmeans_restarts(const Eigen::Ref<const Matrix>& points, int n_c,
                             std::uint64_t seed, int restarts) {
  if (restarts < 1) throw std::invalid_argument("kmeans_restarts: restarts must be positive");
  ClusterModel best;
  for (int r = 0; r < restarts; ++r) {
    ClusterModel cm = kmeans(points, n_c, seed + static_cast<std::uint64_t>(r));
    if (r == 0 || cm.objective < best.objective) best = std::move(cm);
  }
  return best;
}

ClusterModel random_clusters(const Eigen::Ref<const Matrix>& points, int n_c,
                             std::uint64_t seed) {
  const int n = static_cast<int>(points.rows());
  if (n_c < 2 || n < n_c) throw std::invalid_argument("random_clusters: need n >= n_c >= 2");
  std::vector<int> order(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) order[static_cast<std::size_t>(i)] = i;
  Rng rng(seed);
  rng.shuffle(order);

  ClusterModel cm;
  cm.n_c = n_c;
  cm.assignment.assign(static_cast<std::size_t>(n), 0);
  for (int pos = 0; pos < n; ++pos) {
    cm.assignment[static_cast<std::size_t>(order[static_cast<std::size_t>(pos)])] = pos % n_c;
  }
  cm.centroids = Matrix::Zero(n_c, points.cols());
  std::vector<int> sizes(static_cast<std::size_t>(n_c), 0);
  for (int i = 0; i < n; ++i) {
    const int c = cm.assignment[static_cast<std::size_t>(i)];
    cm.centroids.row(c) += points.row(i);
    ++sizes[static_cast<std::size_t>(c)];
  }
  for (int c = 0; c < n_c; ++c) cm.centroids.row(c) /= sizes[static_cast<std::size_t>(c)];
  cm.objective = sum_squared_error(points, cm.centroids, cm.assignment);
  cm.objective_trace = {cm.objective};
  return cm;
}

UnseenAssignment assign_unseen(const Eigen::Ref<const Vector>& query, const ClusterModel& cm) {
  if (cm.semantic_ref.rows() == 0) {
    throw std::invalid_argument("assign_unseen: cluster model retains no semantic vectors");
  }
  const double qn = query.norm();
  if (qn == 0.0) {
    throw std::invalid_argument(
        "assign_unseen: query vector is all zeros (fully out-of-vocabulary); "
        "supply a manual cluster override");
  }
  UnseenAssignment best;
  double best_d = std::numeric_limits<double>::max();
  for (int r = 0; r < cm.semantic_ref.rows(); ++r) {
    const double rn = cm.semantic_ref.row(r).norm();
    if (rn == 0.0) continue;  // fully-OOV training relation, not a usable anchor
    const double d = 1.0 - cm.semantic_ref.row(r).dot(query) / (rn * qn);
    if (d < best_d) {
      best_d = d;
      best.nearest_relation = r;
    }
  }
  if (best.nearest_relation < 0) {
    throw std::runtime_error("assign_unseen: no training relation has a semantic vector");
  }
  best.cluster = cm.cluster_of(best.nearest_relation);
  best.cosine_distance = best_d;
  return best;
}

ClusterSampler::ClusterSampler(const KnowledgeGraph& g, const ClusterModel& cm)
    : g_(&g), cm_(&cm) {
  triplets_by_relation_.resize(static_cast<std::size_t>(g.num_relations()));
  for (int i = 0; i < g.num_triplets(); ++i) {
    triplets_by_relation_[static_cast<std::size_t>(g.triplets[static_cast<std::size_t>(i)].rel)]
        .push_back(i);
  }
  relations_by_cluster_.resize(static_cast<std::size_t>(cm.n_c));
  for (int r = 0; r < g.num_relations(); ++r) {
    if (!triplets_by_relation_[static_cast<std::size_t>(r)].empty()) {
      relations_by_cluster_[static_cast<std::size_t>(cm.cluster_of(r))].push_back(r);
    }
  }
}

long ClusterSampler::cluster_triplet_count(int cluster) const {
  long total = 0;
  for (int r : relations_by_cluster_[static_cast<std::size_t>(cluster)]) {
    total += static_cast<long>(triplets_by_relation_[static_cast<std::size_t>(r)].size());
  }
  return total;
}

Triplet ClusterSampler::sample_positive(const Triplet& target, Rng& rng) const {
  const int cluster = cm_->cluster_of(target.rel);
  if (cluster_triplet_count(cluster) == 0) {
    throw std::runtime_error(
        fmt::format("sample_positive: cluster {} has no triplets", cluster));
  }
  // Relations offering at least one non-target triplet.
  std::vector<int> eligible;
  for (int r : relations_by_cluster_[static_cast<std::size_t>(cluster)]) {
    const auto& list = triplets_by_relation_[static_cast<std::size_t>(r)];
    if (r != target.rel) {
      eligible.push_back(r);
    } else if (list.size() > 1 ||
               (list.size() == 1 && g_->triplets[static_cast<std::size_t>(list[0])] != target)) {
      eligible.push_back(r);
    }
  }
  if (eligible.empty()) return target;  // degenerate cluster: self-positive

  const int rel = eligible[static_cast<std::size_t>(rng.index(eligible.size()))];
  const auto& list = triplets_by_relation_[static_cast<std::size_t>(rel)];
  for (;;) {
    const Triplet& pick = g_->triplets[static_cast<std::size_t>(
        list[static_cast<std::size_t>(rng.index(list.size()))])];
    if (pick != target) return pick;
  }
}

Triplet ClusterSampler::sample_from_cluster(int cluster, Rng& rng) const {
  const auto& rels = relations_by_cluster_[static_cast<std::size_t>(cluster)];
  if (rels.empty()) {
    throw std::runtime_error(
        fmt::format("sample_from_cluster: cluster {} has no triplets", cluster));
  }
  const int rel = rels[static_cast<std::size_t>(rng.index(rels.size()))];
  const auto& list = triplets_by_relation_[static_cast<std::size_t>(rel)];
  return g_->triplets[static_cast<std::size_t>(list[static_cast<std::size_t>(rng.index(list.size()))])];
}

std::vector<Triplet> ClusterSampler::sample_negatives(const Triplet& target, Rng& rng) const {
  const int own = cm_->cluster_of(target.rel);
  std::vector<Triplet> out;
  out.reserve(static_cast<std::size_t>(cm_->n_c - 1));
  for (int c = 0; c < cm_->n_c; ++c) {
    if (c == own) continue;
    out.push_back(sample_from_cluster(c, rng));
  }
  return out;
}

Triplet sample_positive(const Triplet& target, const KnowledgeGraph& g, const ClusterModel& cm,
                        Rng& rng) {
  return ClusterSampler(g, cm).sample_positive(target, rng);
}

std::vector<Triplet> sample_negatives(const Triplet& target, const KnowledgeGraph& g,
                                      const ClusterModel& cm, Rng& rng) {
  return ClusterSampler(g, cm).sample_negatives(target, rng);
}

}  // namespace kgcl
