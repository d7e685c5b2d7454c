// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <vector>

#include "kgcl/common.hpp"
#include "kgcl/kg.hpp"

namespace kgcl {

struct ClusterModel {
  int n_c = 0;
  std::vector<int> assignment;         // relation id -> cluster id
  Matrix centroids;                    // n_c x d_r
  Matrix semantic_ref;                 // retained semantic rows (n_r x 300)
  std::vector<int> semantic_coverage;  // in-vocab token counts per relation
  double objective = 0.0;
  std::vector<double> objective_trace;  // objective after each Lloyd iteration

  int cluster_of(int rel) const { return assignment[static_cast<std::size_t>(rel)]; }
  std::vector<std::vector<int>> members() const;
};

/// Seeded k-means++ followed by Lloyd iterations until the assignment
/// reaches a fixpoint (at most 300 iterations). Ties in nearest-centroid
/// go to the lowest cluster id; an empty cluster is repaired by moving in
/// the point farthest from its current centroid. The objective is
/// non-increasing across iterations.
ClusterModel kmeans(const Eigen::Ref<const Matrix>& points, int n_c, std::uint64_t seed);

/// Best of `restarts` seeded kmeans runs by objective.
ClusterModel kmeans_restarts(const Eigen::Ref<const Matrix>& points, int n_c,
                             std::uint64_t seed, int restarts);

/// Seeded random relation->cluster assignment (shuffle + round-robin deal,
/// so no cluster is empty). Used by the cluster-sampling ablation.
ClusterModel random_clusters(const Eigen::Ref<const Matrix>& points, int n_c,
                             std::uint64_t seed);

struct UnseenAssignment {
  int cluster = -1;
  int nearest_relation = -1;
  double cosine_distance = 0.0;
};

/// Nearest training relation in semantic (300-d) space by cosine distance;
/// the query inherits that relation's cluster. Ties break toward the
/// lowest relation id. A zero query vector is an error (caller may supply
/// a manual cluster override instead).
UnseenAssignment assign_unseen(const Eigen::Ref<const Vector>& query, const ClusterModel& cm);

struct ContrastiveBatch {
  Triplet target;
  Triplet positive;
  std::vector<Triplet> negatives;  // ascending cluster id, skipping the target's
};

/// Precomputed per-relation triplet lists for the two-stage cluster
/// sampler. Immutable after construction; callers own their rng streams.
class ClusterSampler {
 public:
  ClusterSampler(const KnowledgeGraph& g, const ClusterModel& cm);

  /// Uniform over the target cluster's relations that have at least one
  /// non-target triplet, then uniform over that relation's triplets
  /// (excluding the target). Falls back to the target itself when the
  /// cluster holds no alternative.
  Triplet sample_positive(const Triplet& target, Rng& rng) const;

  /// One triplet from each cluster other than the target's, ascending
  /// cluster id, each via the two-stage uniform rule.
  std::vector<Triplet> sample_negatives(const Triplet& target, Rng& rng) const;

  Triplet sample_from_cluster(int cluster, Rng& rng) const;
  long cluster_triplet_count(int cluster) const;

 private:
  const KnowledgeGraph* g_;
  const ClusterModel* cm_;
  std::vector<std::vector<int>> triplets_by_relation_;
  std::vector<std::vector<int>> relations_by_cluster_;  // only relations with data
};

Triplet sample_positive(const Triplet& target, const KnowledgeGraph& g,
                        const ClusterModel& cm, Rng& rng);
std::vector<Triplet> sample_negatives(const Triplet& target, const KnowledgeGraph& g,
                                      const ClusterModel& cm, Rng& rng);

}  // namespace kgcl
