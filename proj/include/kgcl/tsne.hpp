// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>

#include "kgcl/common.hpp"

namespace kgcl {

struct TsneConfig {
  int output_dim = 2;
  double perplexity = 30.0;  // clamped to (n - 1) / 3
  int iters = 1000;
  double learning_rate = 200.0;
  double exaggeration_factor = 12.0;
  int exaggeration_iters = 250;
  double momentum_initial = 0.5;
  double momentum_final = 0.8;
  int momentum_switch_iter = 250;
  std::uint64_t seed = 0;
};

struct ReducedEmbedding {
  Matrix points;  // n x output_dim
  double final_kl = 0.0;
  double first_post_exaggeration_kl = 0.0;
};

double clamp_perplexity(double perplexity, int n);

/// Symmetrized Gaussian affinities with per-row bandwidths found by
/// binary search so that 2^(row entropy) matches the perplexity.
/// P is symmetric, non-negative, zero-diagonal, and sums to 1.
Matrix pairwise_affinities(const Eigen::Ref<const Matrix>& points, double perplexity);

/// Exact O(n^2) embedding by gradient descent on KL(P || Q) with the
/// Student-t low-dimensional kernel, momentum, and early exaggeration.
ReducedEmbedding tsne(const Eigen::Ref<const Matrix>& points, const TsneConfig& cfg);

/// PCA projection onto the top `dim` principal components (alternative
/// reducer; deterministic sign convention).
Matrix pca_reduce(const Eigen::Ref<const Matrix>& points, int dim);

}  // namespace kgcl
