// SPDX-License-Identifier: Apache-2.0
#include "kgcl/tsne.hpp"

#include <fmt/format.h>

#include <cmath>
#include <limits>
#include <stdexcept>

namespace kgcl {

namespace {

Matrix squared_distances(const Eigen::Ref<const Matrix>& x) {
  const Vector norms = x.rowwise().squaredNorm();
  Matrix d = (-2.0 * x * x.transpose()).colwise() + norms;
  d.rowwise() += norms.transpose();
  return d.cwiseMax(0.0);
}

/// Conditional row p_{j|i} for a given precision beta = 1 / (2 sigma^2),
/// returning the row perplexity 2^H. Distances are shifted by the row
/// minimum before exponentiation so large betas stay representable.
double conditional_row(const Matrix& d2, int i, double beta, Vector& row) {
  const int n = static_cast<int>(d2.rows());
  double dmin = std::numeric_limits<double>::max();
  for (int j = 0; j < n; ++j) {
    if (j != i) dmin = std::min(dmin, d2(i, j));
  }
  double sum = 0.0;
  for (int j = 0; j < n; ++j) {
    if (j == i) {
      row(j) = 0.0;
      continue;
    }
    row(j) = std::exp(-beta * (d2(i, j) - dmin));
    sum += row(j);
  }
  row /= sum;
  double h_bits = 0.0;
  for (int j = 0; j < n; ++j) {
    if (j != i && row(j) > 0.0) h_bits -= row(j) * std::log2(row(j));
  }
  return std::exp2(h_bits);
}

double kl_divergence(const Matrix& p, const Matrix& q) {
  constexpr double kTiny = 1e-12;
  double kl = 0.0;
  for (int i = 0; i < p.rows(); ++i) {
    for (int j = 0; j < p.cols(); ++j) {
      if (p(i, j) > 0.0) kl += p(i, j) * std::log(p(i, j) / std::max(q(i, j), kTiny));
    }
  }
  return kl;
}

}  // namespace

double clamp_perplexity(double perplexity, int n) {
  return std::min(perplexity, static_cast<double>(n - 1) / 3.0);
}

Matrix pairwise_affinities(const Eigen::Ref<const Matrix>& points, double perplexity) {
  const int n = static_cast<int>(points.rows());
  if (n < 4) {
    throw std::invalid_argument(
        fmt::format("pairwise_affinities: need at least 4 points, got {}", n));
  }
  if (perplexity <= 0.0 || perplexity > static_cast<double>(n - 1)) {
    throw std::invalid_argument(fmt::format(
        "pairwise_affinities: perplexity {} out of range for n={}", perplexity, n));
  }
  const Matrix d2 = squared_distances(points);
  Matrix cond = Matrix::Zero(n, n);
  Vector row(n);
  for (int i = 0; i < n; ++i) {
    double beta = 1.0, lo = 0.0, hi = std::numeric_limits<double>::infinity();
    double perp = conditional_row(d2, i, beta, row);
    for (int it = 0; it < 200 && std::abs(perp - perplexity) > 1e-6; ++it) {
      if (perp > perplexity) {
        lo = beta;
        beta = std::isinf(hi) ? beta * 2.0 : 0.5 * (beta + hi);
      } else {
        hi = beta;
        beta = 0.5 * (beta + lo);
      }
      perp = conditional_row(d2, i, beta, row);
    }
    cond.row(i) = row.transpose();
  }
  return (cond + cond.transpose()) / (2.0 * n);
}

ReducedEmbedding tsne(const Eigen::Ref<const Matrix>& points, const TsneConfig& cfg) {
  const int n = static_cast<int>(points.rows());
  if (n < 4) {
    throw std::invalid_argument(fmt::format("tsne: need at least 4 points, got {}", n));
  }
  if (cfg.output_dim < 1 || cfg.iters < 1) {
    throw std::invalid_argument("tsne: output_dim and iters must be positive");
  }
  const double perplexity = clamp_perplexity(cfg.perplexity, n);
  const Matrix p_plain = pairwise_affinities(points, perplexity);

  Rng rng(cfg.seed);
  Matrix y(n, cfg.output_dim);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < cfg.output_dim; ++j) y(i, j) = 1e-4 * rng.normal();
  }
  Matrix velocity = Matrix::Zero(n, cfg.output_dim);
  Matrix q(n, n), num(n, n), grad(n, cfg.output_dim);

  ReducedEmbedding out;
  bool first_post_seen = false;
  for (int it = 0; it < cfg.iters; ++it) {
    const bool exaggerating = it < cfg.exaggeration_iters;

    const Matrix d2 = squared_distances(y);
    num = (1.0 + d2.array()).inverse().matrix();
    num.diagonal().setZero();
    const double z = num.sum();
    q = num / z;

    for (int i = 0; i < n; ++i) {
      Eigen::RowVectorXd acc = Eigen::RowVectorXd::Zero(cfg.output_dim);
      for (int j = 0; j < n; ++j) {
        if (j == i) continue;
        const double p_ij = exaggerating ? cfg.exaggeration_factor * p_plain(i, j) : p_plain(i, j);
        acc += (p_ij - q(i, j)) * num(i, j) * (y.row(i) - y.row(j));
      }
      grad.row(i) = 4.0 * acc;
    }

    const double momentum =
        it < cfg.momentum_switch_iter ? cfg.momentum_initial : cfg.momentum_final;
    velocity = momentum * velocity - cfg.learning_rate * grad;
    y += velocity;
    y.rowwise() -= y.colwise().mean();

    if (!y.allFinite()) {
      throw std::runtime_error(
          "tsne: non-finite iterate; retry with a smaller learning_rate");
    }

    if (!exaggerating && !first_post_seen) {
      first_post_seen = true;
      out.first_post_exaggeration_kl = kl_divergence(p_plain, q);
    }
  }

  {
    const Matrix d2 = squared_distances(y);
    num = (1.0 + d2.array()).inverse().matrix();
    num.diagonal().setZero();
    q = num / num.sum();
    out.final_kl = kl_divergence(p_plain, q);
  }
  if (!first_post_seen) out.first_post_exaggeration_kl = out.final_kl;
  out.points = std::move(y);
  return out;
}

Matrix pca_reduce(const Eigen::Ref<const Matrix>& points, int dim) {
  const int n = static_cast<int>(points.rows());
  const int max_dim = static_cast<int>(std::min<Eigen::Index>(points.cols(), n));
  if (dim < 1 || dim > max_dim) {
    throw std::invalid_argument(fmt::format("pca_reduce: dim {} out of range", dim));
  }
  Matrix centered = points.rowwise() - points.colwise().mean();
  Eigen::BDCSVD<Matrix> svd(centered, Eigen::ComputeThinV);
  Matrix basis = svd.matrixV().leftCols(dim);
  // Fix component signs: largest-magnitude coefficient positive.
  for (int c = 0; c < dim; ++c) {
    int arg = 0;
    basis.col(c).cwiseAbs().maxCoeff(&arg);
    if (basis(arg, c) < 0.0) basis.col(c) = -basis.col(c);
  }
  return centered * basis;
}

}  // namespace kgcl
