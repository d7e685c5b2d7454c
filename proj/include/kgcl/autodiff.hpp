// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "kgcl/common.hpp"

namespace kgcl::autodiff {

/// Dense f64 matrix node with an optional gradient buffer. Tensors are
/// cheap shared handles; forward ops verify shapes and finiteness and
/// record a backward closure on the active tape when any input requires
/// gradients.
class Tensor {
 public:
  Tensor() = default;

  static Tensor constant(Matrix value);
  static Tensor parameter(Matrix value);
  static Tensor make(Matrix value, bool requires_grad);

  bool defined() const { return node_ != nullptr; }
  const Matrix& value() const { return node_->value; }
  Matrix& mutable_value() { return node_->value; }
  bool requires_grad() const { return node_->requires_grad; }

  Eigen::Index rows() const { return node_->value.rows(); }
  Eigen::Index cols() const { return node_->value.cols(); }

  /// Value of a 1x1 tensor.
  double scalar() const;

  /// Accumulated gradient; reads as zeros before any accumulation.
  const Matrix& grad();
  bool has_grad() const { return node_->grad_set; }
  void accumulate_grad(const Matrix& g);
  void zero_grad();

  bool same_node(const Tensor& other) const { return node_ == other.node_; }

 private:
  struct Node {
    Matrix value;
    Matrix grad;
    bool requires_grad = false;
    bool grad_set = false;
  };
  std::shared_ptr<Node> node_;
};

/// Thread-local record of forward operations; backward replays it in
/// exact reverse order and then clears it.
class Tape {
 public:
  static Tape& active();

  void record(std::function<void()> backward_step);
  std::size_t size() const { return steps_.size(); }
  void clear() { steps_.clear(); }

  /// Seeds d(loss)/d(loss) = 1, sweeps the tape in reverse accumulating
  /// gradients (+=) into every requires-grad tensor, then clears the tape.
  void backward(const Tensor& loss);

  bool recording_enabled() const { return enabled_; }
  void set_enabled(bool on) { enabled_ = on; }

 private:
  std::vector<std::function<void()>> steps_;
  bool enabled_ = true;
};

/// Disables tape recording in scope (inference / oracle evaluation).
class NoGradGuard {
 public:
  NoGradGuard() : previous_(Tape::active().recording_enabled()) {
    Tape::active().set_enabled(false);
  }
  ~NoGradGuard() { Tape::active().set_enabled(previous_); }
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

void backward(const Tensor& loss);

Tensor matmul(const Tensor& a, const Tensor& b);
Tensor add(const Tensor& a, const Tensor& b);  // same shape
Tensor add_row_bias(const Tensor& a, const Tensor& bias);  // bias is 1 x cols
Tensor relu(const Tensor& a);  // subgradient at 0 is 0
Tensor concat_rows(const Tensor& a, const Tensor& b);
Tensor flatten_rows(const Tensor& a);  // 1 x (rows*cols), row-major order
Tensor row(const Tensor& a, int index);
Tensor scale(const Tensor& a, double factor);
Tensor sigmoid(const Tensor& a);
Tensor softplus(const Tensor& a);

/// Sparse constant times dense tensor (the incidence products); only the
/// dense side carries gradients.
Tensor spmm(const SparseMatrix& sparse, const Tensor& dense, bool transpose_sparse = false);

/// Cosine similarity of the row-major flattened inputs (equal element
/// counts required). Zero-norm inputs are an error.
Tensor cosine_sim(const Tensor& a, const Tensor& b);

/// Stable log(sum(exp(s_i))) over 1x1 tensors.
Tensor logsumexp(const std::vector<Tensor>& scalars);

}  // namespace kgcl::autodiff
