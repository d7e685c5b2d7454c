// SPDX-License-Identifier: Apache-2.0
#include "kgcl/autodiff.hpp"

#include <fmt/format.h>

#include <cmath>
#include <limits>
#include <stdexcept>

namespace kgcl::autodiff {

namespace {

void check_finite(const Matrix& m, const char* op) {
  if (!m.allFinite()) {
    throw std::runtime_error(fmt::format("{}: non-finite value in forward pass", op));
  }
}

void check_shape(bool ok, const char* op, const Tensor& a, const Tensor& b) {
  if (!ok) {
    throw std::invalid_argument(fmt::format("{}: incompatible shapes {}x{} and {}x{}", op,
                                            a.rows(), a.cols(), b.rows(), b.cols()));
  }
}

bool should_record(std::initializer_list<const Tensor*> inputs) {
  if (!Tape::active().recording_enabled()) return false;
  for (const Tensor* t : inputs) {
    if (t->requires_grad()) return true;
  }
  return false;
}

/// Row-major flatten of a (possibly col-major) Eigen matrix.
Matrix flatten_value(const Matrix& m) {
  Matrix out(1, m.size());
  Eigen::Index k = 0;
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) out(0, k++) = m(r, c);
  }
  return out;
}

Matrix unflatten_like(const Matrix& flat, Eigen::Index rows, Eigen::Index cols) {
  Matrix out(rows, cols);
  Eigen::Index k = 0;
  for (Eigen::Index r = 0; r < rows; ++r) {
    for (Eigen::Index c = 0; c < cols; ++c) out(r, c) = flat(0, k++);
  }
  return out;
}

}  // namespace

Tensor Tensor::make(Matrix value, bool requires_grad) {
  Tensor t;
  t.node_ = std::make_shared<Node>();
  t.node_->value = std::move(value);
  t.node_->requires_grad = requires_grad;
  return t;
}

Tensor Tensor::constant(Matrix value) { return make(std::move(value), false); }
Tensor Tensor::parameter(Matrix value) { return make(std::move(value), true); }

double Tensor::scalar() const {
  if (rows() != 1 || cols() != 1) {
    throw std::invalid_argument(
        fmt::format("scalar(): tensor is {}x{}, not 1x1", rows(), cols()));
  }
  return node_->value(0, 0);
}

const Matrix& Tensor::grad() {
  if (!node_->grad_set) {
    node_->grad = Matrix::Zero(node_->value.rows(), node_->value.cols());
    node_->grad_set = true;
  }
  return node_->grad;
}

void Tensor::accumulate_grad(const Matrix& g) {
  if (g.rows() != rows() || g.cols() != cols()) {
    throw std::logic_error(fmt::format("gradient shape {}x{} does not match value {}x{}",
                                       g.rows(), g.cols(), rows(), cols()));
  }
  if (node_->grad_set) {
    node_->grad += g;
  } else {
    node_->grad = g;
    node_->grad_set = true;
  }
}

void Tensor::zero_grad() {
  node_->grad_set = false;
  node_->grad.resize(0, 0);
}

Tape& Tape::active() {
  thread_local Tape tape;
  return tape;
}

void Tape::record(std::function<void()> backward_step) {
  steps_.push_back(std::move(backward_step));
}

void Tape::backward(const Tensor& loss) {
  if (loss.rows() != 1 || loss.cols() != 1) {
    throw std::invalid_argument(fmt::format("backward: loss must be 1x1, got {}x{}",
                                            loss.rows(), loss.cols()));
  }
  if (steps_.empty()) {
    throw std::logic_error("backward: tape is empty");
  }
  Tensor seed = loss;
  seed.accumulate_grad(Matrix::Ones(1, 1));
  for (auto it = steps_.rbegin(); it != steps_.rend(); ++it) (*it)();
  clear();
}

void backward(const Tensor& loss) { Tape::active().backward(loss); }

Tensor matmul(const Tensor& a, const Tensor& b) {
  check_shape(a.cols() == b.rows(), "matmul", a, b);
  const bool rec = should_record({&a, &b});
  Tensor out = Tensor::make(a.value() * b.value(), rec);
  check_finite(out.value(), "matmul");
  if (rec) {
    Tape::active().record([a, b, out]() mutable {
      if (!out.has_grad()) return;
      const Matrix& g = out.grad();
      if (a.requires_grad()) a.accumulate_grad(g * b.value().transpose());
      if (b.requires_grad()) b.accumulate_grad(a.value().transpose() * g);
    });
  }
  return out;
}

Tensor add(const Tensor& a, const Tensor& b) {
  check_shape(a.rows() == b.rows() && a.cols() == b.cols(), "add", a, b);
  const bool rec = should_record({&a, &b});
  Tensor out = Tensor::make(a.value() + b.value(), rec);
  check_finite(out.value(), "add");
  if (rec) {
    Tape::active().record([a, b, out]() mutable {
      if (!out.has_grad()) return;
      const Matrix& g = out.grad();
      if (a.requires_grad()) a.accumulate_grad(g);
      if (b.requires_grad()) b.accumulate_grad(g);
    });
  }
  return out;
}

Tensor add_row_bias(const Tensor& a, const Tensor& bias) {
  check_shape(bias.rows() == 1 && bias.cols() == a.cols(), "add_row_bias", a, bias);
  const bool rec = should_record({&a, &bias});
  Matrix v = a.value();
  v.rowwise() += bias.value().row(0);
  Tensor out = Tensor::make(std::move(v), rec);
  check_finite(out.value(), "add_row_bias");
  if (rec) {
    Tape::active().record([a, bias, out]() mutable {
      if (!out.has_grad()) return;
      const Matrix& g = out.grad();
      if (a.requires_grad()) a.accumulate_grad(g);
      if (bias.requires_grad()) bias.accumulate_grad(g.colwise().sum());
    });
  }
  return out;
}

Tensor relu(const Tensor& a) {
  const bool rec = should_record({&a});
  Tensor out = Tensor::make(a.value().cwiseMax(0.0), rec);
  check_finite(out.value(), "relu");
  if (rec) {
    Tape::active().record([a, out]() mutable {
      if (!out.has_grad() || !a.requires_grad()) return;
      const Matrix mask = (a.value().array() > 0.0).cast<double>().matrix();
      a.accumulate_grad(out.grad().cwiseProduct(mask));
    });
  }
  return out;
}

Tensor concat_rows(const Tensor& a, const Tensor& b) {
  check_shape(a.cols() == b.cols(), "concat_rows", a, b);
  const bool rec = should_record({&a, &b});
  Matrix v(a.rows() + b.rows(), a.cols());
  v.topRows(a.rows()) = a.value();
  v.bottomRows(b.rows()) = b.value();
  Tensor out = Tensor::make(std::move(v), rec);
  check_finite(out.value(), "concat_rows");
  if (rec) {
    Tape::active().record([a, b, out]() mutable {
      if (!out.has_grad()) return;
      const Matrix& g = out.grad();
      if (a.requires_grad()) a.accumulate_grad(g.topRows(a.rows()));
      if (b.requires_grad()) b.accumulate_grad(g.bottomRows(b.rows()));
    });
  }
  return out;
}

Tensor flatten_rows(const Tensor& a) {
  const bool rec = should_record({&a});
  Tensor out = Tensor::make(flatten_value(a.value()), rec);
  if (rec) {
    Tape::active().record([a, out]() mutable {
      if (!out.has_grad() || !a.requires_grad()) return;
      a.accumulate_grad(unflatten_like(out.grad(), a.rows(), a.cols()));
    });
  }
  return out;
}

Tensor row(const Tensor& a, int index) {
  if (index < 0 || index >= a.rows()) {
    throw std::invalid_argument(fmt::format("row: index {} out of range [0, {})", index, a.rows()));
  }
  const bool rec = should_record({&a});
  Tensor out = Tensor::make(a.value().row(index), rec);
  if (rec) {
    Tape::active().record([a, out, index]() mutable {
      if (!out.has_grad() || !a.requires_grad()) return;
      Matrix g = Matrix::Zero(a.rows(), a.cols());
      g.row(index) = out.grad();
      a.accumulate_grad(g);
    });
  }
  return out;
}

Tensor scale(const Tensor& a, double factor) {
  const bool rec = should_record({&a});
  Tensor out = Tensor::make(a.value() * factor, rec);
  check_finite(out.value(), "scale");
  if (rec) {
    Tape::active().record([a, out, factor]() mutable {
      if (!out.has_grad() || !a.requires_grad()) return;
      a.accumulate_grad(out.grad() * factor);
    });
  }
  return out;
}

Tensor sigmoid(const Tensor& a) {
  const bool rec = should_record({&a});
  Matrix v = a.value().unaryExpr([](double x) {
    return x >= 0.0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x));
  });
  Tensor out = Tensor::make(std::move(v), rec);
  check_finite(out.value(), "sigmoid");
  if (rec) {
    Tape::active().record([a, out]() mutable {
      if (!out.has_grad() || !a.requires_grad()) return;
      const Matrix s = out.value();
      a.accumulate_grad(out.grad().cwiseProduct(
          s.cwiseProduct(Matrix::Ones(s.rows(), s.cols()) - s)));
    });
  }
  return out;
}

Tensor softplus(const Tensor& a) {
  const bool rec = should_record({&a});
  Matrix v = a.value().unaryExpr([](double x) {
    return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
  });
  Tensor out = Tensor::make(std::move(v), rec);
  check_finite(out.value(), "softplus");
  if (rec) {
    Tape::active().record([a, out]() mutable {
      if (!out.has_grad() || !a.requires_grad()) return;
      const Matrix s = a.value().unaryExpr([](double x) {
        return x >= 0.0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x));
      });
      a.accumulate_grad(out.grad().cwiseProduct(s));
    });
  }
  return out;
}

Tensor spmm(const SparseMatrix& sparse, const Tensor& dense, bool transpose_sparse) {
  const Eigen::Index inner = transpose_sparse ? sparse.rows() : sparse.cols();
  if (inner != dense.rows()) {
    throw std::invalid_argument(fmt::format(
        "spmm: sparse {}{}x{} incompatible with dense {}x{}", transpose_sparse ? "^T " : "",
        sparse.rows(), sparse.cols(), dense.rows(), dense.cols()));
  }
  const bool rec = should_record({&dense});
  Matrix v = transpose_sparse ? Matrix(sparse.transpose() * dense.value())
                              : Matrix(sparse * dense.value());
  Tensor out = Tensor::make(std::move(v), rec);
  check_finite(out.value(), "spmm");
  if (rec) {
    // Copy the sparse structure so the closure owns it.
    SparseMatrix s = sparse;
    Tensor d = dense;
    Tape::active().record([s, d, out, transpose_sparse]() mutable {
      if (!out.has_grad() || !d.requires_grad()) return;
      const Matrix g = transpose_sparse ? Matrix(s * out.grad())
                                        : Matrix(s.transpose() * out.grad());
      d.accumulate_grad(g);
    });
  }
  return out;
}

Tensor cosine_sim(const Tensor& a, const Tensor& b) {
  if (a.rows() * a.cols() != b.rows() * b.cols()) {
    throw std::invalid_argument(fmt::format(
        "cosine_sim: element counts differ ({}x{} vs {}x{})", a.rows(), a.cols(), b.rows(),
        b.cols()));
  }
  const Matrix av = flatten_value(a.value());
  const Matrix bv = flatten_value(b.value());
  const double na = av.norm();
  const double nb = bv.norm();
  if (na == 0.0 || nb == 0.0) {
    throw std::runtime_error("cosine_sim: zero-norm input");
  }
  const double sim = av.row(0).dot(bv.row(0)) / (na * nb);
  const bool rec = should_record({&a, &b});
  Tensor out = Tensor::make(Matrix::Constant(1, 1, sim), rec);
  check_finite(out.value(), "cosine_sim");
  if (rec) {
    Tape::active().record([a, b, out, av, bv, na, nb, sim]() mutable {
      if (!out.has_grad()) return;
      const double g = out.grad()(0, 0);
      if (a.requires_grad()) {
        const Matrix da = g * (bv / (na * nb) - sim * av / (na * na));
        a.accumulate_grad(unflatten_like(da, a.rows(), a.cols()));
      }
      if (b.requires_grad()) {
        const Matrix db = g * (av / (na * nb) - sim * bv / (nb * nb));
        b.accumulate_grad(unflatten_like(db, b.rows(), b.cols()));
      }
    });
  }
  return out;
}

Tensor logsumexp(const std::vector<Tensor>& scalars) {
  if (scalars.empty()) throw std::invalid_argument("logsumexp: empty input");
  double peak = -std::numeric_limits<double>::infinity();
  for (const Tensor& t : scalars) peak = std::max(peak, t.scalar());
  double sum = 0.0;
  for (const Tensor& t : scalars) sum += std::exp(t.scalar() - peak);
  const double lse = peak + std::log(sum);

  bool rec = false;
  if (Tape::active().recording_enabled()) {
    for (const Tensor& t : scalars) rec = rec || t.requires_grad();
  }
  Tensor out = Tensor::make(Matrix::Constant(1, 1, lse), rec);
  check_finite(out.value(), "logsumexp");
  if (rec) {
    std::vector<Tensor> inputs = scalars;
    Tape::active().record([inputs, out, lse]() mutable {
      if (!out.has_grad()) return;
      const double g = out.grad()(0, 0);
      for (Tensor& t : inputs) {
        if (!t.requires_grad()) continue;
        t.accumulate_grad(Matrix::Constant(1, 1, g * std::exp(t.scalar() - lse)));
      }
    });
  }
  return out;
}

}  // namespace kgcl::autodiff
