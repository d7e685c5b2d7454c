// SPDX-License-Identifier: Apache-2.0
#include "kgcl/encoder.hpp"

#include <cmath>
#include <stdexcept>

namespace kgcl {

namespace {

using autodiff::Tensor;

Matrix glorot(int rows, int cols, Rng& rng) {
  const double a = std::sqrt(6.0 / (rows + cols));
  Matrix m(rows, cols);
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) m(r, c) = rng.uniform(-a, a);
  }
  return m;
}

/// Reciprocal combined degree (head + tail incidences) per node, with
/// isolated nodes mapped to 1 so the scaling is always defined.
Vector inverse_degree(const Incidence& inc) {
  Vector deg = Vector::Zero(inc.head.rows());
  for (int k = 0; k < inc.head.outerSize(); ++k) {
    for (SparseMatrix::InnerIterator it(inc.head, k); it; ++it) deg(it.row()) += 1.0;
    for (SparseMatrix::InnerIterator it(inc.tail, k); it; ++it) deg(it.row()) += 1.0;
  }
  return deg.unaryExpr([](double d) { return d > 0.0 ? 1.0 / d : 1.0; });
}

}  // namespace

std::vector<Tensor> EncoderParams::parameters() const {
  std::vector<Tensor> out{node_proj, edge_proj};
  for (const Layer& l : layers) {
    out.push_back(l.weight);
    out.push_back(l.bias);
  }
  out.push_back(head_weight);
  out.push_back(head_bias);
  return out;
}

void EncoderParams::zero_grads() {
  for (Tensor t : parameters()) t.zero_grad();
}

EncoderParams init_params(const EncoderDims& dims, std::uint64_t seed) {
  if (dims.embed_dim < 1 || dims.iterations < 1) {
    throw std::invalid_argument("init_params: embed_dim and iterations must be positive");
  }
  Rng rng(seed);
  EncoderParams p;
  p.node_proj = Tensor::parameter(glorot(dims.label_width, dims.embed_dim, rng));
  p.edge_proj = Tensor::parameter(glorot(dims.num_relations, dims.embed_dim, rng));
  p.layers.resize(static_cast<std::size_t>(dims.iterations));
  for (auto& layer : p.layers) {
    layer.weight = Tensor::parameter(glorot(dims.embed_dim, dims.embed_dim, rng));
    layer.bias = Tensor::parameter(Matrix::Zero(1, dims.embed_dim));
  }
  p.head_weight = Tensor::parameter(glorot(2 * dims.embed_dim, 1, rng));
  p.head_bias = Tensor::parameter(Matrix::Zero(1, 1));
  return p;
}

GraphRepresentation encode(const Subgraph& sg, const EncoderParams& params,
                           const EncodeOptions& opts) {
  using namespace autodiff;
  if (sg.num_edges() == 0) {
    throw std::invalid_argument("encode: empty subgraph (callers must filter)");
  }
  const Incidence inc = build_incidence(sg);
  const Tensor labels = Tensor::constant(label_nodes(sg));
  const Tensor onehot = Tensor::constant(inc.edge_onehot);

  Tensor nodes = matmul(labels, params.node_proj);
  const Tensor nodes0 = nodes;
  Tensor edges = matmul(onehot, params.edge_proj);

  SparseMatrix head_scaled, tail_scaled;
  if (opts.mean_aggregation) {
    const Vector inv = inverse_degree(inc);
    head_scaled = inv.asDiagonal() * inc.head;
    tail_scaled = inv.asDiagonal() * inc.tail;
  }

  for (const EncoderParams::Layer& layer : params.layers) {
    // Edges absorb their endpoint nodes, then nodes aggregate incident edges.
    edges = add(edges, add(spmm(inc.head, nodes, true), spmm(inc.tail, nodes, true)));
    const SparseMatrix& ah = opts.mean_aggregation ? head_scaled : inc.head;
    const SparseMatrix& at = opts.mean_aggregation ? tail_scaled : inc.tail;
    const Tensor gathered = add(add(spmm(ah, edges), spmm(at, edges)), nodes);
    nodes = relu(add_row_bias(matmul(gathered, layer.weight), layer.bias));
  }

  const Tensor final_nodes = add(nodes0, nodes);
  GraphRepresentation rep;
  rep.rep = concat_rows(row(final_nodes, sg.head_local), row(final_nodes, sg.tail_local));
  return rep;
}

autodiff::Tensor score(const GraphRepresentation& rep, const EncoderParams& params) {
  using namespace autodiff;
  return add(matmul(flatten_rows(rep.rep), params.head_weight), params.head_bias);
}

}  // namespace kgcl
