// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <vector>

#include "kgcl/autodiff.hpp"
#include "kgcl/subgraph.hpp"

namespace kgcl {

struct EncoderDims {
  int label_width = 0;   // 2(m+2)
  int num_relations = 0;
  int embed_dim = 32;    // d
  int iterations = 3;    // K message-passing rounds

  static EncoderDims for_graph(int hops, int num_relations, int embed_dim, int iterations) {
    return EncoderDims{2 * (hops + 2), num_relations, embed_dim, iterations};
  }
};

/// One parameter set per relation cluster: node/edge input projections,
/// per-iteration layer weights, and the scalar scoring head.
struct EncoderParams {
  struct Layer {
    autodiff::Tensor weight;  // d x d
    autodiff::Tensor bias;    // 1 x d
  };

  autodiff::Tensor node_proj;   // label_width x d
  autodiff::Tensor edge_proj;   // n_r x d
  std::vector<Layer> layers;    // K entries
  autodiff::Tensor head_weight;  // 2d x 1
  autodiff::Tensor head_bias;    // 1 x 1

  std::vector<autodiff::Tensor> parameters() const;
  void zero_grads();
};

/// Glorot-uniform weights, zero biases, deterministic per seed.
EncoderParams init_params(const EncoderDims& dims, std::uint64_t seed);

struct GraphRepresentation {
  autodiff::Tensor rep;  // 2 x d: target head row, target tail row
};

struct EncodeOptions {
  bool mean_aggregation = false;  // divide aggregated messages by degree
};

/// Message passing over the subgraph: project node labels and edge
/// one-hots to d dimensions, run K edge/node update rounds, add the
/// initial node embedding back, and stack the target head/tail rows.
GraphRepresentation encode(const Subgraph& sg, const EncoderParams& params,
                           const EncodeOptions& opts = {});

/// score = flatten(rep) . head_weight + head_bias
autodiff::Tensor score(const GraphRepresentation& rep, const EncoderParams& params);

}  // namespace kgcl
