// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "kgcl/cluster.hpp"
#include "kgcl/training.hpp"

namespace kgcl {

using NamedMatrix = std::pair<std::string, Matrix>;

/// On-disk model state: a custom little-endian binary with named sections.
/// load(save(x)) is bit-exact; a version mismatch refuses to load.
struct Checkpoint {
  std::string config_text;
  std::uint64_t master_seed = 0;
  std::vector<std::string> relation_names;
  Matrix semantic_rows;        // n_r x glove_dim
  std::vector<int> coverage;   // per relation
  Matrix reduced;              // n_r x d_r
  int n_c = 0;
  std::vector<int> assignment;
  Matrix centroids;
  double objective = 0.0;
  std::vector<std::vector<NamedMatrix>> encoders;

  ClusterModel cluster_model() const;
};

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::filesystem::path& path);

std::vector<NamedMatrix> encoder_to_named(const EncoderParams& params);
EncoderParams encoder_from_named(const std::vector<NamedMatrix>& named);

/// Assembles a checkpoint from live state (encoder tensors are copied).
Checkpoint make_checkpoint(const std::string& config_text, std::uint64_t master_seed,
                           const std::vector<std::string>& relation_names,
                           const Matrix& reduced, const ModelState& model);

/// Rebuilds trainable state (fresh Adam moments) from a checkpoint.
ModelState restore_model(const Checkpoint& ckpt);

}  // namespace kgcl
