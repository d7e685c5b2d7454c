// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>

namespace kgcl {

/// Knobs for the bundled synthetic dataset: a family/affiliation world
/// whose relations form two semantic groups (kin vs. organizational),
/// with a synonym pair (uncle_of / aunt_of), long-tail relations
/// (cousin_of, mentor_of) and disjoint-entity train/test graphs sharing
/// the relation set.
struct SynthConfig {
  std::uint64_t seed = 42;
  int train_districts = 6;
  int test_districts = 6;
  int families_per_district = 5;
  int glove_dim = 300;
};

/// Writes <out>/train/{train,valid,test}.txt, <out>/test/{...}.txt,
/// <out>/vectors.txt and <out>/run.cfg. Byte-identical for a fixed seed.
void generate_synth_dataset(const std::filesystem::path& out_dir, const SynthConfig& cfg);

}  // namespace kgcl
