// SPDX-License-Identifier: Apache-2.0
#include "kgcl/checkpoint.hpp"

#include <fmt/format.h>

#include <bit>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace kgcl {

namespace {

constexpr char kMagic[8] = {'K', 'G', 'C', 'L', 'C', 'K', 'P', 'T'};
constexpr std::uint32_t kVersion = 1;

void put_u32(std::ostream& out, std::uint32_t v) {
  char b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xff);
  out.write(b, 4);
}

void put_u64(std::ostream& out, std::uint64_t v) {
  char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xff);
  out.write(b, 8);
}

void put_f64(std::ostream& out, double v) { put_u64(out, std::bit_cast<std::uint64_t>(v)); }

void put_string(std::ostream& out, const std::string& s) {
  put_u32(out, static_cast<std::uint32_t>(s.size()));
  out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

void put_matrix(std::ostream& out, const Matrix& m) {
  put_u32(out, static_cast<std::uint32_t>(m.rows()));
  put_u32(out, static_cast<std::uint32_t>(m.cols()));
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) put_f64(out, m(r, c));
  }
}

std::uint32_t get_u32(std::istream& in) {
  unsigned char b[4];
  in.read(reinterpret_cast<char*>(b), 4);
  if (!in) throw std::runtime_error("checkpoint: truncated file");
  std::uint32_t v = 0;
  for (int i = 3; i >= 0; --i) v = (v << 8) | b[i];
  return v;
}

std::uint64_t get_u64(std::istream& in) {
  unsigned char b[8];
  in.read(reinterpret_cast<char*>(b), 8);
  if (!in) throw std::runtime_error("checkpoint: truncated file");
  std::uint64_t v = 0;
  for (int i = 7; i >= 0; --i) v = (v << 8) | b[i];
  return v;
}

double get_f64(std::istream& in) { return std::bit_cast<double>(get_u64(in)); }

std::string get_string(std::istream& in) {
  const std::uint32_t len = get_u32(in);
  std::string s(len, '\0');
  in.read(s.data(), len);
  if (!in) throw std::runtime_error("checkpoint: truncated string");
  return s;
}

Matrix get_matrix(std::istream& in) {
  const std::uint32_t rows = get_u32(in);
  const std::uint32_t cols = get_u32(in);
  Matrix m(rows, cols);
  for (std::uint32_t r = 0; r < rows; ++r) {
    for (std::uint32_t c = 0; c < cols; ++c) m(r, c) = get_f64(in);
  }
  return m;
}

}  // namespace

ClusterModel Checkpoint::cluster_model() const {
  ClusterModel cm;
  cm.n_c = n_c;
  cm.assignment = assignment;
  cm.centroids = centroids;
  cm.semantic_ref = semantic_rows;
  cm.semantic_coverage = coverage;
  cm.objective = objective;
  cm.objective_trace = {objective};
  return cm;
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error(fmt::format("cannot write checkpoint '{}'", path.string()));
  out.write(kMagic, sizeof(kMagic));
  put_u32(out, kVersion);
  put_string(out, ckpt.config_text);
  put_u64(out, ckpt.master_seed);
  put_u32(out, static_cast<std::uint32_t>(ckpt.relation_names.size()));
  for (const std::string& name : ckpt.relation_names) put_string(out, name);
  put_matrix(out, ckpt.semantic_rows);
  put_u32(out, static_cast<std::uint32_t>(ckpt.coverage.size()));
  for (int c : ckpt.coverage) put_u32(out, static_cast<std::uint32_t>(c));
  put_matrix(out, ckpt.reduced);
  put_u32(out, static_cast<std::uint32_t>(ckpt.n_c));
  put_u32(out, static_cast<std::uint32_t>(ckpt.assignment.size()));
  for (int a : ckpt.assignment) put_u32(out, static_cast<std::uint32_t>(a));
  put_matrix(out, ckpt.centroids);
  put_f64(out, ckpt.objective);
  put_u32(out, static_cast<std::uint32_t>(ckpt.encoders.size()));
  for (const auto& encoder : ckpt.encoders) {
    put_u32(out, static_cast<std::uint32_t>(encoder.size()));
    for (const auto& [name, m] : encoder) {
      put_string(out, name);
      put_matrix(out, m);
    }
  }
  if (!out) throw std::runtime_error(fmt::format("error writing checkpoint '{}'", path.string()));
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error(fmt::format("cannot open checkpoint '{}'", path.string()));
  char magic[8];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
    throw std::runtime_error(fmt::format("'{}' is not a checkpoint file", path.string()));
  }
  const std::uint32_t version = get_u32(in);
  if (version != kVersion) {
    throw std::runtime_error(fmt::format(
        "checkpoint '{}' has format version {}, expected {}", path.string(), version, kVersion));
  }
  Checkpoint ckpt;
  ckpt.config_text = get_string(in);
  ckpt.master_seed = get_u64(in);
  const std::uint32_t n_rel = get_u32(in);
  ckpt.relation_names.reserve(n_rel);
  for (std::uint32_t i = 0; i < n_rel; ++i) ckpt.relation_names.push_back(get_string(in));
  ckpt.semantic_rows = get_matrix(in);
  const std::uint32_t n_cov = get_u32(in);
  ckpt.coverage.reserve(n_cov);
  for (std::uint32_t i = 0; i < n_cov; ++i) ckpt.coverage.push_back(static_cast<int>(get_u32(in)));
  ckpt.reduced = get_matrix(in);
  ckpt.n_c = static_cast<int>(get_u32(in));
  const std::uint32_t n_assign = get_u32(in);
  ckpt.assignment.reserve(n_assign);
  for (std::uint32_t i = 0; i < n_assign; ++i) {
    ckpt.assignment.push_back(static_cast<int>(get_u32(in)));
  }
  ckpt.centroids = get_matrix(in);
  ckpt.objective = get_f64(in);
  const std::uint32_t n_enc = get_u32(in);
  ckpt.encoders.resize(n_enc);
  for (std::uint32_t e = 0; e < n_enc; ++e) {
    const std::uint32_t n_params = get_u32(in);
    for (std::uint32_t p = 0; p < n_params; ++p) {
      std::string name = get_string(in);
      Matrix m = get_matrix(in);
      ckpt.encoders[e].emplace_back(std::move(name), std::move(m));
    }
  }
  return ckpt;
}

std::vector<NamedMatrix> encoder_to_named(const EncoderParams& params) {
  std::vector<NamedMatrix> named;
  named.emplace_back("w_n", params.node_proj.value());
  named.emplace_back("w_e", params.edge_proj.value());
  for (std::size_t k = 0; k < params.layers.size(); ++k) {
    named.emplace_back(fmt::format("w_{}", k), params.layers[k].weight.value());
    named.emplace_back(fmt::format("b_{}", k), params.layers[k].bias.value());
  }
  named.emplace_back("head_w", params.head_weight.value());
  named.emplace_back("head_b", params.head_bias.value());
  return named;
}

EncoderParams encoder_from_named(const std::vector<NamedMatrix>& named) {
  using autodiff::Tensor;
  EncoderParams p;
  if (named.size() < 4 || (named.size() - 4) % 2 != 0) {
    throw std::runtime_error("checkpoint: malformed encoder parameter list");
  }
  auto expect = [&named](std::size_t i, const std::string& name) -> const Matrix& {
    if (named[i].first != name) {
      throw std::runtime_error(fmt::format(
          "checkpoint: expected parameter '{}', found '{}'", name, named[i].first));
    }
    return named[i].second;
  };
  p.node_proj = Tensor::parameter(expect(0, "w_n"));
  p.edge_proj = Tensor::parameter(expect(1, "w_e"));
  const std::size_t layers = (named.size() - 4) / 2;
  for (std::size_t k = 0; k < layers; ++k) {
    EncoderParams::Layer layer;
    layer.weight = Tensor::parameter(expect(2 + 2 * k, fmt::format("w_{}", k)));
    layer.bias = Tensor::parameter(expect(3 + 2 * k, fmt::format("b_{}", k)));
    p.layers.push_back(std::move(layer));
  }
  p.head_weight = Tensor::parameter(expect(named.size() - 2, "head_w"));
  p.head_bias = Tensor::parameter(expect(named.size() - 1, "head_b"));
  return p;
}

Checkpoint make_checkpoint(const std::string& config_text, std::uint64_t master_seed,
                           const std::vector<std::string>& relation_names,
                           const Matrix& reduced, const ModelState& model) {
  Checkpoint ckpt;
  ckpt.config_text = config_text;
  ckpt.master_seed = master_seed;
  ckpt.relation_names = relation_names;
  ckpt.semantic_rows = model.clusters.semantic_ref;
  ckpt.coverage = model.clusters.semantic_coverage;
  ckpt.reduced = reduced;
  ckpt.n_c = model.clusters.n_c;
  ckpt.assignment = model.clusters.assignment;
  ckpt.centroids = model.clusters.centroids;
  ckpt.objective = model.clusters.objective;
  for (const EncoderParams& enc : model.encoders) {
    ckpt.encoders.push_back(encoder_to_named(enc));
  }
  return ckpt;
}

ModelState restore_model(const Checkpoint& ckpt) {
  ModelState model;
  model.clusters = ckpt.cluster_model();
  for (const auto& named : ckpt.encoders) {
    model.encoders.push_back(encoder_from_named(named));
    AdamState st;
    for (autodiff::Tensor t : model.encoders.back().parameters()) {
      st.m.push_back(Matrix::Zero(t.rows(), t.cols()));
      st.v.push_back(Matrix::Zero(t.rows(), t.cols()));
    }
    model.optimizer.push_back(std::move(st));
  }
  return model;
}

}  // namespace kgcl
