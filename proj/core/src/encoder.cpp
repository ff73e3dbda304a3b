// Copyright 2026 The rgrpo Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "rgrpo/encoder.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <string>

#include "rgrpo/errors.hpp"
#include "rgrpo/rng.hpp"

namespace rgrpo {

namespace {
constexpr double kNormEps = 1e-12;
constexpr char kMagic[4] = {'R', 'G', 'E', 'C'};
constexpr std::uint32_t kVersion = 1;
}  // namespace

void EncoderConfig::validate() const {
  if (token_dim <= 0 || output_dim <= 0) {
    throw ConfigError("encoder: dimensions must be positive");
  }
  if (mrl_dims.empty() || mrl_dims.size() != mrl_weights.size()) {
    throw ConfigError("encoder: mrl_dims and mrl_weights must align");
  }
  int prev = 0;
  for (std::size_t i = 0; i < mrl_dims.size(); ++i) {
    if (mrl_dims[i] <= prev) {
      throw ConfigError("encoder: mrl_dims must be strictly ascending");
    }
    if (mrl_dims[i] > output_dim) {
      throw ConfigError("encoder: mrl dim exceeds output_dim");
    }
    if (mrl_weights[i] <= 0.0) {
      throw ConfigError("encoder: mrl weights must be positive");
    }
    prev = mrl_dims[i];
  }
  if (init_range <= 0.0) throw ConfigError("encoder: init_range <= 0");
}

EncoderParams init_encoder(const EncoderConfig& config, std::uint64_t seed) {
  config.validate();
  if (config.vocab_size <= 0) {
    throw ConfigError("encoder: vocab_size must be set before init");
  }
  EncoderParams p;
  p.token_embed = Tensor2(config.vocab_size, config.token_dim);
  p.proj = Tensor2(config.token_dim, config.output_dim);
  Rng rng(hash_combine(seed, 0xE0C0DE));
  for (double& v : p.token_embed.data) {
    v = (2.0 * rng.next_double() - 1.0) * config.init_range;
  }
  const double proj_scale = 1.0 / std::sqrt(config.token_dim);
  for (double& v : p.proj.data) {
    v = (2.0 * rng.next_double() - 1.0) * proj_scale;
  }
  return p;
}

EncodeBatch encode(const EncoderParams& params,
                   std::span<const std::vector<int>> token_rows) {
  const int n = static_cast<int>(token_rows.size());
  EncodeBatch batch;
  batch.rows.assign(token_rows.begin(), token_rows.end());
  batch.pooled = Tensor2(n, params.token_dim());
  for (int i = 0; i < n; ++i) {
    const auto& row = token_rows[static_cast<std::size_t>(i)];
    if (row.empty()) {
      throw EncodeError("encode: empty token row at index " +
                        std::to_string(i));
    }
    auto out = batch.pooled.row(i);
    for (int t : row) {
      if (t < 0 || t >= params.vocab_size()) {
        throw EncodeError("encode: token id " + std::to_string(t) +
                          " outside vocab of " +
                          std::to_string(params.vocab_size()));
      }
      axpy(1.0, params.token_embed.row(t), out);
    }
    const double inv = 1.0 / static_cast<double>(row.size());
    for (double& v : out) v *= inv;
  }
  batch.projected = matmul(batch.pooled, params.proj);
  batch.embeddings = l2_normalize_rows(batch.projected, kNormEps);
  return batch;
}

void EncoderGrads::add(const EncoderGrads& other) {
  for (std::size_t i = 0; i < d_token_embed.data.size(); ++i) {
    d_token_embed.data[i] += other.d_token_embed.data[i];
  }
  for (std::size_t i = 0; i < d_proj.data.size(); ++i) {
    d_proj.data[i] += other.d_proj.data[i];
  }
}

void EncoderGrads::scale(double s) {
  for (double& v : d_token_embed.data) v *= s;
  for (double& v : d_proj.data) v *= s;
}

Tensor2 mrl_slice(const EncodeBatch& batch, int dim) {
  if (dim < 1 || dim > batch.projected.cols) {
    throw DomainError("mrl_slice: dim " + std::to_string(dim) +
                      " outside [1, " + std::to_string(batch.projected.cols) +
                      "]");
  }
  Tensor2 out(batch.projected.rows, dim);
  for (int i = 0; i < out.rows; ++i) {
    const auto src = batch.projected.row(i);
    auto dst = out.row(i);
    for (int j = 0; j < dim; ++j) dst[j] = src[j];
  }
  l2_normalize_rows_inplace(out, kNormEps);
  return out;
}

void prefix_grad_to_projected(const EncodeBatch& batch, int dim,
                              const Tensor2& d_slice, Tensor2& d_projected) {
  if (d_slice.rows != batch.projected.rows || d_slice.cols != dim ||
      !d_projected.same_shape(batch.projected)) {
    throw DimensionError("prefix_grad_to_projected: shape mismatch");
  }
  // Through u = p/||p||: du/dp = (I - u u^T)/||p||, applied on the prefix.
  for (int i = 0; i < d_slice.rows; ++i) {
    const auto z = batch.projected.row(i);
    double ss = 0.0;
    for (int j = 0; j < dim; ++j) ss += z[j] * z[j];
    const double norm = std::max(std::sqrt(ss), kNormEps);
    const auto g = d_slice.row(i);
    double gu = 0.0;
    for (int j = 0; j < dim; ++j) gu += g[j] * z[j] / norm;
    auto out = d_projected.row(i);
    for (int j = 0; j < dim; ++j) {
      out[j] += (g[j] - gu * z[j] / norm) / norm;
    }
  }
}

void encode_backward_projected(const EncodeBatch& batch,
                               const Tensor2& d_projected,
                               const EncoderParams& params,
                               EncoderGrads& grads) {
  if (!d_projected.same_shape(batch.projected)) {
    throw DimensionError("encode_backward_projected: shape mismatch");
  }
  // d_proj += pooled^T * d_projected; d_pooled = d_projected * proj^T.
  for (int i = 0; i < batch.pooled.rows; ++i) {
    const auto pooled = batch.pooled.row(i);
    const auto dz = d_projected.row(i);
    for (int a = 0; a < params.token_dim(); ++a) {
      if (pooled[a] == 0.0) continue;
      auto prow = grads.d_proj.row(a);
      axpy(pooled[a], dz, prow);
    }
    // d_pooled row, then scatter-add to the token embedding rows.
    std::vector<double> d_pooled(static_cast<std::size_t>(params.token_dim()));
    for (int a = 0; a < params.token_dim(); ++a) {
      d_pooled[static_cast<std::size_t>(a)] = dot(params.proj.row(a), dz);
    }
    const auto& row = batch.rows[static_cast<std::size_t>(i)];
    const double inv = 1.0 / static_cast<double>(row.size());
    for (int t : row) {
      auto erow = grads.d_token_embed.row(t);
      axpy(inv, d_pooled, erow);
    }
  }
}

EncoderGrads encode_backward(const EncodeBatch& batch,
                             const Tensor2& d_embeddings,
                             const EncoderParams& params) {
  if (!d_embeddings.same_shape(batch.embeddings)) {
    throw DimensionError("encode_backward: d_embeddings shape mismatch");
  }
  Tensor2 d_projected(batch.projected.rows, batch.projected.cols);
  prefix_grad_to_projected(batch, batch.projected.cols, d_embeddings,
                           d_projected);
  EncoderGrads grads(params);
  encode_backward_projected(batch, d_projected, params, grads);
  return grads;
}

namespace {

void put_u32(std::ofstream& out, std::uint32_t v) {
  unsigned char b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
  out.write(reinterpret_cast<const char*>(b), 4);
}

void put_u64(std::ofstream& out, std::uint64_t v) {
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
  out.write(reinterpret_cast<const char*>(b), 8);
}

std::uint32_t get_u32(std::ifstream& in) {
  unsigned char b[4];
  in.read(reinterpret_cast<char*>(b), 4);
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[i]) << (8 * i);
  return v;
}

std::uint64_t get_u64(std::ifstream& in) {
  unsigned char b[8];
  in.read(reinterpret_cast<char*>(b), 8);
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
  return v;
}

std::uint64_t payload_hash(const EncoderParams& p) {
  const std::uint64_t h = fnv1a64(
      p.token_embed.data.data(), p.token_embed.data.size() * sizeof(double));
  return fnv1a64(p.proj.data.data(), p.proj.data.size() * sizeof(double), h);
}

}  // namespace

void save_checkpoint(const EncoderParams& params,
                     const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw CheckpointError("cannot write checkpoint: " + path.string());
  out.write(kMagic, 4);
  put_u32(out, kVersion);
  put_u32(out, static_cast<std::uint32_t>(params.vocab_size()));
  put_u32(out, static_cast<std::uint32_t>(params.token_dim()));
  put_u32(out, static_cast<std::uint32_t>(params.output_dim()));
  put_u64(out, payload_hash(params));
  out.write(reinterpret_cast<const char*>(params.token_embed.data.data()),
            static_cast<std::streamsize>(params.token_embed.data.size() *
                                         sizeof(double)));
  out.write(reinterpret_cast<const char*>(params.proj.data.data()),
            static_cast<std::streamsize>(params.proj.data.size() *
                                         sizeof(double)));
  if (!out) throw CheckpointError("checkpoint write failed: " + path.string());
}

EncoderParams load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError("cannot open checkpoint: " + path.string());
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, kMagic, 4) != 0) {
    throw CheckpointError("bad checkpoint magic in " + path.string());
  }
  const std::uint32_t version = get_u32(in);
  if (version != kVersion) {
    throw CheckpointError("unsupported checkpoint version " +
                          std::to_string(version));
  }
  const auto vocab = static_cast<int>(get_u32(in));
  const auto token_dim = static_cast<int>(get_u32(in));
  const auto output_dim = static_cast<int>(get_u32(in));
  const std::uint64_t expected = get_u64(in);
  if (!in || vocab <= 0 || token_dim <= 0 || output_dim <= 0) {
    throw CheckpointError("corrupt checkpoint header in " + path.string());
  }
  EncoderParams p;
  p.token_embed = Tensor2(vocab, token_dim);
  p.proj = Tensor2(token_dim, output_dim);
  in.read(reinterpret_cast<char*>(p.token_embed.data.data()),
          static_cast<std::streamsize>(p.token_embed.data.size() *
                                       sizeof(double)));
  in.read(reinterpret_cast<char*>(p.proj.data.data()),
          static_cast<std::streamsize>(p.proj.data.size() * sizeof(double)));
  if (!in) throw CheckpointError("truncated checkpoint: " + path.string());
  if (payload_hash(p) != expected) {
    throw CheckpointError("checkpoint checksum mismatch: " + path.string());
  }
  return p;
}

std::uint64_t checkpoint_hash(const EncoderParams& params) {
  return payload_hash(params);
}

}  // namespace rgrpo
