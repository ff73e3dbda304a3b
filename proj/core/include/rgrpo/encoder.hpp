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

#ifndef RGRPO_ENCODER_HPP_
#define RGRPO_ENCODER_HPP_

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "rgrpo/tensor.hpp"

namespace rgrpo {

// Shared dual encoder: token embedding -> mean pool -> linear projection ->
// L2 normalization. Queries and items go through the same parameters.
// The backward pass is hand-derived; every loss in this project reduces to
// a gradient w.r.t. the output embeddings and flows through here.

struct EncoderConfig {
  int vocab_size{0};  // filled from the corpus when 0
  int token_dim{64};
  int output_dim{32};
  std::vector<int> mrl_dims{8, 16, 32};
  std::vector<double> mrl_weights{1.0, 1.0, 1.0};
  double init_range{0.05};

  void validate() const;
};

struct EncoderParams {
  Tensor2 token_embed;  // vocab x token_dim
  Tensor2 proj;         // token_dim x output_dim

  int vocab_size() const { return token_embed.rows; }
  int token_dim() const { return token_embed.cols; }
  int output_dim() const { return proj.cols; }
};

EncoderParams init_encoder(const EncoderConfig& config, std::uint64_t seed);

// Forward caches: pooled token means and the pre-normalization projection.
struct EncodeBatch {
  std::vector<std::vector<int>> rows;
  Tensor2 pooled;      // n x token_dim
  Tensor2 projected;   // n x output_dim, before normalization
  Tensor2 embeddings;  // n x output_dim, unit rows
};

EncodeBatch encode(const EncoderParams& params,
                   std::span<const std::vector<int>> token_rows);

struct EncoderGrads {
  Tensor2 d_token_embed;
  Tensor2 d_proj;

  explicit EncoderGrads(const EncoderParams& p)
      : d_token_embed(p.token_embed.rows, p.token_embed.cols),
        d_proj(p.proj.rows, p.proj.cols) {}
  void add(const EncoderGrads& other);
  void scale(double s);
};

// First `dim` coordinates of each embedding, re-normalized to unit length.
// Normalizing a prefix of the normalized embedding equals normalizing the
// same prefix of the raw projection, so MRL heads share one cache.
Tensor2 mrl_slice(const EncodeBatch& batch, int dim);

// Chain rule from a normalized `dim`-prefix back to batch.projected.
// d_slice is n x dim; accumulates into d_projected (n x output_dim).
void prefix_grad_to_projected(const EncodeBatch& batch, int dim,
                              const Tensor2& d_slice, Tensor2& d_projected);

// Backprop from d(projected) through projection, mean pool and embedding
// scatter-add. Accumulates into grads.
void encode_backward_projected(const EncodeBatch& batch,
                               const Tensor2& d_projected,
                               const EncoderParams& params,
                               EncoderGrads& grads);

// Backprop from d(embeddings), i.e. the full-dimension normalized output.
EncoderGrads encode_backward(const EncodeBatch& batch,
                             const Tensor2& d_embeddings,
                             const EncoderParams& params);

// Checkpoint format: magic, version, dims, little-endian float64 payload,
// FNV-1a checksum. Round-trips are bit-exact; the GRPO reference model is
// a frozen checkpoint, so exactness matters.
void save_checkpoint(const EncoderParams& params,
                     const std::filesystem::path& path);
EncoderParams load_checkpoint(const std::filesystem::path& path);
std::uint64_t checkpoint_hash(const EncoderParams& params);

}  // namespace rgrpo

#endif  // RGRPO_ENCODER_HPP_
