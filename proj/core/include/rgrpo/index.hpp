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

#ifndef RGRPO_INDEX_HPP_
#define RGRPO_INDEX_HPP_

#include <cstdint>
#include <span>
#include <vector>

#include "rgrpo/corpus.hpp"
#include "rgrpo/encoder.hpp"
#include "rgrpo/tensor.hpp"

namespace rgrpo {

// Immutable embedding snapshot of the item pool under one set of encoder
// parameters. Retrieval is exact brute-force cosine top-k; at this pool
// size an index structure would only add an approximation confound.

struct IndexSnapshot {
  std::vector<int> item_ids;
  Tensor2 embeddings;  // n x d, unit rows
  std::int64_t built_at_step{0};
};

IndexSnapshot build_snapshot(const EncoderParams& params,
                             std::span<const Item> items,
                             std::int64_t built_at_step = 0);

struct TopKResult {
  std::vector<int> item_ids;
  std::vector<double> scores;  // non-increasing
};

// Exact k-argmax of dot products; ties broken by ascending item id.
TopKResult topk(const IndexSnapshot& snapshot,
                std::span<const double> query_embedding, int k);

// Seeded sample of batch_size items without replacement, then exact top-k
// within the sample. batch_size == n degenerates to global topk.
TopKResult gathered_topk(const IndexSnapshot& snapshot,
                         std::span<const double> query_embedding,
                         int batch_size, int k, std::uint64_t seed);

// Inverted-index stand-in: rank by raw query-item token overlap count,
// ties by ascending item id.
TopKResult lexical_topk(const Query& query, std::span<const Item> items,
                        int k);

}  // namespace rgrpo

#endif  // RGRPO_INDEX_HPP_
