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

#include "rgrpo/index.hpp"

#include <algorithm>
#include <numeric>
#include <string>
#include <unordered_set>

#include "rgrpo/errors.hpp"
#include "rgrpo/rng.hpp"

namespace rgrpo {

namespace {

constexpr std::size_t kEncodeChunk = 1024;

// Select the k best (score desc, id asc) among the given candidate
// positions.
TopKResult select_k(const IndexSnapshot& snapshot,
                    const std::vector<double>& scores,
                    std::vector<int>& positions, int k) {
  auto better = [&](int a, int b) {
    const double sa = scores[static_cast<std::size_t>(a)];
    const double sb = scores[static_cast<std::size_t>(b)];
    if (sa != sb) return sa > sb;
    return snapshot.item_ids[static_cast<std::size_t>(a)] <
           snapshot.item_ids[static_cast<std::size_t>(b)];
  };
  std::partial_sort(positions.begin(),
                    positions.begin() + static_cast<std::ptrdiff_t>(k),
                    positions.end(), better);
  TopKResult out;
  out.item_ids.reserve(static_cast<std::size_t>(k));
  out.scores.reserve(static_cast<std::size_t>(k));
  for (int i = 0; i < k; ++i) {
    const int pos = positions[static_cast<std::size_t>(i)];
    out.item_ids.push_back(snapshot.item_ids[static_cast<std::size_t>(pos)]);
    out.scores.push_back(scores[static_cast<std::size_t>(pos)]);
  }
  return out;
}

}  // namespace

IndexSnapshot build_snapshot(const EncoderParams& params,
                             std::span<const Item> items,
                             std::int64_t built_at_step) {
  if (items.empty()) throw DomainError("build_snapshot: empty item list");
  IndexSnapshot snapshot;
  snapshot.built_at_step = built_at_step;
  snapshot.embeddings = Tensor2(static_cast<int>(items.size()),
                                params.output_dim());
  snapshot.item_ids.reserve(items.size());
  for (const auto& item : items) snapshot.item_ids.push_back(item.id);

  std::vector<std::vector<int>> rows;
  rows.reserve(kEncodeChunk);
  std::size_t base = 0;
  while (base < items.size()) {
    const std::size_t chunk = std::min(kEncodeChunk, items.size() - base);
    rows.clear();
    for (std::size_t i = 0; i < chunk; ++i) {
      rows.push_back(items[base + i].tokens);
    }
    const EncodeBatch batch = encode(params, rows);
    for (std::size_t i = 0; i < chunk; ++i) {
      auto dst = snapshot.embeddings.row(static_cast<int>(base + i));
      const auto src = batch.embeddings.row(static_cast<int>(i));
      std::copy(src.begin(), src.end(), dst.begin());
    }
    base += chunk;
  }
  return snapshot;
}

TopKResult topk(const IndexSnapshot& snapshot,
                std::span<const double> query_embedding, int k) {
  const int n = snapshot.embeddings.rows;
  if (k < 1 || k > n) {
    throw DomainError("topk: k=" + std::to_string(k) + " with n=" +
                      std::to_string(n));
  }
  std::vector<double> scores(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    scores[static_cast<std::size_t>(i)] =
        dot(snapshot.embeddings.row(i), query_embedding);
  }
  std::vector<int> positions(static_cast<std::size_t>(n));
  std::iota(positions.begin(), positions.end(), 0);
  return select_k(snapshot, scores, positions, k);
}

TopKResult gathered_topk(const IndexSnapshot& snapshot,
                         std::span<const double> query_embedding,
                         int batch_size, int k, std::uint64_t seed) {
  const int n = snapshot.embeddings.rows;
  if (k < 1 || k > batch_size || batch_size > n) {
    throw DomainError("gathered_topk: need 1 <= k <= batch_size <= n, got k=" +
                      std::to_string(k) + " batch=" +
                      std::to_string(batch_size) + " n=" + std::to_string(n));
  }
  Rng rng(seed);
  std::vector<int> positions = rng.sample_without_replacement(n, batch_size);
  std::vector<double> scores(static_cast<std::size_t>(n), 0.0);
  for (int pos : positions) {
    scores[static_cast<std::size_t>(pos)] =
        dot(snapshot.embeddings.row(pos), query_embedding);
  }
  return select_k(snapshot, scores, positions, k);
}

TopKResult lexical_topk(const Query& query, std::span<const Item> items,
                        int k) {
  const int n = static_cast<int>(items.size());
  if (k < 1 || k > n) {
    throw DomainError("lexical_topk: k=" + std::to_string(k) + " with n=" +
                      std::to_string(n));
  }
  const std::unordered_set<int> qset(query.tokens.begin(), query.tokens.end());
  std::vector<std::pair<int, int>> overlap_id;  // (-overlap, id)
  overlap_id.reserve(items.size());
  for (const auto& item : items) {
    std::unordered_set<int> seen;
    int overlap = 0;
    for (int t : item.tokens) {
      if (qset.count(t) && seen.insert(t).second) ++overlap;
    }
    overlap_id.emplace_back(-overlap, item.id);
  }
  std::partial_sort(overlap_id.begin(),
                    overlap_id.begin() + static_cast<std::ptrdiff_t>(k),
                    overlap_id.end());
  TopKResult out;
  for (int i = 0; i < k; ++i) {
    out.item_ids.push_back(overlap_id[static_cast<std::size_t>(i)].second);
    out.scores.push_back(
        static_cast<double>(-overlap_id[static_cast<std::size_t>(i)].first));
  }
  return out;
}

}  // namespace rgrpo
