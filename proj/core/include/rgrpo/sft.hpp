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

#ifndef RGRPO_SFT_HPP_
#define RGRPO_SFT_HPP_

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "rgrpo/corpus.hpp"
#include "rgrpo/encoder.hpp"
#include "rgrpo/jsonl.hpp"
#include "rgrpo/optim.hpp"
#include "rgrpo/rng.hpp"
#include "rgrpo/tensor.hpp"

namespace rgrpo {

// Stage 1: contrastive training with in-batch plus global negatives, and
// the two stage-2 baselines (pairwise ranking, DPO on mined hard
// negatives) used for comparison runs.

struct InfoNceResult {
  double loss{0.0};
  Tensor2 d_query;   // gradient w.r.t. query embeddings
  Tensor2 d_item;    // w.r.t. in-batch item embeddings
  Tensor2 d_global;  // w.r.t. global negative embeddings
};

// Softmax cross-entropy where row i of item_embs is the positive for query
// i and the denominator spans all in-batch items plus the global negatives.
// With empty globals this is plain in-batch InfoNCE. When item_ids is
// non-empty, an in-batch item with the same id as query i's positive is
// excluded from i's denominator (duplicate-positive collision).
InfoNceResult info_nce_loss(const Tensor2& query_embs, const Tensor2& item_embs,
                            const Tensor2& global_embs, double tau,
                            std::span<const int> item_ids = {});

// Uniform without replacement from [0, pool_size) excluding the given ids.
std::vector<int> sample_global_negatives(int pool_size,
                                         std::span<const int> excluded_ids,
                                         int count, Rng& rng);
std::vector<int> sample_global_negatives(int pool_size,
                                         std::span<const int> excluded_ids,
                                         int count, std::uint64_t seed);

struct SftConfig {
  int batch_size{64};
  double tau{0.05};
  int global_negatives{64};
  int epochs{1};
  double lr{1e-2};
  double warmup_ratio{0.05};
  double floor_lr{0.0};
  double weight_decay{0.0};
  double beta1{0.9};
  double beta2{0.95};

  void validate() const;
};

// Runs MRL-weighted InfoNCE over shuffled (query, excellent-item) pairs.
// Deterministic given (corpus, configs, seed).
EncoderParams train_sft(const Corpus& corpus, const EncoderConfig& enc_config,
                        const SftConfig& config, std::uint64_t seed,
                        JsonlWriter* metrics = nullptr);

// --- stage-2 baselines -----------------------------------------------------

struct PreferencePair {
  int query_index{0};  // index into corpus.queries
  int winner_id{0};
  int loser_id{0};
  // Reference scores frozen at mining time (used by DPO).
  double ref_winner_score{0.0};
  double ref_loser_score{0.0};
};

struct ScalarPairLoss {
  double loss{0.0};
  double d_winner{0.0};  // d loss / d winner score
  double d_loser{0.0};
};

// Hinge max(0, margin - s_w + s_l); zero gradient once satisfied.
ScalarPairLoss ranking_loss(double winner_score, double loser_score,
                            double margin);

// -log sigmoid(beta * [(s_w - s_l) - (ref_w - ref_l)]), similarity logits
// standing in for log-probabilities.
ScalarPairLoss dpo_loss(double winner_score, double loser_score,
                        double ref_winner_score, double ref_loser_score,
                        double beta);

struct MinedPairs {
  std::vector<PreferencePair> pairs;
  int skipped_queries{0};
};

// Static hard-negative mining: top-ranked grade<=1 items under a frozen
// snapshot become losers, the query's first excellent item the winner.
MinedPairs mine_hard_negatives(const EncoderParams& params,
                               const Corpus& corpus, const CorpusIndex& index,
                               int per_query, int scan_k);

struct BaselineConfig {
  std::string kind{"dpo"};  // "ranking" | "dpo"
  int per_query{3};
  int scan_k{16};
  double margin{0.1};
  double dpo_beta{0.1};
  double tau{0.05};  // score scale for the DPO log-prob surrogate
  int epochs{2};
  int batch_size{64};
  double lr{1e-3};
  double warmup_ratio{0.05};
  double floor_lr{0.0};
  double weight_decay{0.0};
  double beta1{0.9};
  double beta2{0.95};

  void validate() const;
};

EncoderParams train_baseline(const EncoderParams& init, const Corpus& corpus,
                             const BaselineConfig& config, std::uint64_t seed,
                             JsonlWriter* metrics = nullptr);

}  // namespace rgrpo

#endif  // RGRPO_SFT_HPP_
