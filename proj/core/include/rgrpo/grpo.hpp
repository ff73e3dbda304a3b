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

#ifndef RGRPO_GRPO_HPP_
#define RGRPO_GRPO_HPP_

#include <cstdint>
#include <span>
#include <vector>

#include "rgrpo/corpus.hpp"
#include "rgrpo/encoder.hpp"
#include "rgrpo/jsonl.hpp"
#include "rgrpo/rewards.hpp"
#include "rgrpo/tensor.hpp"

namespace rgrpo {

// Stage 2: group-relative policy optimization over live retrieval.
// Each rollout round freezes the current parameters, retrieves top-G
// candidates per query from a gathered batch, scores them with the fused
// multi-objective reward, and optimizes a clipped surrogate with an exact
// categorical KL penalty against the frozen SFT reference.
//
// The policy distribution is the within-group softmax of cosine scores at
// temperature tau_pol; the group of candidates is the entire support, so
// the KL term needs no sampling estimator.

struct RolloutGroup {
  int query_id{0};
  std::vector<int> query_tokens;
  std::vector<int> candidate_ids;
  std::vector<std::vector<int>> candidate_tokens;
  std::vector<double> old_scores;  // cosine under the rollout policy
  std::vector<double> rewards;     // fused
  std::vector<double> advantages;
  std::vector<RewardBundle> bundles;  // per-candidate components, for logs
};

// Group-standardized rewards with population std; a near-constant group
// (std < 1e-8) gets all-zero advantages.
std::vector<double> normalize_advantages(std::span<const double> rewards);

// Stable within-group softmax of scores / tau_pol.
std::vector<double> policy_distribution(std::span<const double> scores,
                                        double tau_pol);

struct GrpoConfig {
  int group_size{16};        // G
  int gathered_batch{4096};  // B-hat
  double clip{0.2};          // epsilon
  double kl_beta{0.2};       // beta
  double tau_pol{0.05};
  int rollout_queries{64};
  int epochs{3};        // passes over the train-query stream
  int inner_epochs{1};  // optimizer updates per rollout
  double lr{2e-3};
  double warmup_ratio{0.05};
  double floor_lr{0.0};
  double weight_decay{0.0};
  double beta1{0.9};
  double beta2{0.95};

  void validate() const;
};

// One rollout: per query, gathered top-G under params_old, rewards under
// the frozen rollout policy, standardized advantages. The per-query gather
// seed is hash_combine(seed, query id), so sample membership is
// reconstructible.
std::vector<RolloutGroup> build_groups(const EncoderParams& params_old,
                                       const Corpus& corpus,
                                       const RewardModel& reward_model,
                                       const RewardConfig& reward_config,
                                       const GrpoConfig& config,
                                       std::span<const int> query_indices,
                                       std::uint64_t seed);

struct GrpoLossResult {
  double loss{0.0};       // negated objective
  double objective{0.0};  // clipped surrogate minus beta * KL, group mean
  double mean_kl{0.0};
  double clip_fraction{0.0};
  Tensor2 d_token_embed;
  Tensor2 d_proj;
};

// Gradients flow through the current policy scores only; the rollout and
// reference distributions are detached.
GrpoLossResult grpo_loss(std::span<const RolloutGroup> groups,
                         const EncoderParams& params,
                         const EncoderParams& params_ref,
                         const GrpoConfig& config);

EncoderParams train_rgrpo(const EncoderParams& init, const Corpus& corpus,
                          const GrpoConfig& config,
                          const RewardConfig& reward_config,
                          std::uint64_t seed, JsonlWriter* metrics = nullptr);

}  // namespace rgrpo

#endif  // RGRPO_GRPO_HPP_
