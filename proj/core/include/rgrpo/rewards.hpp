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

#ifndef RGRPO_REWARDS_HPP_
#define RGRPO_REWARDS_HPP_

#include <cstdint>
#include <memory>
#include <string>
#include <string_view>

#include "rgrpo/corpus.hpp"

namespace rgrpo {

// Multi-objective reward: relevance (from a pluggable reward model),
// quality (item grade) and exclusivity (lexical-channel membership),
// fused as a weighted sum. All components lie in [0, 1].

class RewardModel {
 public:
  virtual ~RewardModel() = default;
  virtual std::string_view name() const = 0;
  // Pure and deterministic per (query, item); bounded [0, 1].
  virtual double score(const Query& query, const Item& item) const = 0;
};

// Fixed monotone map from oracle grade to relevance reward. The Good
// boundary (grade 3) maps to 0.7 so reward and Goodrate stay aligned.
double relevance_from_grade(int grade);

class OracleRewardModel final : public RewardModel {
 public:
  std::string_view name() const override { return "oracle"; }
  double score(const Query& query, const Item& item) const override;
};

// Degraded scorer for the reward-model-strength ablation: with probability
// noise_rate (per pair, hash-seeded) the oracle grade is replaced by a
// uniformly random one.
class WeakRewardModel final : public RewardModel {
 public:
  WeakRewardModel(double noise_rate, std::uint64_t seed);
  std::string_view name() const override { return "weak"; }
  double score(const Query& query, const Item& item) const override;

 private:
  double noise_rate_;
  std::uint64_t seed_;
};

double quality_reward(const Item& item);

enum class ExclusivityMode { binary, continuous };

double exclusivity_reward(const Query& query, const Item& item,
                          double threshold, ExclusivityMode mode);

struct RewardWeights {
  double relevance{1.0};
  double quality{1.0};
  double exclusivity{1.0};
};

struct RewardBundle {
  double relevance{0.0};
  double quality{0.0};
  double exclusivity{0.0};
  double fused{0.0};
};

RewardBundle fuse(double relevance, double quality, double exclusivity,
                  const RewardWeights& weights);

struct RewardConfig {
  RewardWeights weights;
  double exclusivity_threshold{0.5};
  ExclusivityMode exclusivity_mode{ExclusivityMode::binary};
  std::string model{"oracle"};  // "oracle" | "weak"
  double weak_noise_rate{0.8};

  void validate() const;
};

std::unique_ptr<RewardModel> make_reward_model(const RewardConfig& config,
                                               std::uint64_t seed);

RewardBundle compute_reward(const RewardModel& model, const Query& query,
                            const Item& item, const RewardConfig& config);

}  // namespace rgrpo

#endif  // RGRPO_REWARDS_HPP_
