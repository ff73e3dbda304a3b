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

#include "rgrpo/rewards.hpp"

#include <algorithm>

#include "rgrpo/errors.hpp"
#include "rgrpo/rng.hpp"

namespace rgrpo {

double relevance_from_grade(int grade) {
  switch (grade) {
    case 4: return 1.0;
    case 3: return 0.7;
    case 2: return 0.3;
    case 1: return 0.1;
    default: return 0.0;
  }
}

double OracleRewardModel::score(const Query& query, const Item& item) const {
  return relevance_from_grade(oracle_grade(query, item));
}

WeakRewardModel::WeakRewardModel(double noise_rate, std::uint64_t seed)
    : noise_rate_(noise_rate), seed_(seed) {
  if (noise_rate < 0.0 || noise_rate > 1.0) {
    throw ConfigError("weak reward model: noise_rate outside [0, 1]");
  }
}

double WeakRewardModel::score(const Query& query, const Item& item) const {
  int grade = oracle_grade(query, item);
  // Stateless per-pair randomness: two independent draws from one mix.
  const std::uint64_t h = hash_combine(
      hash_combine(seed_, static_cast<std::uint64_t>(query.id)),
      static_cast<std::uint64_t>(item.id));
  const double u = static_cast<double>(h >> 11) * 0x1.0p-53;
  if (u < noise_rate_) {
    grade = static_cast<int>(mix64(h) % (kMaxGrade + 1));
  }
  return relevance_from_grade(grade);
}

double quality_reward(const Item& item) {
  return static_cast<double>(item.quality) / static_cast<double>(kMaxQuality);
}

double exclusivity_reward(const Query& query, const Item& item,
                          double threshold, ExclusivityMode mode) {
  if (threshold <= 0.0 || threshold > 1.0) {
    throw ConfigError("exclusivity_reward: threshold outside (0, 1]");
  }
  const double overlap = lexical_overlap(query, item);
  if (mode == ExclusivityMode::binary) {
    return overlap >= threshold ? 0.0 : 1.0;
  }
  return 1.0 - std::min(1.0, overlap / threshold);
}

RewardBundle fuse(double relevance, double quality, double exclusivity,
                  const RewardWeights& weights) {
  if (weights.relevance < 0.0 || weights.quality < 0.0 ||
      weights.exclusivity < 0.0) {
    throw ConfigError("fuse: reward weights must be non-negative");
  }
  if (weights.relevance == 0.0 && weights.quality == 0.0 &&
      weights.exclusivity == 0.0) {
    throw ConfigError("fuse: at least one reward weight must be positive");
  }
  RewardBundle b;
  b.relevance = relevance;
  b.quality = quality;
  b.exclusivity = exclusivity;
  b.fused = weights.relevance * relevance + weights.quality * quality +
            weights.exclusivity * exclusivity;
  return b;
}

void RewardConfig::validate() const {
  if (model != "oracle" && model != "weak") {
    throw ConfigError("rewards: model must be \"oracle\" or \"weak\"");
  }
  if (weak_noise_rate < 0.0 || weak_noise_rate > 1.0) {
    throw ConfigError("rewards: weak_noise_rate outside [0, 1]");
  }
  if (exclusivity_threshold <= 0.0 || exclusivity_threshold > 1.0) {
    throw ConfigError("rewards: exclusivity_threshold outside (0, 1]");
  }
  fuse(0.0, 0.0, 0.0, weights);  // weight validation
}

std::unique_ptr<RewardModel> make_reward_model(const RewardConfig& config,
                                               std::uint64_t seed) {
  config.validate();
  if (config.model == "weak") {
    return std::make_unique<WeakRewardModel>(config.weak_noise_rate, seed);
  }
  return std::make_unique<OracleRewardModel>();
}

RewardBundle compute_reward(const RewardModel& model, const Query& query,
                            const Item& item, const RewardConfig& config) {
  return fuse(model.score(query, item), quality_reward(item),
              exclusivity_reward(query, item, config.exclusivity_threshold,
                                 config.exclusivity_mode),
              config.weights);
}

}  // namespace rgrpo
