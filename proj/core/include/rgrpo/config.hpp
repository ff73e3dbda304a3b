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

#ifndef RGRPO_CONFIG_HPP_
#define RGRPO_CONFIG_HPP_

#include <cstdint>
#include <filesystem>

#include "rgrpo/corpus.hpp"
#include "rgrpo/encoder.hpp"
#include "rgrpo/eval.hpp"
#include "rgrpo/grpo.hpp"
#include "rgrpo/rewards.hpp"
#include "rgrpo/serde.hpp"
#include "rgrpo/sft.hpp"

namespace rgrpo {

// One experiment file drives every stage. Parsing is strict: unknown keys
// anywhere are configuration errors, and every module's invariants are
// checked before any compute starts.
struct ExperimentConfig {
  CorpusConfig corpus;
  EncoderConfig encoder;
  SftConfig sft;
  GrpoConfig rgrpo;
  RewardConfig rewards;
  BaselineConfig baseline;
  EvalConfig eval;
  std::uint64_t seed{7};
  std::filesystem::path run_dir{"runs/default"};

  void validate() const;
};

ExperimentConfig experiment_config_from_json(const Json& j);
Json to_json(const ExperimentConfig& cfg);
ExperimentConfig load_experiment_config(const std::filesystem::path& path);

Json to_json(const EncoderConfig& cfg);
EncoderConfig encoder_config_from_json(const Json& j);
Json to_json(const SftConfig& cfg);
SftConfig sft_config_from_json(const Json& j);
Json to_json(const GrpoConfig& cfg);
GrpoConfig grpo_config_from_json(const Json& j);
Json to_json(const RewardConfig& cfg);
RewardConfig reward_config_from_json(const Json& j);
Json to_json(const BaselineConfig& cfg);
BaselineConfig baseline_config_from_json(const Json& j);
Json to_json(const EvalConfig& cfg);
EvalConfig eval_config_from_json(const Json& j);

}  // namespace rgrpo

#endif  // RGRPO_CONFIG_HPP_
