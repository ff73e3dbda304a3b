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

#include "rgrpo/config.hpp"

#include <fstream>

#include "rgrpo/errors.hpp"

namespace rgrpo {

void ExperimentConfig::validate() const {
  corpus.validate();
  encoder.validate();
  sft.validate();
  rgrpo.validate();
  rewards.validate();
  baseline.validate();
  eval.validate();
  if (rgrpo.gathered_batch > corpus.num_items) {
    throw ConfigError("rgrpo.gathered_batch exceeds corpus.num_items");
  }
  if (eval.k_hit > corpus.num_items || eval.k_good > corpus.num_items) {
    throw ConfigError("eval K exceeds corpus.num_items");
  }
  if (sft.global_negatives > corpus.num_items - sft.batch_size) {
    throw ConfigError("sft.global_negatives leaves no room for positives");
  }
  if (run_dir.empty()) throw ConfigError("run_dir must not be empty");
}

Json to_json(const EncoderConfig& cfg) {
  return Json{{"token_dim", cfg.token_dim},
              {"output_dim", cfg.output_dim},
              {"mrl_dims", cfg.mrl_dims},
              {"mrl_weights", cfg.mrl_weights},
              {"init_range", cfg.init_range}};
}

EncoderConfig encoder_config_from_json(const Json& j) {
  check_keys(j, "encoder",
             {"token_dim", "output_dim", "mrl_dims", "mrl_weights",
              "init_range"});
  EncoderConfig cfg;
  cfg.token_dim = j.value("token_dim", cfg.token_dim);
  cfg.output_dim = j.value("output_dim", cfg.output_dim);
  if (j.contains("mrl_dims")) {
    cfg.mrl_dims = j.at("mrl_dims").get<std::vector<int>>();
    cfg.mrl_weights.assign(cfg.mrl_dims.size(), 1.0);
  }
  if (j.contains("mrl_weights")) {
    cfg.mrl_weights = j.at("mrl_weights").get<std::vector<double>>();
  }
  cfg.init_range = j.value("init_range", cfg.init_range);
  return cfg;
}

Json to_json(const SftConfig& cfg) {
  return Json{{"batch_size", cfg.batch_size},
              {"tau", cfg.tau},
              {"global_negatives", cfg.global_negatives},
              {"epochs", cfg.epochs},
              {"lr", cfg.lr},
              {"warmup_ratio", cfg.warmup_ratio},
              {"floor_lr", cfg.floor_lr},
              {"weight_decay", cfg.weight_decay},
              {"beta1", cfg.beta1},
              {"beta2", cfg.beta2}};
}

SftConfig sft_config_from_json(const Json& j) {
  check_keys(j, "sft",
             {"batch_size", "tau", "global_negatives", "epochs", "lr",
              "warmup_ratio", "floor_lr", "weight_decay", "beta1", "beta2"});
  SftConfig cfg;
  cfg.batch_size = j.value("batch_size", cfg.batch_size);
  cfg.tau = j.value("tau", cfg.tau);
  cfg.global_negatives = j.value("global_negatives", cfg.global_negatives);
  cfg.epochs = j.value("epochs", cfg.epochs);
  cfg.lr = j.value("lr", cfg.lr);
  cfg.warmup_ratio = j.value("warmup_ratio", cfg.warmup_ratio);
  cfg.floor_lr = j.value("floor_lr", cfg.floor_lr);
  cfg.weight_decay = j.value("weight_decay", cfg.weight_decay);
  cfg.beta1 = j.value("beta1", cfg.beta1);
  cfg.beta2 = j.value("beta2", cfg.beta2);
  return cfg;
}

Json to_json(const GrpoConfig& cfg) {
  return Json{{"group_size", cfg.group_size},
              {"gathered_batch", cfg.gathered_batch},
              {"clip", cfg.clip},
              {"kl_beta", cfg.kl_beta},
              {"tau_pol", cfg.tau_pol},
              {"rollout_queries", cfg.rollout_queries},
              {"epochs", cfg.epochs},
              {"inner_epochs", cfg.inner_epochs},
              {"lr", cfg.lr},
              {"warmup_ratio", cfg.warmup_ratio},
              {"floor_lr", cfg.floor_lr},
              {"weight_decay", cfg.weight_decay},
              {"beta1", cfg.beta1},
              {"beta2", cfg.beta2}};
}

GrpoConfig grpo_config_from_json(const Json& j) {
  check_keys(j, "rgrpo",
             {"group_size", "gathered_batch", "clip", "kl_beta", "tau_pol",
              "rollout_queries", "epochs", "inner_epochs", "lr",
              "warmup_ratio", "floor_lr", "weight_decay", "beta1", "beta2"});
  GrpoConfig cfg;
  cfg.group_size = j.value("group_size", cfg.group_size);
  cfg.gathered_batch = j.value("gathered_batch", cfg.gathered_batch);
  cfg.clip = j.value("clip", cfg.clip);
  cfg.kl_beta = j.value("kl_beta", cfg.kl_beta);
  cfg.tau_pol = j.value("tau_pol", cfg.tau_pol);
  cfg.rollout_queries = j.value("rollout_queries", cfg.rollout_queries);
  cfg.epochs = j.value("epochs", cfg.epochs);
  cfg.inner_epochs = j.value("inner_epochs", cfg.inner_epochs);
  cfg.lr = j.value("lr", cfg.lr);
  cfg.warmup_ratio = j.value("warmup_ratio", cfg.warmup_ratio);
  cfg.floor_lr = j.value("floor_lr", cfg.floor_lr);
  cfg.weight_decay = j.value("weight_decay", cfg.weight_decay);
  cfg.beta1 = j.value("beta1", cfg.beta1);
  cfg.beta2 = j.value("beta2", cfg.beta2);
  return cfg;
}

Json to_json(const RewardConfig& cfg) {
  return Json{
      {"weights", Json{{"relevance", cfg.weights.relevance},
                       {"quality", cfg.weights.quality},
                       {"exclusivity", cfg.weights.exclusivity}}},
      {"exclusivity_threshold", cfg.exclusivity_threshold},
      {"exclusivity_mode",
       cfg.exclusivity_mode == ExclusivityMode::binary ? "binary"
                                                       : "continuous"},
      {"model", cfg.model},
      {"weak_noise_rate", cfg.weak_noise_rate}};
}

RewardConfig reward_config_from_json(const Json& j) {
  check_keys(j, "rewards",
             {"weights", "exclusivity_threshold", "exclusivity_mode", "model",
              "weak_noise_rate"});
  RewardConfig cfg;
  if (j.contains("weights")) {
    const Json& w = j.at("weights");
    check_keys(w, "rewards.weights", {"relevance", "quality", "exclusivity"});
    cfg.weights.relevance = w.value("relevance", cfg.weights.relevance);
    cfg.weights.quality = w.value("quality", cfg.weights.quality);
    cfg.weights.exclusivity = w.value("exclusivity", cfg.weights.exclusivity);
  }
  cfg.exclusivity_threshold =
      j.value("exclusivity_threshold", cfg.exclusivity_threshold);
  if (j.contains("exclusivity_mode")) {
    const std::string mode = j.at("exclusivity_mode");
    if (mode == "binary") {
      cfg.exclusivity_mode = ExclusivityMode::binary;
    } else if (mode == "continuous") {
      cfg.exclusivity_mode = ExclusivityMode::continuous;
    } else {
      throw ConfigError("rewards: exclusivity_mode must be binary|continuous");
    }
  }
  cfg.model = j.value("model", cfg.model);
  cfg.weak_noise_rate = j.value("weak_noise_rate", cfg.weak_noise_rate);
  return cfg;
}

Json to_json(const BaselineConfig& cfg) {
  return Json{{"kind", cfg.kind},
              {"per_query", cfg.per_query},
              {"scan_k", cfg.scan_k},
              {"margin", cfg.margin},
              {"dpo_beta", cfg.dpo_beta},
              {"tau", cfg.tau},
              {"epochs", cfg.epochs},
              {"batch_size", cfg.batch_size},
              {"lr", cfg.lr},
              {"warmup_ratio", cfg.warmup_ratio},
              {"floor_lr", cfg.floor_lr},
              {"weight_decay", cfg.weight_decay},
              {"beta1", cfg.beta1},
              {"beta2", cfg.beta2}};
}

BaselineConfig baseline_config_from_json(const Json& j) {
  check_keys(j, "baseline",
             {"kind", "per_query", "scan_k", "margin", "dpo_beta", "tau",
              "epochs", "batch_size", "lr", "warmup_ratio", "floor_lr",
              "weight_decay", "beta1", "beta2"});
  BaselineConfig cfg;
  cfg.kind = j.value("kind", cfg.kind);
  cfg.per_query = j.value("per_query", cfg.per_query);
  cfg.scan_k = j.value("scan_k", cfg.scan_k);
  cfg.margin = j.value("margin", cfg.margin);
  cfg.dpo_beta = j.value("dpo_beta", cfg.dpo_beta);
  cfg.tau = j.value("tau", cfg.tau);
  cfg.epochs = j.value("epochs", cfg.epochs);
  cfg.batch_size = j.value("batch_size", cfg.batch_size);
  cfg.lr = j.value("lr", cfg.lr);
  cfg.warmup_ratio = j.value("warmup_ratio", cfg.warmup_ratio);
  cfg.floor_lr = j.value("floor_lr", cfg.floor_lr);
  cfg.weight_decay = j.value("weight_decay", cfg.weight_decay);
  cfg.beta1 = j.value("beta1", cfg.beta1);
  cfg.beta2 = j.value("beta2", cfg.beta2);
  return cfg;
}

Json to_json(const EvalConfig& cfg) {
  return Json{{"k_hit", cfg.k_hit},
              {"k_good", cfg.k_good},
              {"truth_min_grade", cfg.truth_min_grade},
              {"splits", cfg.splits}};
}

EvalConfig eval_config_from_json(const Json& j) {
  check_keys(j, "eval", {"k_hit", "k_good", "truth_min_grade", "splits"});
  EvalConfig cfg;
  cfg.k_hit = j.value("k_hit", cfg.k_hit);
  cfg.k_good = j.value("k_good", cfg.k_good);
  cfg.truth_min_grade = j.value("truth_min_grade", cfg.truth_min_grade);
  if (j.contains("splits")) {
    cfg.splits = j.at("splits").get<std::vector<std::string>>();
  }
  return cfg;
}

ExperimentConfig experiment_config_from_json(const Json& j) {
  check_keys(j, "experiment",
             {"corpus", "encoder", "sft", "rgrpo", "rewards", "baseline",
              "eval", "seed", "run_dir"});
  ExperimentConfig cfg;
  if (j.contains("corpus")) cfg.corpus = corpus_config_from_json(j.at("corpus"));
  if (j.contains("encoder")) {
    cfg.encoder = encoder_config_from_json(j.at("encoder"));
  }
  if (j.contains("sft")) cfg.sft = sft_config_from_json(j.at("sft"));
  if (j.contains("rgrpo")) cfg.rgrpo = grpo_config_from_json(j.at("rgrpo"));
  if (j.contains("rewards")) {
    cfg.rewards = reward_config_from_json(j.at("rewards"));
  }
  if (j.contains("baseline")) {
    cfg.baseline = baseline_config_from_json(j.at("baseline"));
  }
  if (j.contains("eval")) cfg.eval = eval_config_from_json(j.at("eval"));
  cfg.seed = j.value("seed", cfg.seed);
  if (j.contains("run_dir")) {
    cfg.run_dir = j.at("run_dir").get<std::string>();
  }
  cfg.validate();
  return cfg;
}

Json to_json(const ExperimentConfig& cfg) {
  return Json{{"corpus", to_json(cfg.corpus)},
              {"encoder", to_json(cfg.encoder)},
              {"sft", to_json(cfg.sft)},
              {"rgrpo", to_json(cfg.rgrpo)},
              {"rewards", to_json(cfg.rewards)},
              {"baseline", to_json(cfg.baseline)},
              {"eval", to_json(cfg.eval)},
              {"seed", cfg.seed},
              {"run_dir", cfg.run_dir.string()}};
}

ExperimentConfig load_experiment_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path.string());
  Json j;
  try {
    j = Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw ConfigError("config parse error in " + path.string() + ": " +
                      e.what());
  }
  return experiment_config_from_json(j);
}

}  // namespace rgrpo
