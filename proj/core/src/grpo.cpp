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

#include "rgrpo/grpo.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "rgrpo/errors.hpp"
#include "rgrpo/index.hpp"
#include "rgrpo/optim.hpp"
#include "rgrpo/rng.hpp"

namespace rgrpo {

std::vector<double> normalize_advantages(std::span<const double> rewards) {
  const auto g = rewards.size();
  if (g < 2) throw DomainError("normalize_advantages: group size must be >= 2");
  double mean = 0.0;
  for (double r : rewards) mean += r;
  mean /= static_cast<double>(g);
  double var = 0.0;
  for (double r : rewards) var += (r - mean) * (r - mean);
  const double std_dev = std::sqrt(var / static_cast<double>(g));
  std::vector<double> out(g, 0.0);
  if (std_dev < 1e-8) return out;
  for (std::size_t i = 0; i < g; ++i) {
    out[i] = (rewards[i] - mean) / std_dev;
  }
  return out;
}

std::vector<double> policy_distribution(std::span<const double> scores,
                                        double tau_pol) {
  if (tau_pol <= 0.0) {
    throw ConfigError("policy_distribution: tau_pol must be positive");
  }
  double max_score = -1e300;
  for (double s : scores) max_score = std::max(max_score, s);
  std::vector<double> p(scores.size());
  double z = 0.0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    p[i] = std::exp((scores[i] - max_score) / tau_pol);
    z += p[i];
  }
  for (double& v : p) v /= z;
  return p;
}

void GrpoConfig::validate() const {
  if (group_size < 2) throw ConfigError("rgrpo: group_size must be >= 2");
  if (group_size > gathered_batch) {
    throw ConfigError("rgrpo: group_size exceeds gathered_batch");
  }
  if (clip <= 0.0 || clip >= 1.0) {
    throw ConfigError("rgrpo: clip must lie in (0, 1)");
  }
  if (kl_beta < 0.0) throw ConfigError("rgrpo: kl_beta < 0");
  if (tau_pol <= 0.0) throw ConfigError("rgrpo: tau_pol <= 0");
  if (rollout_queries < 1) throw ConfigError("rgrpo: rollout_queries < 1");
  if (epochs < 1 || inner_epochs < 1) {
    throw ConfigError("rgrpo: epochs and inner_epochs must be >= 1");
  }
  if (lr < 0.0) throw ConfigError("rgrpo: lr < 0");
  if (warmup_ratio < 0.0 || warmup_ratio >= 1.0) {
    throw ConfigError("rgrpo: warmup_ratio outside [0, 1)");
  }
}

std::vector<RolloutGroup> build_groups(const EncoderParams& params_old,
                                       const Corpus& corpus,
                                       const RewardModel& reward_model,
                                       const RewardConfig& reward_config,
                                       const GrpoConfig& config,
                                       std::span<const int> query_indices,
                                       std::uint64_t seed) {
  config.validate();
  const int pool = static_cast<int>(corpus.items.size());
  const int batch = std::min(config.gathered_batch, pool);
  const IndexSnapshot snapshot = build_snapshot(params_old, corpus.items);

  std::vector<std::vector<int>> query_rows;
  query_rows.reserve(query_indices.size());
  for (int qi : query_indices) {
    query_rows.push_back(corpus.queries[static_cast<std::size_t>(qi)].tokens);
  }
  const EncodeBatch qb = encode(params_old, query_rows);

  std::vector<RolloutGroup> groups;
  groups.reserve(query_indices.size());
  for (std::size_t i = 0; i < query_indices.size(); ++i) {
    const Query& query =
        corpus.queries[static_cast<std::size_t>(query_indices[i])];
    const TopKResult top =
        gathered_topk(snapshot, qb.embeddings.row(static_cast<int>(i)), batch,
                      config.group_size,
                      hash_combine(seed, static_cast<std::uint64_t>(query.id)));
    RolloutGroup group;
    group.query_id = query.id;
    group.query_tokens = query.tokens;
    group.candidate_ids = top.item_ids;
    group.old_scores = top.scores;
    for (int id : top.item_ids) {
      const Item& item = corpus.item_by_id(id);
      group.candidate_tokens.push_back(item.tokens);
      const RewardBundle bundle =
          compute_reward(reward_model, query, item, reward_config);
      group.rewards.push_back(bundle.fused);
      group.bundles.push_back(bundle);
    }
    group.advantages = normalize_advantages(group.rewards);
    groups.push_back(std::move(group));
  }
  return groups;
}

GrpoLossResult grpo_loss(std::span<const RolloutGroup> groups,
                         const EncoderParams& params,
                         const EncoderParams& params_ref,
                         const GrpoConfig& config) {
  if (groups.empty()) throw DomainError("grpo_loss: no rollout groups");
  const double tau = config.tau_pol;
  const double eps = config.clip;

  // One flat encode per tensor role: queries, candidates, and the same
  // rows under the frozen reference.
  std::vector<std::vector<int>> query_rows;
  std::vector<std::vector<int>> cand_rows;
  for (const auto& g : groups) {
    query_rows.push_back(g.query_tokens);
    for (const auto& row : g.candidate_tokens) cand_rows.push_back(row);
  }
  const EncodeBatch qb = encode(params, query_rows);
  const EncodeBatch cb = encode(params, cand_rows);
  const EncodeBatch qb_ref = encode(params_ref, query_rows);
  const EncodeBatch cb_ref = encode(params_ref, cand_rows);

  Tensor2 d_q(qb.embeddings.rows, qb.embeddings.cols);
  Tensor2 d_c(cb.embeddings.rows, cb.embeddings.cols);

  GrpoLossResult result;
  double objective = 0.0;
  double kl_total = 0.0;
  int clipped = 0;
  int total_candidates = 0;

  int cand_base = 0;
  for (std::size_t gi = 0; gi < groups.size(); ++gi) {
    const RolloutGroup& group = groups[gi];
    const int g = static_cast<int>(group.candidate_ids.size());
    const auto qe = qb.embeddings.row(static_cast<int>(gi));
    const auto qe_ref = qb_ref.embeddings.row(static_cast<int>(gi));

    std::vector<double> scores(static_cast<std::size_t>(g));
    std::vector<double> ref_scores(static_cast<std::size_t>(g));
    for (int i = 0; i < g; ++i) {
      scores[static_cast<std::size_t>(i)] =
          dot(qe, cb.embeddings.row(cand_base + i));
      ref_scores[static_cast<std::size_t>(i)] =
          dot(qe_ref, cb_ref.embeddings.row(cand_base + i));
    }
    const std::vector<double> p = policy_distribution(scores, tau);
    const std::vector<double> p_old =
        policy_distribution(group.old_scores, tau);
    const std::vector<double> p_ref = policy_distribution(ref_scores, tau);

    double kl = 0.0;
    for (int i = 0; i < g; ++i) {
      const auto ii = static_cast<std::size_t>(i);
      if (p_old[ii] < 1e-300 || p_ref[ii] < 1e-300) {
        throw NumericError("grpo_loss: rollout/reference probability "
                           "underflow; raise tau_pol");
      }
      kl += p[ii] * std::log(p[ii] / p_ref[ii]);
    }

    // d(group objective)/d p_i for the surrogate part, and the surrogate
    // value itself (min of unclipped and clipped branches).
    double surrogate = 0.0;
    std::vector<double> d_p(static_cast<std::size_t>(g), 0.0);
    for (int i = 0; i < g; ++i) {
      const auto ii = static_cast<std::size_t>(i);
      const double adv = group.advantages[ii];
      const double ratio = p[ii] / p_old[ii];
      const double clipped_ratio = std::clamp(ratio, 1.0 - eps, 1.0 + eps);
      surrogate += std::min(ratio * adv, clipped_ratio * adv);
      const bool outside = ratio < 1.0 - eps || ratio > 1.0 + eps;
      if (outside) ++clipped;
      // The pessimistic branch is flat exactly when clipping binds
      // against the advantage direction.
      const bool active = adv >= 0.0 ? ratio <= 1.0 + eps : ratio >= 1.0 - eps;
      if (active) d_p[ii] = adv / p_old[ii];
    }
    total_candidates += g;
    const double inv_g = 1.0 / static_cast<double>(g);
    objective += surrogate * inv_g - config.kl_beta * kl;
    kl_total += kl;

    // Chain through the softmax: dp_i/ds_j = p_i (delta_ij - p_j) / tau.
    std::vector<double> d_s(static_cast<std::size_t>(g), 0.0);
    double weighted = 0.0;  // sum_i d_p[i] * p[i]
    for (int i = 0; i < g; ++i) {
      weighted += d_p[static_cast<std::size_t>(i)] *
                  p[static_cast<std::size_t>(i)];
    }
    for (int j = 0; j < g; ++j) {
      const auto jj = static_cast<std::size_t>(j);
      const double surrogate_term =
          inv_g * p[jj] * (d_p[jj] - weighted) / tau;
      const double kl_term =
          config.kl_beta * p[jj] *
          (std::log(p[jj] / p_ref[jj]) - kl) / tau;
      d_s[jj] = surrogate_term - kl_term;
    }

    // Scores are dots of unit embeddings; spread to both sides.
    auto dq = d_q.row(static_cast<int>(gi));
    for (int j = 0; j < g; ++j) {
      const double ds = d_s[static_cast<std::size_t>(j)];
      if (ds == 0.0) continue;
      axpy(ds, cb.embeddings.row(cand_base + j), dq);
      auto dc = d_c.row(cand_base + j);
      axpy(ds, qe, dc);
    }
    cand_base += g;
  }

  const double inv_groups = 1.0 / static_cast<double>(groups.size());
  result.objective = objective * inv_groups;
  result.loss = -result.objective;
  result.mean_kl = kl_total * inv_groups;
  result.clip_fraction =
      static_cast<double>(clipped) / static_cast<double>(total_candidates);
  if (!std::isfinite(result.loss)) {
    throw NumericError("grpo_loss: non-finite objective");
  }

  // Loss is the negated, group-averaged objective.
  for (double& v : d_q.data) v *= -inv_groups;
  for (double& v : d_c.data) v *= -inv_groups;
  EncoderGrads grads(params);
  encode_backward_projected(qb,
                            [&] {
                              Tensor2 d_proj_q(qb.projected.rows,
                                               qb.projected.cols);
                              prefix_grad_to_projected(qb, qb.projected.cols,
                                                       d_q, d_proj_q);
                              return d_proj_q;
                            }(),
                            params, grads);
  encode_backward_projected(cb,
                            [&] {
                              Tensor2 d_proj_c(cb.projected.rows,
                                               cb.projected.cols);
                              prefix_grad_to_projected(cb, cb.projected.cols,
                                                       d_c, d_proj_c);
                              return d_proj_c;
                            }(),
                            params, grads);
  result.d_token_embed = std::move(grads.d_token_embed);
  result.d_proj = std::move(grads.d_proj);
  return result;
}

EncoderParams train_rgrpo(const EncoderParams& init, const Corpus& corpus,
                          const GrpoConfig& config,
                          const RewardConfig& reward_config,
                          std::uint64_t seed, JsonlWriter* metrics) {
  config.validate();
  reward_config.validate();
  const std::vector<int> train = corpus.query_indices(Split::train);
  if (train.empty()) throw ConfigError("train_rgrpo: empty train split");
  const auto reward_model =
      make_reward_model(reward_config, hash_combine(seed, 0x4EA4));

  EncoderParams params = init;
  const EncoderParams& params_ref = init;  // frozen KL anchor

  AdamWConfig adamw{config.beta1, config.beta2, 1e-8, config.weight_decay};
  AdamWState embed_state(params.token_embed.rows, params.token_embed.cols,
                         adamw);
  AdamWState proj_state(params.proj.rows, params.proj.cols, adamw);

  const auto n = static_cast<int>(train.size());
  const int rounds_per_epoch =
      (n + config.rollout_queries - 1) / config.rollout_queries;
  const LrSchedule schedule{
      config.lr, config.warmup_ratio,
      static_cast<std::int64_t>(config.epochs) * rounds_per_epoch *
          config.inner_epochs,
      config.floor_lr};

  Rng rng(hash_combine(seed, 0x6A90));
  std::int64_t step = 0;
  int round = 0;
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    std::vector<int> order = train;
    rng.shuffle(order);
    for (int base = 0; base < n; base += config.rollout_queries) {
      const int take = std::min(config.rollout_queries, n - base);
      const std::span<const int> chunk(order.data() + base,
                                       static_cast<std::size_t>(take));
      // pi_theta_old freeze: rewards and old scores come from this copy.
      const EncoderParams params_old = params;
      const std::vector<RolloutGroup> groups = build_groups(
          params_old, corpus, *reward_model, reward_config, config, chunk,
          hash_combine(seed, static_cast<std::uint64_t>(round)));

      double mean_reward = 0.0, mean_rel = 0.0, mean_qual = 0.0,
             mean_excl = 0.0;
      int cands = 0;
      for (const auto& g : groups) {
        for (const auto& b : g.bundles) {
          mean_reward += b.fused;
          mean_rel += b.relevance;
          mean_qual += b.quality;
          mean_excl += b.exclusivity;
          ++cands;
        }
      }
      mean_reward /= cands;
      mean_rel /= cands;
      mean_qual /= cands;
      mean_excl /= cands;

      double round_loss = 0.0, round_kl = 0.0, round_clip = 0.0, lr = 0.0;
      for (int inner = 0; inner < config.inner_epochs; ++inner) {
        const GrpoLossResult res =
            grpo_loss(groups, params, params_ref, config);
        lr = lr_at(schedule, step);
        adamw_step(params.token_embed, res.d_token_embed, embed_state, lr);
        adamw_step(params.proj, res.d_proj, proj_state, lr);
        round_loss = res.loss;
        round_kl = res.mean_kl;
        round_clip = res.clip_fraction;
        ++step;
      }
      if (metrics != nullptr) {
        metrics->write({{"stage", "rgrpo"},
                        {"round", round},
                        {"epoch", epoch},
                        {"queries", take},
                        {"mean_fused_reward", mean_reward},
                        {"mean_relevance", mean_rel},
                        {"mean_quality", mean_qual},
                        {"mean_exclusivity", mean_excl},
                        {"loss", round_loss},
                        {"kl", round_kl},
                        {"clip_fraction", round_clip},
                        {"lr", lr}});
      }
      ++round;
    }
  }
  return params;
}

}  // namespace rgrpo
