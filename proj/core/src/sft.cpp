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

#include "rgrpo/sft.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>

#include "rgrpo/errors.hpp"
#include "rgrpo/index.hpp"

namespace rgrpo {

InfoNceResult info_nce_loss(const Tensor2& query_embs, const Tensor2& item_embs,
                            const Tensor2& global_embs, double tau,
                            std::span<const int> item_ids) {
  if (tau <= 0.0) throw ConfigError("info_nce_loss: tau must be positive");
  const int nq = query_embs.rows;
  const int nb = item_embs.rows;
  const int ng = global_embs.rows;
  if (nb != nq || item_embs.cols != query_embs.cols ||
      (ng > 0 && global_embs.cols != query_embs.cols)) {
    throw DimensionError("info_nce_loss: embedding shape mismatch");
  }
  if (!item_ids.empty() && static_cast<int>(item_ids.size()) != nb) {
    throw DimensionError("info_nce_loss: item_ids length mismatch");
  }

  InfoNceResult result;
  result.d_query = Tensor2(nq, query_embs.cols);
  result.d_item = Tensor2(nb, item_embs.cols);
  result.d_global = Tensor2(ng, ng > 0 ? global_embs.cols : item_embs.cols);

  const int total = nb + ng;
  std::vector<double> logits(static_cast<std::size_t>(total));
  std::vector<bool> included(static_cast<std::size_t>(total));
  std::vector<double> probs(static_cast<std::size_t>(total));

  double loss = 0.0;
  for (int i = 0; i < nq; ++i) {
    const auto q = query_embs.row(i);
    double max_logit = -1e300;
    for (int j = 0; j < total; ++j) {
      const auto jj = static_cast<std::size_t>(j);
      bool in = true;
      if (!item_ids.empty() && j < nb && j != i &&
          item_ids[jj] == item_ids[static_cast<std::size_t>(i)]) {
        in = false;  // another query's copy of the same positive item
      }
      included[jj] = in;
      if (!in) continue;
      const auto col =
          j < nb ? item_embs.row(j) : global_embs.row(j - nb);
      logits[jj] = dot(q, col) / tau;
      max_logit = std::max(max_logit, logits[jj]);
    }
    double z = 0.0;
    for (int j = 0; j < total; ++j) {
      const auto jj = static_cast<std::size_t>(j);
      probs[jj] = included[jj] ? std::exp(logits[jj] - max_logit) : 0.0;
      z += probs[jj];
    }
    loss += std::log(z) + max_logit - logits[static_cast<std::size_t>(i)];

    auto dq = result.d_query.row(i);
    for (int j = 0; j < total; ++j) {
      const auto jj = static_cast<std::size_t>(j);
      if (!included[jj]) continue;
      const double dlogit =
          (probs[jj] / z - (j == i ? 1.0 : 0.0)) / static_cast<double>(nq);
      if (dlogit == 0.0) continue;
      const double c = dlogit / tau;
      if (j < nb) {
        axpy(c, item_embs.row(j), dq);
        auto di = result.d_item.row(j);
        axpy(c, q, di);
      } else {
        axpy(c, global_embs.row(j - nb), dq);
        auto dg = result.d_global.row(j - nb);
        axpy(c, q, dg);
      }
    }
  }
  result.loss = loss / static_cast<double>(std::max(nq, 1));
  if (!std::isfinite(result.loss)) {
    throw NumericError("info_nce_loss: non-finite loss");
  }
  return result;
}

std::vector<int> sample_global_negatives(int pool_size,
                                         std::span<const int> excluded_ids,
                                         int count, Rng& rng) {
  const std::unordered_set<int> excluded(excluded_ids.begin(),
                                         excluded_ids.end());
  const int available = pool_size - static_cast<int>(excluded.size());
  if (count < 0 || count > available) {
    throw ConfigError("sample_global_negatives: requested " +
                      std::to_string(count) + " of " +
                      std::to_string(available) + " available items");
  }
  std::vector<int> out;
  if (count == 0) return out;
  out.reserve(static_cast<std::size_t>(count));
  if (count * 2 < available) {
    std::unordered_set<int> chosen;
    while (static_cast<int>(out.size()) < count) {
      const int id = static_cast<int>(
          rng.next_below(static_cast<std::uint64_t>(pool_size)));
      if (excluded.count(id) || !chosen.insert(id).second) continue;
      out.push_back(id);
    }
  } else {
    std::vector<int> complement;
    complement.reserve(static_cast<std::size_t>(available));
    for (int id = 0; id < pool_size; ++id) {
      if (!excluded.count(id)) complement.push_back(id);
    }
    for (int i = 0; i < count; ++i) {
      const auto j = static_cast<std::size_t>(i) +
                     rng.next_below(static_cast<std::uint64_t>(
                         complement.size() - static_cast<std::size_t>(i)));
      std::swap(complement[static_cast<std::size_t>(i)], complement[j]);
    }
    complement.resize(static_cast<std::size_t>(count));
    out = std::move(complement);
  }
  return out;
}

std::vector<int> sample_global_negatives(int pool_size,
                                         std::span<const int> excluded_ids,
                                         int count, std::uint64_t seed) {
  Rng rng(seed);
  return sample_global_negatives(pool_size, excluded_ids, count, rng);
}

void SftConfig::validate() const {
  if (batch_size < 1) throw ConfigError("sft: batch_size must be >= 1");
  if (tau <= 0.0) throw ConfigError("sft: tau must be positive");
  if (global_negatives < 0) throw ConfigError("sft: global_negatives < 0");
  if (epochs < 1) throw ConfigError("sft: epochs must be >= 1");
  if (lr < 0.0) throw ConfigError("sft: lr must be >= 0");
  if (warmup_ratio < 0.0 || warmup_ratio >= 1.0) {
    throw ConfigError("sft: warmup_ratio outside [0, 1)");
  }
  if (weight_decay < 0.0) throw ConfigError("sft: weight_decay < 0");
}

namespace {

struct MrlHeads {
  std::vector<int> dims;
  std::vector<double> weights;  // normalized to sum 1
};

MrlHeads mrl_heads(const EncoderConfig& cfg) {
  MrlHeads heads;
  heads.dims = cfg.mrl_dims;
  heads.weights = cfg.mrl_weights;
  double total = 0.0;
  for (double w : heads.weights) total += w;
  for (double& w : heads.weights) w /= total;
  return heads;
}

double grad_norm(const EncoderGrads& grads) {
  double ss = 0.0;
  for (double v : grads.d_token_embed.data) ss += v * v;
  for (double v : grads.d_proj.data) ss += v * v;
  return std::sqrt(ss);
}

void scale_tensor(Tensor2& t, double s) {
  for (double& v : t.data) v *= s;
}

}  // namespace

EncoderParams train_sft(const Corpus& corpus, const EncoderConfig& enc_config,
                        const SftConfig& config, std::uint64_t seed,
                        JsonlWriter* metrics) {
  config.validate();
  EncoderConfig enc = enc_config;
  if (enc.vocab_size <= 0) enc.vocab_size = corpus.vocab.size;
  enc.validate();

  const std::vector<int> train = corpus.query_indices(Split::train);
  if (train.empty()) throw ConfigError("train_sft: empty train split");

  const CorpusIndex index(corpus);
  std::vector<std::vector<int>> positives;
  positives.reserve(train.size());
  for (int qi : train) {
    positives.push_back(index.excellent_items(
        corpus.queries[static_cast<std::size_t>(qi)]));
    if (positives.back().empty()) {
      throw ConfigError("train_sft: train query without an excellent item");
    }
  }

  EncoderParams params = init_encoder(enc, seed);
  AdamWConfig adamw{config.beta1, config.beta2, 1e-8, config.weight_decay};
  AdamWState embed_state(params.token_embed.rows, params.token_embed.cols,
                         adamw);
  AdamWState proj_state(params.proj.rows, params.proj.cols, adamw);

  const auto n = static_cast<int>(train.size());
  const int steps_per_epoch = (n + config.batch_size - 1) / config.batch_size;
  const LrSchedule schedule{config.lr, config.warmup_ratio,
                            static_cast<std::int64_t>(config.epochs) *
                                steps_per_epoch,
                            config.floor_lr};
  const MrlHeads heads = mrl_heads(enc);

  Rng rng(hash_combine(seed, 0x5F7));
  std::int64_t step = 0;
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    std::vector<int> order(train.size());
    for (std::size_t i = 0; i < train.size(); ++i) {
      order[i] = static_cast<int>(i);
    }
    rng.shuffle(order);
    for (int base = 0; base < n; base += config.batch_size) {
      const int bsz = std::min(config.batch_size, n - base);
      std::vector<std::vector<int>> query_rows;
      std::vector<std::vector<int>> item_rows;
      std::vector<int> positive_ids;
      query_rows.reserve(static_cast<std::size_t>(bsz));
      item_rows.reserve(static_cast<std::size_t>(bsz));
      for (int b = 0; b < bsz; ++b) {
        const int slot = order[static_cast<std::size_t>(base + b)];
        const int qi = train[static_cast<std::size_t>(slot)];
        const auto& pos = positives[static_cast<std::size_t>(slot)];
        const int pick = pos[rng.next_below(pos.size())];
        query_rows.push_back(
            corpus.queries[static_cast<std::size_t>(qi)].tokens);
        item_rows.push_back(corpus.item_by_id(pick).tokens);
        positive_ids.push_back(pick);
      }
      const std::vector<int> globals = sample_global_negatives(
          static_cast<int>(corpus.items.size()), positive_ids,
          config.global_negatives, rng);
      std::vector<std::vector<int>> global_rows;
      global_rows.reserve(globals.size());
      for (int id : globals) global_rows.push_back(corpus.item_by_id(id).tokens);

      const EncodeBatch qb = encode(params, query_rows);
      const EncodeBatch ib = encode(params, item_rows);
      const EncodeBatch gb = encode(params, global_rows);

      Tensor2 d_proj_q(qb.projected.rows, qb.projected.cols);
      Tensor2 d_proj_i(ib.projected.rows, ib.projected.cols);
      Tensor2 d_proj_g(gb.projected.rows, gb.projected.cols);
      double loss = 0.0;
      for (std::size_t hi = 0; hi < heads.dims.size(); ++hi) {
        const int dim = heads.dims[hi];
        const double w = heads.weights[hi];
        const Tensor2 qs = mrl_slice(qb, dim);
        const Tensor2 is = mrl_slice(ib, dim);
        const Tensor2 gs =
            gb.projected.rows > 0 ? mrl_slice(gb, dim) : Tensor2(0, dim);
        InfoNceResult r = info_nce_loss(qs, is, gs, config.tau, positive_ids);
        loss += w * r.loss;
        scale_tensor(r.d_query, w);
        scale_tensor(r.d_item, w);
        prefix_grad_to_projected(qb, dim, r.d_query, d_proj_q);
        prefix_grad_to_projected(ib, dim, r.d_item, d_proj_i);
        if (gb.projected.rows > 0) {
          scale_tensor(r.d_global, w);
          prefix_grad_to_projected(gb, dim, r.d_global, d_proj_g);
        }
      }
      if (!std::isfinite(loss)) {
        if (metrics != nullptr) {
          metrics->write({{"stage", "sft"},
                          {"step", step},
                          {"event", "diverged"},
                          {"loss", "non-finite"}});
        }
        throw NumericError("train_sft: non-finite loss at step " +
                           std::to_string(step));
      }

      EncoderGrads grads(params);
      encode_backward_projected(qb, d_proj_q, params, grads);
      encode_backward_projected(ib, d_proj_i, params, grads);
      if (gb.projected.rows > 0) {
        encode_backward_projected(gb, d_proj_g, params, grads);
      }

      const double lr = lr_at(schedule, step);
      adamw_step(params.token_embed, grads.d_token_embed, embed_state, lr);
      adamw_step(params.proj, grads.d_proj, proj_state, lr);

      if (metrics != nullptr) {
        metrics->write({{"stage", "sft"},
                        {"step", step},
                        {"epoch", epoch},
                        {"loss", loss},
                        {"lr", lr},
                        {"grad_norm", grad_norm(grads)}});
      }
      ++step;
    }
  }
  return params;
}

ScalarPairLoss ranking_loss(double winner_score, double loser_score,
                            double margin) {
  if (margin < 0.0) throw ConfigError("ranking_loss: margin must be >= 0");
  ScalarPairLoss out;
  const double violation = margin - winner_score + loser_score;
  if (violation > 0.0) {
    out.loss = violation;
    out.d_winner = -1.0;
    out.d_loser = 1.0;
  }
  return out;
}

ScalarPairLoss dpo_loss(double winner_score, double loser_score,
                        double ref_winner_score, double ref_loser_score,
                        double beta) {
  if (beta <= 0.0) throw ConfigError("dpo_loss: beta must be positive");
  const double delta =
      (winner_score - loser_score) - (ref_winner_score - ref_loser_score);
  const double x = beta * delta;
  ScalarPairLoss out;
  // -log sigmoid(x), computed stably on both tails.
  out.loss = x > 0.0 ? std::log1p(std::exp(-x)) : -x + std::log1p(std::exp(x));
  const double sig_neg = 1.0 / (1.0 + std::exp(x));  // sigmoid(-x)
  out.d_winner = -beta * sig_neg;
  out.d_loser = beta * sig_neg;
  return out;
}

MinedPairs mine_hard_negatives(const EncoderParams& params,
                               const Corpus& corpus, const CorpusIndex& index,
                               int per_query, int scan_k) {
  if (per_query < 1) throw ConfigError("mine_hard_negatives: per_query < 1");
  if (scan_k < 1) throw ConfigError("mine_hard_negatives: scan_k < 1");
  const IndexSnapshot snapshot = build_snapshot(params, corpus.items);
  const int k = std::min(scan_k, static_cast<int>(corpus.items.size()));

  MinedPairs mined;
  for (int qi : corpus.query_indices(Split::train)) {
    const Query& query = corpus.queries[static_cast<std::size_t>(qi)];
    const std::vector<int> excellent = index.excellent_items(query);
    if (excellent.empty()) {
      ++mined.skipped_queries;
      continue;
    }
    const int winner = excellent.front();
    const EncodeBatch qb = encode(params, std::vector<std::vector<int>>{
                                              query.tokens});
    const auto qe = qb.embeddings.row(0);
    const TopKResult top = topk(snapshot, qe, k);
    const double ref_winner =
        dot(qe, snapshot.embeddings.row(winner));
    int taken = 0;
    for (std::size_t r = 0; r < top.item_ids.size() && taken < per_query;
         ++r) {
      const int id = top.item_ids[r];
      if (oracle_grade(query, corpus.item_by_id(id)) > 1) continue;
      PreferencePair pair;
      pair.query_index = qi;
      pair.winner_id = winner;
      pair.loser_id = id;
      pair.ref_winner_score = ref_winner;
      pair.ref_loser_score = top.scores[r];
      mined.pairs.push_back(pair);
      ++taken;
    }
    if (taken == 0) ++mined.skipped_queries;
  }
  return mined;
}

void BaselineConfig::validate() const {
  if (kind != "ranking" && kind != "dpo") {
    throw ConfigError("baseline: kind must be \"ranking\" or \"dpo\"");
  }
  if (per_query < 1 || scan_k < 1) {
    throw ConfigError("baseline: per_query and scan_k must be >= 1");
  }
  if (margin < 0.0) throw ConfigError("baseline: margin < 0");
  if (dpo_beta <= 0.0) throw ConfigError("baseline: dpo_beta <= 0");
  if (tau <= 0.0) throw ConfigError("baseline: tau <= 0");
  if (epochs < 1 || batch_size < 1) {
    throw ConfigError("baseline: epochs and batch_size must be >= 1");
  }
  if (lr < 0.0) throw ConfigError("baseline: lr < 0");
  if (warmup_ratio < 0.0 || warmup_ratio >= 1.0) {
    throw ConfigError("baseline: warmup_ratio outside [0, 1)");
  }
}

EncoderParams train_baseline(const EncoderParams& init, const Corpus& corpus,
                             const BaselineConfig& config, std::uint64_t seed,
                             JsonlWriter* metrics) {
  config.validate();
  const CorpusIndex index(corpus);
  MinedPairs mined =
      mine_hard_negatives(init, corpus, index, config.per_query, config.scan_k);
  if (metrics != nullptr) {
    metrics->write({{"stage", config.kind},
                    {"event", "mined"},
                    {"pairs", mined.pairs.size()},
                    {"skipped_queries", mined.skipped_queries}});
  }
  EncoderParams params = init;
  if (mined.pairs.empty()) return params;

  AdamWConfig adamw{config.beta1, config.beta2, 1e-8, config.weight_decay};
  AdamWState embed_state(params.token_embed.rows, params.token_embed.cols,
                         adamw);
  AdamWState proj_state(params.proj.rows, params.proj.cols, adamw);
  const auto n = static_cast<int>(mined.pairs.size());
  const int steps_per_epoch = (n + config.batch_size - 1) / config.batch_size;
  const LrSchedule schedule{config.lr, config.warmup_ratio,
                            static_cast<std::int64_t>(config.epochs) *
                                steps_per_epoch,
                            config.floor_lr};
  const bool is_dpo = config.kind == "dpo";
  const double inv_tau = 1.0 / config.tau;

  Rng rng(hash_combine(seed, 0xBA5E));
  std::int64_t step = 0;
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    rng.shuffle(mined.pairs);
    for (int base = 0; base < n; base += config.batch_size) {
      const int bsz = std::min(config.batch_size, n - base);
      std::vector<std::vector<int>> query_rows, winner_rows, loser_rows;
      for (int b = 0; b < bsz; ++b) {
        const auto& pair = mined.pairs[static_cast<std::size_t>(base + b)];
        query_rows.push_back(
            corpus.queries[static_cast<std::size_t>(pair.query_index)].tokens);
        winner_rows.push_back(corpus.item_by_id(pair.winner_id).tokens);
        loser_rows.push_back(corpus.item_by_id(pair.loser_id).tokens);
      }
      const EncodeBatch qb = encode(params, query_rows);
      const EncodeBatch wb = encode(params, winner_rows);
      const EncodeBatch lb = encode(params, loser_rows);

      Tensor2 d_q(bsz, params.output_dim());
      Tensor2 d_w(bsz, params.output_dim());
      Tensor2 d_l(bsz, params.output_dim());
      double loss = 0.0;
      for (int b = 0; b < bsz; ++b) {
        const auto& pair = mined.pairs[static_cast<std::size_t>(base + b)];
        const auto q = qb.embeddings.row(b);
        const auto w = wb.embeddings.row(b);
        const auto l = lb.embeddings.row(b);
        const double s_w = dot(q, w);
        const double s_l = dot(q, l);
        ScalarPairLoss pl;
        double score_scale = 1.0;
        if (is_dpo) {
          pl = dpo_loss(s_w * inv_tau, s_l * inv_tau,
                        pair.ref_winner_score * inv_tau,
                        pair.ref_loser_score * inv_tau, config.dpo_beta);
          score_scale = inv_tau;
        } else {
          pl = ranking_loss(s_w, s_l, config.margin);
        }
        loss += pl.loss / bsz;
        const double dw = pl.d_winner * score_scale / bsz;
        const double dl = pl.d_loser * score_scale / bsz;
        auto dq = d_q.row(b);
        axpy(dw, w, dq);
        axpy(dl, l, dq);
        auto dwr = d_w.row(b);
        axpy(dw, q, dwr);
        auto dlr = d_l.row(b);
        axpy(dl, q, dlr);
      }
      if (!std::isfinite(loss)) {
        throw NumericError("train_baseline: non-finite loss at step " +
                           std::to_string(step));
      }

      EncoderGrads grads(params);
      grads.add(encode_backward(qb, d_q, params));
      grads.add(encode_backward(wb, d_w, params));
      grads.add(encode_backward(lb, d_l, params));

      const double lr = lr_at(schedule, step);
      adamw_step(params.token_embed, grads.d_token_embed, embed_state, lr);
      adamw_step(params.proj, grads.d_proj, proj_state, lr);
      if (metrics != nullptr) {
        metrics->write({{"stage", config.kind},
                        {"step", step},
                        {"epoch", epoch},
                        {"loss", loss},
                        {"lr", lr}});
      }
      ++step;
    }
  }
  return params;
}

}  // namespace rgrpo
