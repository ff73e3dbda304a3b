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

#include "rgrpo/pipeline.hpp"

#include <chrono>
#include <fstream>

#include "rgrpo/errors.hpp"
#include "rgrpo/gradcheck.hpp"
#include "rgrpo/index.hpp"
#include "rgrpo/jsonl.hpp"
#include "rgrpo/run_manifest.hpp"

namespace rgrpo {

namespace {

class WallTimer {
 public:
  WallTimer() : start_(std::chrono::steady_clock::now()) {}
  double elapsed_ms() const {
    return std::chrono::duration<double, std::milli>(
               std::chrono::steady_clock::now() - start_)
        .count();
  }

 private:
  std::chrono::steady_clock::time_point start_;
};

std::string stage_inputs_hash(const Json& pieces) {
  const std::string dump = pieces.dump();
  return hash_hex(fnv1a64(dump.data(), dump.size()));
}

Corpus load_run_corpus(const RunPaths& paths) {
  if (!std::filesystem::exists(paths.corpus_dir / "corpus.json")) {
    throw IoError("corpus not found under " + paths.corpus_dir.string() +
                  "; run gen-corpus first");
  }
  return load_corpus(paths.corpus_dir);
}

EncoderParams load_run_checkpoint(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) {
    throw CheckpointError("checkpoint not found: " + path.string());
  }
  return load_checkpoint(path);
}

}  // namespace

StageResult run_gen_corpus(const ExperimentConfig& config, bool force) {
  config.validate();
  const RunPaths paths = RunPaths::under(config.run_dir);
  paths.ensure_dirs();
  RunManifest manifest = RunManifest::load_or_create(paths, to_json(config));

  const std::string inputs = stage_inputs_hash(
      Json{{"corpus", to_json(config.corpus)}, {"seed", config.seed}});
  const std::vector<std::filesystem::path> outputs = {
      paths.corpus_dir / "items.jsonl", paths.corpus_dir / "queries.jsonl",
      paths.corpus_dir / "corpus.json"};
  if (!force && manifest.is_cached("gen-corpus", inputs, outputs)) {
    return {true, paths.corpus_dir};
  }

  WallTimer timer;
  const Corpus corpus = generate_corpus(config.corpus, config.seed);
  save_corpus(corpus, paths.corpus_dir);
  manifest.record_stage("gen-corpus", inputs, outputs, timer.elapsed_ms());
  return {false, paths.corpus_dir};
}

StageResult run_train_sft(const ExperimentConfig& config, bool force) {
  config.validate();
  const RunPaths paths = RunPaths::under(config.run_dir);
  paths.ensure_dirs();
  RunManifest manifest = RunManifest::load_or_create(paths, to_json(config));
  const Corpus corpus = load_run_corpus(paths);

  const std::string inputs = stage_inputs_hash(
      Json{{"corpus_hash", hash_hex(corpus_content_hash(corpus))},
           {"encoder", to_json(config.encoder)},
           {"sft", to_json(config.sft)},
           {"seed", config.seed}});
  const std::filesystem::path ckpt = paths.checkpoints_dir / "sft.ckpt";
  if (!force && manifest.is_cached("train-sft", inputs, {ckpt})) {
    return {true, ckpt};
  }

  WallTimer timer;
  JsonlWriter metrics(paths.metrics_dir / "sft.jsonl");
  const EncoderParams params =
      train_sft(corpus, config.encoder, config.sft, config.seed, &metrics);
  save_checkpoint(params, ckpt);
  manifest.record_stage("train-sft", inputs, {ckpt}, timer.elapsed_ms());
  return {false, ckpt};
}

StageResult run_train_rgrpo(const ExperimentConfig& config, bool force) {
  config.validate();
  const RunPaths paths = RunPaths::under(config.run_dir);
  paths.ensure_dirs();
  RunManifest manifest = RunManifest::load_or_create(paths, to_json(config));
  const Corpus corpus = load_run_corpus(paths);
  const std::filesystem::path sft_ckpt = paths.checkpoints_dir / "sft.ckpt";
  const EncoderParams init = load_run_checkpoint(sft_ckpt);

  const std::string inputs = stage_inputs_hash(
      Json{{"init_hash", hash_hex(checkpoint_hash(init))},
           {"rgrpo", to_json(config.rgrpo)},
           {"rewards", to_json(config.rewards)},
           {"seed", config.seed}});
  const std::filesystem::path ckpt = paths.checkpoints_dir / "rgrpo.ckpt";
  if (!force && manifest.is_cached("train-rgrpo", inputs, {ckpt})) {
    return {true, ckpt};
  }

  WallTimer timer;
  JsonlWriter metrics(paths.metrics_dir / "rgrpo.jsonl");
  const EncoderParams params = train_rgrpo(init, corpus, config.rgrpo,
                                           config.rewards, config.seed,
                                           &metrics);
  save_checkpoint(params, ckpt);
  manifest.record_stage("train-rgrpo", inputs, {ckpt}, timer.elapsed_ms());
  return {false, ckpt};
}

StageResult run_train_baseline(const ExperimentConfig& config,
                               const std::string& kind, bool force) {
  config.validate();
  BaselineConfig baseline = config.baseline;
  baseline.kind = kind;
  baseline.validate();
  const RunPaths paths = RunPaths::under(config.run_dir);
  paths.ensure_dirs();
  RunManifest manifest = RunManifest::load_or_create(paths, to_json(config));
  const Corpus corpus = load_run_corpus(paths);
  const std::filesystem::path sft_ckpt = paths.checkpoints_dir / "sft.ckpt";
  const EncoderParams init = load_run_checkpoint(sft_ckpt);

  const std::string stage = "train-baseline-" + kind;
  const std::string inputs = stage_inputs_hash(
      Json{{"init_hash", hash_hex(checkpoint_hash(init))},
           {"baseline", to_json(baseline)},
           {"seed", config.seed}});
  const std::filesystem::path ckpt =
      paths.checkpoints_dir / ("baseline-" + kind + ".ckpt");
  if (!force && manifest.is_cached(stage, inputs, {ckpt})) {
    return {true, ckpt};
  }

  WallTimer timer;
  JsonlWriter metrics(paths.metrics_dir / ("baseline-" + kind + ".jsonl"));
  const EncoderParams params =
      train_baseline(init, corpus, baseline, config.seed, &metrics);
  save_checkpoint(params, ckpt);
  manifest.record_stage(stage, inputs, {ckpt}, timer.elapsed_ms());
  return {false, ckpt};
}

StageResult run_eval(const ExperimentConfig& config,
                     const std::filesystem::path& checkpoint, bool force) {
  config.validate();
  const RunPaths paths = RunPaths::under(config.run_dir);
  paths.ensure_dirs();
  RunManifest manifest = RunManifest::load_or_create(paths, to_json(config));
  const Corpus corpus = load_run_corpus(paths);
  const EncoderParams params = load_run_checkpoint(checkpoint);

  const std::string stem = checkpoint.stem().string();
  const std::string stage = "eval-" + stem;
  const std::string inputs = stage_inputs_hash(
      Json{{"checkpoint_hash", hash_hex(checkpoint_hash(params))},
           {"corpus_hash", hash_hex(corpus_content_hash(corpus))},
           {"eval", to_json(config.eval)},
           {"seed", config.seed}});
  const std::filesystem::path out =
      paths.reports_dir / ("eval-" + stem + ".json");
  if (!force && manifest.is_cached(stage, inputs, {out})) {
    return {true, out};
  }

  WallTimer timer;
  const MetricsReport report =
      evaluate(params, corpus, config.eval, config.seed);
  {
    std::ofstream f(out, std::ios::binary);
    if (!f) throw IoError("cannot write report: " + out.string());
    f << report_to_json(report).dump(2) << '\n';
  }
  manifest.record_stage(stage, inputs, {out}, timer.elapsed_ms());
  return {false, out};
}

namespace {

// ---- gradient-check fixtures ----------------------------------------------

struct MrlHead {
  int dim;
  double weight;
};

// MRL-weighted InfoNCE through the full encoder pass; mirrors one SFT
// training step on a fixed batch.
double mrl_info_nce_through_encoder(
    const EncoderParams& params, const std::vector<std::vector<int>>& q_rows,
    const std::vector<std::vector<int>>& i_rows,
    const std::vector<std::vector<int>>& g_rows,
    const std::vector<int>& positive_ids, double tau,
    const std::vector<MrlHead>& heads, EncoderGrads* out_grads) {
  const EncodeBatch qb = encode(params, q_rows);
  const EncodeBatch ib = encode(params, i_rows);
  const EncodeBatch gb = encode(params, g_rows);
  Tensor2 d_proj_q(qb.projected.rows, qb.projected.cols);
  Tensor2 d_proj_i(ib.projected.rows, ib.projected.cols);
  Tensor2 d_proj_g(gb.projected.rows, gb.projected.cols);
  double loss = 0.0;
  for (const auto& head : heads) {
    const Tensor2 qs = mrl_slice(qb, head.dim);
    const Tensor2 is = mrl_slice(ib, head.dim);
    const Tensor2 gs =
        gb.projected.rows > 0 ? mrl_slice(gb, head.dim) : Tensor2(0, head.dim);
    InfoNceResult r = info_nce_loss(qs, is, gs, tau, positive_ids);
    loss += head.weight * r.loss;
    if (out_grads != nullptr) {
      for (double& v : r.d_query.data) v *= head.weight;
      for (double& v : r.d_item.data) v *= head.weight;
      prefix_grad_to_projected(qb, head.dim, r.d_query, d_proj_q);
      prefix_grad_to_projected(ib, head.dim, r.d_item, d_proj_i);
      if (gb.projected.rows > 0) {
        for (double& v : r.d_global.data) v *= head.weight;
        prefix_grad_to_projected(gb, head.dim, r.d_global, d_proj_g);
      }
    }
  }
  if (out_grads != nullptr) {
    encode_backward_projected(qb, d_proj_q, params, *out_grads);
    encode_backward_projected(ib, d_proj_i, params, *out_grads);
    if (gb.projected.rows > 0) {
      encode_backward_projected(gb, d_proj_g, params, *out_grads);
    }
  }
  return loss;
}

struct PairFixture {
  std::vector<int> query_tokens;
  std::vector<int> winner_tokens;
  std::vector<int> loser_tokens;
  double ref_winner{0.0};
  double ref_loser{0.0};
};

double pair_loss_through_encoder(const EncoderParams& params,
                                 const std::vector<PairFixture>& pairs,
                                 bool dpo, double margin, double beta,
                                 double tau, EncoderGrads* out_grads) {
  std::vector<std::vector<int>> q_rows, w_rows, l_rows;
  for (const auto& p : pairs) {
    q_rows.push_back(p.query_tokens);
    w_rows.push_back(p.winner_tokens);
    l_rows.push_back(p.loser_tokens);
  }
  const EncodeBatch qb = encode(params, q_rows);
  const EncodeBatch wb = encode(params, w_rows);
  const EncodeBatch lb = encode(params, l_rows);
  const auto n = static_cast<int>(pairs.size());
  Tensor2 d_q(n, params.output_dim());
  Tensor2 d_w(n, params.output_dim());
  Tensor2 d_l(n, params.output_dim());
  double loss = 0.0;
  const double inv_tau = 1.0 / tau;
  for (int b = 0; b < n; ++b) {
    const auto q = qb.embeddings.row(b);
    const auto w = wb.embeddings.row(b);
    const auto l = lb.embeddings.row(b);
    const double s_w = dot(q, w);
    const double s_l = dot(q, l);
    ScalarPairLoss pl;
    double scale = 1.0;
    if (dpo) {
      pl = dpo_loss(s_w * inv_tau, s_l * inv_tau,
                    pairs[static_cast<std::size_t>(b)].ref_winner * inv_tau,
                    pairs[static_cast<std::size_t>(b)].ref_loser * inv_tau,
                    beta);
      scale = inv_tau;
    } else {
      pl = ranking_loss(s_w, s_l, margin);
    }
    loss += pl.loss / n;
    const double dw = pl.d_winner * scale / n;
    const double dl = pl.d_loser * scale / n;
    auto dq = d_q.row(b);
    axpy(dw, w, dq);
    axpy(dl, l, dq);
    auto dwr = d_w.row(b);
    axpy(dw, q, dwr);
    auto dlr = d_l.row(b);
    axpy(dl, q, dlr);
  }
  if (out_grads != nullptr) {
    out_grads->add(encode_backward(qb, d_q, params));
    out_grads->add(encode_backward(wb, d_w, params));
    out_grads->add(encode_backward(lb, d_l, params));
  }
  return loss;
}

// Probe both parameter tensors of the encoder against a scalar loss.
double check_encoder_loss(
    const std::function<double(const EncoderParams&)>& loss_fn,
    const EncoderParams& base, const EncoderGrads& analytic, double h,
    int probes, std::uint64_t seed) {
  const auto embed_fn = [&](const Tensor2& embed) {
    EncoderParams p;
    p.token_embed = embed;
    p.proj = base.proj;
    return loss_fn(p);
  };
  const auto proj_fn = [&](const Tensor2& proj) {
    EncoderParams p;
    p.token_embed = base.token_embed;
    p.proj = proj;
    return loss_fn(p);
  };
  const double e1 = finite_diff_check(embed_fn, base.token_embed,
                                      analytic.d_token_embed, h, probes, seed);
  const double e2 = finite_diff_check(proj_fn, base.proj, analytic.d_proj, h,
                                      probes, seed + 1);
  return std::max(e1, e2);
}

CorpusConfig gradcheck_corpus_config() {
  CorpusConfig cfg;
  cfg.num_items = 300;
  cfg.num_train_queries = 48;
  cfg.num_eval_queries = 8;
  cfg.num_brands = 8;
  cfg.num_functions = 6;
  cfg.num_attributes = 20;
  cfg.num_fillers = 40;
  cfg.attrs_per_item_min = 2;
  cfg.attrs_per_item_max = 3;
  cfg.fillers_per_item_min = 1;
  cfg.fillers_per_item_max = 3;
  return cfg;
}

}  // namespace

GradcheckReport run_gradcheck(std::uint64_t seed) {
  constexpr double kH = 1e-5;
  constexpr double kThreshold = 1e-4;
  constexpr int kProbes = 32;

  const Corpus corpus = generate_corpus(gradcheck_corpus_config(), seed);
  const CorpusIndex index(corpus);

  EncoderConfig enc;
  enc.vocab_size = corpus.vocab.size;
  enc.token_dim = 16;
  enc.output_dim = 8;
  enc.mrl_dims = {4, 8};
  enc.mrl_weights = {1.0, 1.0};
  const EncoderParams base = init_encoder(enc, hash_combine(seed, 0xF1));

  GradcheckReport report;
  const std::vector<int> train = corpus.query_indices(Split::train);

  // InfoNCE batch: 8 queries + positives + 8 globals, MRL heads {4, 8}.
  {
    std::vector<std::vector<int>> q_rows, i_rows, g_rows;
    std::vector<int> positive_ids;
    for (int i = 0; i < 8; ++i) {
      const Query& q = corpus.queries[static_cast<std::size_t>(
          train[static_cast<std::size_t>(i)])];
      const auto excellent = index.excellent_items(q);
      q_rows.push_back(q.tokens);
      i_rows.push_back(corpus.item_by_id(excellent.front()).tokens);
      positive_ids.push_back(excellent.front());
    }
    Rng rng(hash_combine(seed, 0x61));
    for (int id : sample_global_negatives(
             static_cast<int>(corpus.items.size()), positive_ids, 8, rng)) {
      g_rows.push_back(corpus.item_by_id(id).tokens);
    }
    const std::vector<MrlHead> heads = {{4, 0.5}, {8, 0.5}};
    const double tau = 0.05;
    EncoderGrads analytic(base);
    mrl_info_nce_through_encoder(base, q_rows, i_rows, g_rows, positive_ids,
                                 tau, heads, &analytic);
    const auto loss_fn = [&](const EncoderParams& p) {
      return mrl_info_nce_through_encoder(p, q_rows, i_rows, g_rows,
                                          positive_ids, tau, heads, nullptr);
    };
    const double err = check_encoder_loss(loss_fn, base, analytic, kH, kProbes,
                                          hash_combine(seed, 0x11));
    report.entries.push_back({"info_nce", err, err < kThreshold});
  }

  // Preference pairs shared by the ranking and DPO checks.
  std::vector<PairFixture> pairs;
  {
    const IndexSnapshot snapshot = build_snapshot(base, corpus.items);
    for (int qi : train) {
      if (pairs.size() >= 8) break;
      const Query& q = corpus.queries[static_cast<std::size_t>(qi)];
      const auto excellent = index.excellent_items(q);
      if (excellent.empty()) continue;
      const EncodeBatch qb =
          encode(base, std::vector<std::vector<int>>{q.tokens});
      const TopKResult top = topk(snapshot, qb.embeddings.row(0), 16);
      int loser = -1;
      double loser_score = 0.0;
      for (std::size_t r = 0; r < top.item_ids.size(); ++r) {
        if (oracle_grade(q, corpus.item_by_id(top.item_ids[r])) <= 1) {
          loser = top.item_ids[r];
          loser_score = top.scores[r];
          break;
        }
      }
      if (loser < 0) continue;
      PairFixture fixture;
      fixture.query_tokens = q.tokens;
      fixture.winner_tokens = corpus.item_by_id(excellent.front()).tokens;
      fixture.loser_tokens = corpus.item_by_id(loser).tokens;
      fixture.ref_winner =
          dot(qb.embeddings.row(0), snapshot.embeddings.row(excellent.front()));
      fixture.ref_loser = loser_score;
      pairs.push_back(std::move(fixture));
    }
  }

  {
    EncoderGrads analytic(base);
    pair_loss_through_encoder(base, pairs, false, 0.2, 0.0, 1.0, &analytic);
    const auto loss_fn = [&](const EncoderParams& p) {
      return pair_loss_through_encoder(p, pairs, false, 0.2, 0.0, 1.0,
                                       nullptr);
    };
    const double err = check_encoder_loss(loss_fn, base, analytic, kH, kProbes,
                                          hash_combine(seed, 0x22));
    report.entries.push_back({"ranking", err, err < kThreshold});
  }

  {
    EncoderGrads analytic(base);
    pair_loss_through_encoder(base, pairs, true, 0.0, 0.1, 0.05, &analytic);
    const auto loss_fn = [&](const EncoderParams& p) {
      return pair_loss_through_encoder(p, pairs, true, 0.0, 0.1, 0.05,
                                       nullptr);
    };
    const double err = check_encoder_loss(loss_fn, base, analytic, kH, kProbes,
                                          hash_combine(seed, 0x33));
    report.entries.push_back({"dpo", err, err < kThreshold});
  }

  // GRPO: groups frozen at the base parameters, reference from a separate
  // init, and the check run slightly off the rollout point so the ratios
  // are away from 1 but inside the trust region.
  {
    GrpoConfig cfg;
    cfg.group_size = 4;
    cfg.gathered_batch = 64;
    cfg.rollout_queries = 6;
    RewardConfig rewards;
    const auto model = make_reward_model(rewards, seed);
    const std::vector<int> chunk(train.begin(), train.begin() + 6);
    const std::vector<RolloutGroup> groups =
        build_groups(base, corpus, *model, rewards, cfg, chunk,
                     hash_combine(seed, 0x44));
    const EncoderParams ref = init_encoder(enc, hash_combine(seed, 0xF2));

    EncoderParams probe_point = base;
    Rng rng(hash_combine(seed, 0x55));
    for (double& v : probe_point.token_embed.data) {
      v += (2.0 * rng.next_double() - 1.0) * 1e-3;
    }
    for (double& v : probe_point.proj.data) {
      v += (2.0 * rng.next_double() - 1.0) * 1e-3;
    }

    const auto loss_fn = [&](const EncoderParams& p) {
      return grpo_loss(groups, p, ref, cfg).loss;
    };
    double err = 0.0;
    const EncoderParams* points[] = {&base, &probe_point};
    for (const EncoderParams* point : points) {
      const GrpoLossResult res = grpo_loss(groups, *point, ref, cfg);
      EncoderGrads analytic(*point);
      analytic.d_token_embed = res.d_token_embed;
      analytic.d_proj = res.d_proj;
      err = std::max(err, check_encoder_loss(loss_fn, *point, analytic, kH,
                                             kProbes,
                                             hash_combine(seed, 0x66)));
    }
    report.entries.push_back({"grpo", err, err < kThreshold});
  }

  report.all_pass = true;
  for (const auto& entry : report.entries) {
    report.all_pass = report.all_pass && entry.pass;
  }
  return report;
}

Json run_report(const ExperimentConfig& config,
                const std::vector<std::filesystem::path>& report_files) {
  if (report_files.size() < 2) {
    throw ConfigError("report: need at least two evaluation reports");
  }
  const RunPaths paths = RunPaths::under(config.run_dir);
  paths.ensure_dirs();

  std::vector<std::pair<std::string, Json>> named;
  for (const auto& file : report_files) {
    std::ifstream in(file);
    if (!in) throw IoError("cannot open report: " + file.string());
    named.emplace_back(file.stem().string(), Json::parse(in));
  }

  Json comparisons = Json::object();
  for (std::size_t i = 1; i < named.size(); ++i) {
    comparisons[named[i].first] =
        compare_reports(named.front().second, named[i].second);
  }
  const Json doc{{"reference", named.front().first},
                 {"comparisons", comparisons}};

  const std::filesystem::path json_out = paths.reports_dir / "comparison.json";
  const std::filesystem::path text_out = paths.reports_dir / "comparison.txt";
  {
    std::ofstream f(json_out, std::ios::binary);
    if (!f) throw IoError("cannot write " + json_out.string());
    f << doc.dump(2) << '\n';
  }
  {
    std::ofstream f(text_out, std::ios::binary);
    if (!f) throw IoError("cannot write " + text_out.string());
    f << render_report_table(named);
  }
  return doc;
}

}  // namespace rgrpo
