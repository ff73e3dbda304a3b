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

#include "rgrpo/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <set>
#include <sstream>

#include "rgrpo/errors.hpp"
#include "rgrpo/index.hpp"
#include "rgrpo/rewards.hpp"

namespace rgrpo {

void EvalConfig::validate() const {
  if (k_hit < 1 || k_good < 1) {
    throw ConfigError("eval: k_hit and k_good must be >= 1");
  }
  if (truth_min_grade < 1 || truth_min_grade > 4) {
    throw ConfigError("eval: truth_min_grade outside [1, 4]");
  }
  if (splits.empty()) throw ConfigError("eval: no splits selected");
  for (const auto& s : splits) split_from_string(s);  // validates names
}

namespace {

struct QueryStats {
  double hitrate{0.0};
  double goodrate{0.0};
  double mean_quality{0.0};
  double channel_overlap{0.0};
};

QueryStats per_query_stats(const Query& query, const Corpus& corpus,
                           const CorpusIndex& index,
                           const IndexSnapshot& snapshot,
                           std::span<const double> query_embedding,
                           const EvalConfig& cfg) {
  const int k_max = std::max(cfg.k_hit, cfg.k_good);
  const TopKResult top = topk(snapshot, query_embedding, k_max);

  QueryStats stats;
  const std::vector<int> truth =
      index.items_with_grade_at_least(query, cfg.truth_min_grade);
  if (!truth.empty()) {
    const std::set<int> truth_set(truth.begin(), truth.end());
    int hits = 0;
    for (int r = 0; r < cfg.k_hit; ++r) {
      if (truth_set.count(top.item_ids[static_cast<std::size_t>(r)])) ++hits;
    }
    stats.hitrate =
        static_cast<double>(hits) / static_cast<double>(truth.size());
  }

  int good = 0;
  double quality_sum = 0.0;
  for (int r = 0; r < cfg.k_good; ++r) {
    const Item& item =
        corpus.item_by_id(top.item_ids[static_cast<std::size_t>(r)]);
    if (oracle_grade(query, item) >= 3) ++good;
    quality_sum += quality_reward(item);
  }
  stats.goodrate = static_cast<double>(good) / cfg.k_good;
  stats.mean_quality = quality_sum / cfg.k_good;

  const TopKResult lex = lexical_topk(query, corpus.items, cfg.k_good);
  const std::set<int> lex_set(lex.item_ids.begin(), lex.item_ids.end());
  int shared = 0;
  for (int r = 0; r < cfg.k_good; ++r) {
    if (lex_set.count(top.item_ids[static_cast<std::size_t>(r)])) ++shared;
  }
  stats.channel_overlap = static_cast<double>(shared) / cfg.k_good;
  return stats;
}

// Mean 1-based rank of the query's trap items in the full dense ranking
// (score desc, id asc). A trap item carries the excluded brand AND the
// required function: lexically it matches the query on both tokens while
// the oracle caps it at grade 1.
double trap_ranks_for_query(const Query& query, const Corpus& corpus,
                            const IndexSnapshot& snapshot,
                            std::span<const double> query_embedding,
                            int* trap_count) {
  const int n = snapshot.embeddings.rows;
  std::vector<double> scores(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    scores[static_cast<std::size_t>(i)] =
        dot(snapshot.embeddings.row(i), query_embedding);
  }
  std::vector<int> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    const double sa = scores[static_cast<std::size_t>(a)];
    const double sb = scores[static_cast<std::size_t>(b)];
    if (sa != sb) return sa > sb;
    return snapshot.item_ids[static_cast<std::size_t>(a)] <
           snapshot.item_ids[static_cast<std::size_t>(b)];
  });
  const int brand = *query.intent.excluded_brand;
  double rank_sum = 0.0;
  int traps = 0;
  for (int pos = 0; pos < n; ++pos) {
    const Item& item = corpus.item_by_id(
        snapshot.item_ids[static_cast<std::size_t>(order[
            static_cast<std::size_t>(pos)])]);
    if (item.brand == brand && item.function == query.intent.required_function) {
      rank_sum += pos + 1;
      ++traps;
    }
  }
  *trap_count += traps;
  return rank_sum;
}

void accumulate(SliceMetrics& m, const QueryStats& s) {
  m.n_queries += 1;
  m.hitrate += s.hitrate;
  m.goodrate += s.goodrate;
  m.mean_quality += s.mean_quality;
  m.channel_overlap += s.channel_overlap;
}

void finalize(SliceMetrics& m) {
  if (m.n_queries == 0) return;
  m.hitrate /= m.n_queries;
  m.goodrate /= m.n_queries;
  m.mean_quality /= m.n_queries;
  m.channel_overlap /= m.n_queries;
}

}  // namespace

MetricsReport evaluate(const EncoderParams& params, const Corpus& corpus,
                       const EvalConfig& config, std::uint64_t seed) {
  config.validate();
  const int pool = static_cast<int>(corpus.items.size());
  if (config.k_hit > pool || config.k_good > pool) {
    throw ConfigError("eval: K exceeds pool size");
  }

  MetricsReport report;
  report.corpus_hash = hash_hex(corpus_content_hash(corpus));
  report.checkpoint_hash = hash_hex(checkpoint_hash(params));
  report.seed = seed;
  report.config = config;

  const CorpusIndex index(corpus);
  const IndexSnapshot snapshot = build_snapshot(params, corpus.items);

  for (const auto& split_name : config.splits) {
    const Split split = split_from_string(split_name);
    const std::vector<int> q_indices = corpus.query_indices(split);
    SplitReport split_report;

    std::vector<std::vector<int>> rows;
    rows.reserve(q_indices.size());
    for (int qi : q_indices) {
      rows.push_back(corpus.queries[static_cast<std::size_t>(qi)].tokens);
    }
    if (rows.empty()) {
      report.splits[split_name] = split_report;
      continue;
    }
    const EncodeBatch qb = encode(params, rows);

    double trap_rank_sum = 0.0;
    int trap_items = 0;
    for (std::size_t i = 0; i < q_indices.size(); ++i) {
      const Query& query =
          corpus.queries[static_cast<std::size_t>(q_indices[i])];
      const QueryStats stats =
          per_query_stats(query, corpus, index, snapshot,
                          qb.embeddings.row(static_cast<int>(i)), config);
      accumulate(split_report.overall, stats);
      accumulate(split_report.slices[to_string(query.slice)], stats);
      if (query.slice == Slice::alternative && query.intent.excluded_brand) {
        trap_rank_sum += trap_ranks_for_query(
            query, corpus, snapshot, qb.embeddings.row(static_cast<int>(i)),
            &trap_items);
      }
    }
    finalize(split_report.overall);
    for (auto& [name, metrics] : split_report.slices) finalize(metrics);
    split_report.trap_items = trap_items;
    split_report.trap_mean_rank =
        trap_items > 0 ? trap_rank_sum / trap_items : 0.0;
    report.splits[split_name] = std::move(split_report);
  }
  return report;
}

namespace {

MetricsReport evaluate_single_split(const EncoderParams& params,
                                    const Corpus& corpus, Split split, int k,
                                    int k_good, int truth_min_grade) {
  EvalConfig cfg;
  cfg.k_hit = k;
  cfg.k_good = k_good;
  cfg.truth_min_grade = truth_min_grade;
  cfg.splits = {to_string(split)};
  return evaluate(params, corpus, cfg, 0);
}

}  // namespace

double hitrate_at_k(const EncoderParams& params, const Corpus& corpus,
                    Split split, int k, int truth_min_grade) {
  return evaluate_single_split(params, corpus, split, k, 1, truth_min_grade)
      .splits.at(to_string(split))
      .overall.hitrate;
}

double goodrate_at_k(const EncoderParams& params, const Corpus& corpus,
                     Split split, int k) {
  return evaluate_single_split(params, corpus, split, 1, k, 4)
      .splits.at(to_string(split))
      .overall.goodrate;
}

double channel_overlap(const EncoderParams& params, const Corpus& corpus,
                       Split split, int k) {
  return evaluate_single_split(params, corpus, split, 1, k, 4)
      .splits.at(to_string(split))
      .overall.channel_overlap;
}

double mean_retrieved_quality(const EncoderParams& params,
                              const Corpus& corpus, Split split, int k) {
  return evaluate_single_split(params, corpus, split, 1, k, 4)
      .splits.at(to_string(split))
      .overall.mean_quality;
}

namespace {

Json slice_to_json(const SliceMetrics& m) {
  return Json{{"n_queries", m.n_queries},
              {"hitrate", m.hitrate},
              {"goodrate", m.goodrate},
              {"mean_quality", m.mean_quality},
              {"channel_overlap", m.channel_overlap}};
}

SliceMetrics slice_from_json(const Json& j) {
  SliceMetrics m;
  m.n_queries = j.at("n_queries");
  m.hitrate = j.at("hitrate");
  m.goodrate = j.at("goodrate");
  m.mean_quality = j.at("mean_quality");
  m.channel_overlap = j.at("channel_overlap");
  return m;
}

}  // namespace

Json report_to_json(const MetricsReport& report) {
  Json splits = Json::object();
  for (const auto& [name, sr] : report.splits) {
    Json slices = Json::object();
    for (const auto& [slice, m] : sr.slices) slices[slice] = slice_to_json(m);
    splits[name] = Json{{"overall", slice_to_json(sr.overall)},
                        {"slices", slices},
                        {"trap_mean_rank", sr.trap_mean_rank},
                        {"trap_items", sr.trap_items}};
  }
  return Json{{"corpus_hash", report.corpus_hash},
              {"checkpoint_hash", report.checkpoint_hash},
              {"seed", report.seed},
              {"eval", Json{{"k_hit", report.config.k_hit},
                            {"k_good", report.config.k_good},
                            {"truth_min_grade", report.config.truth_min_grade},
                            {"splits", report.config.splits}}},
              {"splits", splits}};
}

MetricsReport report_from_json(const Json& j) {
  MetricsReport report;
  report.corpus_hash = j.at("corpus_hash");
  report.checkpoint_hash = j.at("checkpoint_hash");
  report.seed = j.at("seed");
  const Json& e = j.at("eval");
  report.config.k_hit = e.at("k_hit");
  report.config.k_good = e.at("k_good");
  report.config.truth_min_grade = e.at("truth_min_grade");
  report.config.splits = e.at("splits").get<std::vector<std::string>>();
  for (const auto& [name, sr] : j.at("splits").items()) {
    SplitReport split_report;
    split_report.overall = slice_from_json(sr.at("overall"));
    for (const auto& [slice, m] : sr.at("slices").items()) {
      split_report.slices[slice] = slice_from_json(m);
    }
    split_report.trap_mean_rank = sr.at("trap_mean_rank");
    split_report.trap_items = sr.at("trap_items");
    report.splits[name] = std::move(split_report);
  }
  return report;
}

Json compare_reports(const Json& a, const Json& b) {
  if (a.at("corpus_hash") != b.at("corpus_hash")) {
    throw ComparisonError("compare: corpus hashes differ");
  }
  if (a.at("eval") != b.at("eval")) {
    throw ComparisonError("compare: eval configs differ");
  }
  Json deltas = Json::object();
  for (const auto& [split, sa] : a.at("splits").items()) {
    if (!b.at("splits").contains(split)) continue;
    const Json& sb = b.at("splits").at(split);
    Json split_delta = Json::object();
    for (const auto& metric :
         {"hitrate", "goodrate", "mean_quality", "channel_overlap"}) {
      const double va = sa.at("overall").at(metric);
      const double vb = sb.at("overall").at(metric);
      split_delta[metric] =
          Json{{"a", va}, {"b", vb}, {"delta", vb - va}};
    }
    const double ta = sa.at("trap_mean_rank");
    const double tb = sb.at("trap_mean_rank");
    split_delta["trap_mean_rank"] =
        Json{{"a", ta}, {"b", tb}, {"delta", tb - ta}};
    deltas[split] = std::move(split_delta);
  }
  return Json{{"corpus_hash", a.at("corpus_hash")},
              {"a_checkpoint", a.at("checkpoint_hash")},
              {"b_checkpoint", b.at("checkpoint_hash")},
              {"deltas", deltas}};
}

std::string render_report_table(
    const std::vector<std::pair<std::string, Json>>& reports) {
  std::ostringstream out;
  for (const auto& [name, report] : reports) {
    out << name << "\n";
    char line[256];
    std::snprintf(line, sizeof(line), "  %-18s %9s %9s %9s %9s %10s\n",
                  "split", "hitrate", "goodrate", "quality", "overlap",
                  "trap_rank");
    out << line;
    for (const auto& [split, sr] : report.at("splits").items()) {
      const Json& o = sr.at("overall");
      std::snprintf(line, sizeof(line),
                    "  %-18s %9.4f %9.4f %9.4f %9.4f %10.1f\n", split.c_str(),
                    o.at("hitrate").get<double>(),
                    o.at("goodrate").get<double>(),
                    o.at("mean_quality").get<double>(),
                    o.at("channel_overlap").get<double>(),
                    sr.at("trap_mean_rank").get<double>());
      out << line;
    }
  }
  return out.str();
}

}  // namespace rgrpo
