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

#ifndef RGRPO_EVAL_HPP_
#define RGRPO_EVAL_HPP_

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "rgrpo/corpus.hpp"
#include "rgrpo/encoder.hpp"
#include "rgrpo/serde.hpp"

namespace rgrpo {

// Offline metrics: Hitrate@K against the excellent-item ground truth,
// Goodrate@K over grades {3,4}, mean retrieved quality, and overlap with
// the lexical channel. Reports are pure functions of
// (checkpoint, corpus, config) and serialize deterministically.

struct EvalConfig {
  int k_hit{60};
  int k_good{20};
  int truth_min_grade{4};  // ground-truth cutoff; 3 widens truth to Good
  std::vector<std::string> splits{"eval-general", "eval-longtail",
                                  "eval-experience"};

  void validate() const;
};

struct SliceMetrics {
  int n_queries{0};
  double hitrate{0.0};
  double goodrate{0.0};
  double mean_quality{0.0};
  double channel_overlap{0.0};
};

struct SplitReport {
  SliceMetrics overall;
  std::map<std::string, SliceMetrics> slices;
  // Mean retrieved rank of excluded-brand items over alternative-slice
  // queries (1 = top). Larger means the traps sit deeper in the ranking.
  double trap_mean_rank{0.0};
  int trap_items{0};
};

struct MetricsReport {
  std::string corpus_hash;
  std::string checkpoint_hash;
  std::uint64_t seed{0};
  EvalConfig config;
  std::map<std::string, SplitReport> splits;
};

MetricsReport evaluate(const EncoderParams& params, const Corpus& corpus,
                       const EvalConfig& config, std::uint64_t seed);

// Standalone metric entry points (share the report implementation).
double hitrate_at_k(const EncoderParams& params, const Corpus& corpus,
                    Split split, int k, int truth_min_grade = 4);
double goodrate_at_k(const EncoderParams& params, const Corpus& corpus,
                     Split split, int k);
double channel_overlap(const EncoderParams& params, const Corpus& corpus,
                       Split split, int k);
double mean_retrieved_quality(const EncoderParams& params,
                              const Corpus& corpus, Split split, int k);

Json report_to_json(const MetricsReport& report);
MetricsReport report_from_json(const Json& j);

// Per-metric deltas between two reports over the same corpus and eval
// config; throws ComparisonError on hash/config mismatch.
Json compare_reports(const Json& a, const Json& b);

// Aligned text table over named reports, one row per run.
std::string render_report_table(
    const std::vector<std::pair<std::string, Json>>& reports);

}  // namespace rgrpo

#endif  // RGRPO_EVAL_HPP_
