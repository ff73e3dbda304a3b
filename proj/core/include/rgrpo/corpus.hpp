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

#ifndef RGRPO_CORPUS_HPP_
#define RGRPO_CORPUS_HPP_

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "rgrpo/rng.hpp"

namespace rgrpo {

// Synthetic e-commerce corpus. Items are token bags over a structured
// vocabulary (brand, function, attributes, quality marker, fillers); queries
// carry a latent intent that a rule-based oracle grades against items.
// The query slices are engineered so that lexical overlap and true relevance
// disagree: negation queries mention the attribute they forbid, alternative
// queries mention the brand they exclude.

constexpr int kMaxQuality = 4;  // item quality grades 0..4
constexpr int kMaxGrade = 4;    // relevance grades 0..4, Good = {3,4}

enum class Slice { head, longtail, negation, alternative };
enum class Split { train, eval_general, eval_longtail, eval_experience };

const char* to_string(Slice s);
const char* to_string(Split s);
Slice slice_from_string(const std::string& s);
Split split_from_string(const std::string& s);

struct TokenRange {
  int begin{0};
  int end{0};  // exclusive
  int size() const { return end - begin; }
  bool contains(int t) const { return t >= begin && t < end; }
};

struct VocabSpec {
  int size{0};
  TokenRange brand_tokens;
  TokenRange function_tokens;
  TokenRange attribute_tokens;
  int negation_token{-1};
  int alternative_token{-1};
  // Derived regions, not part of the published schema: quality markers
  // (one token per quality grade), filler tokens, and query-side synonym
  // tokens. Synonyms reference attributes but never occur in item token
  // bags, so matching them is a learned association, not string overlap.
  TokenRange quality_marker_tokens;
  TokenRange filler_tokens;
  TokenRange synonym_tokens;
  int synonyms_per_attribute{0};

  int synonym_for(int attribute_token, int variant) const;

  void validate() const;  // throws ConfigError
};

struct Item {
  int id{0};
  std::vector<int> tokens;
  int brand{0};
  int function{0};
  std::vector<int> attributes;  // sorted, unique
  int quality{0};               // 0..kMaxQuality

  bool has_attribute(int a) const;
};

struct QueryIntent {
  int required_function{0};
  std::vector<int> required_attributes;   // sorted, unique
  std::vector<int> forbidden_attributes;  // sorted, unique
  std::optional<int> excluded_brand;
};

struct Query {
  int id{0};
  std::vector<int> tokens;
  Slice slice{Slice::head};
  Split split{Split::train};
  QueryIntent intent;
};

struct CorpusConfig {
  int num_items{10000};
  int num_train_queries{2000};
  int num_eval_queries{500};  // per eval split

  int num_brands{50};
  int num_functions{40};
  int num_attributes{120};
  int num_fillers{400};

  int attrs_per_item_min{2};
  int attrs_per_item_max{4};
  int fillers_per_item_min{2};
  int fillers_per_item_max{5};
  double zipf_exponent{1.1};

  // Item quality grade distribution, P(quality = g) for g in 0..4.
  std::array<double, kMaxQuality + 1> quality_probs{0.1, 0.2, 0.4, 0.2, 0.1};
  // Probability that an item carries its quality-marker token. Quality is
  // only learnable through these markers; below 1.0 the signal is partial,
  // which keeps the quality objective from steamrolling relevance.
  double quality_marker_prob{0.35};

  // Query-side synonym vocabulary. A query names a required attribute by
  // its literal token with probability query_literal_attr_prob, otherwise
  // by one of the attribute's synonyms. Synonym matching has no lexical
  // route; it must be learned from training pairs.
  int synonyms_per_attribute{2};
  double query_literal_attr_prob{0.3};

  // Train-split slice mix; eval splits have fixed compositions (see
  // generate_corpus).
  double train_head_frac{0.35};
  double train_longtail_frac{0.30};
  double train_negation_frac{0.175};
  double train_alternative_frac{0.175};

  void validate() const;  // throws ConfigError
};

struct Corpus {
  VocabSpec vocab;
  std::vector<Item> items;
  std::vector<Query> queries;  // all splits, stable order
  std::uint64_t seed{0};
  CorpusConfig config;

  const Item& item_by_id(int id) const;  // ids are dense 0..n-1
  std::vector<int> query_indices(Split split) const;
  std::vector<int> query_indices(Split split, Slice slice) const;
};

Corpus generate_corpus(const CorpusConfig& config, std::uint64_t seed);

// The vocabulary layout is a pure function of the config.
VocabSpec make_vocab_spec(const CorpusConfig& config);

// Pure rule-table grading of an item against a query intent:
//   function mismatch -> 0; forbidden attribute or excluded brand -> 1;
//   otherwise by required-attribute coverage: full -> 4, >= 2/3 -> 3,
//   >= 1/3 -> 2, else 1. Empty required set counts as full coverage.
int oracle_grade(const Query& query, const Item& item);

// |set(query.tokens) ∩ set(item.tokens)| / |set(query.tokens)|
double lexical_overlap(const Query& query, const Item& item);

// Precomputed lookup structures over one corpus; read-only after build.
class CorpusIndex {
 public:
  explicit CorpusIndex(const Corpus& corpus);

  const std::vector<int>& items_with_function(int function) const;
  // Item ids with oracle grade == 4 for the query, ascending.
  std::vector<int> excellent_items(const Query& query) const;
  // Item ids with grade(q, d) in `grades`, ascending.
  std::vector<int> items_with_grade_at_least(const Query& query,
                                             int min_grade) const;

 private:
  const Corpus* corpus_;
  std::vector<std::vector<int>> by_function_;
  std::vector<int> empty_;
};

// Serialization: items.jsonl + queries.jsonl + corpus.json manifest.
void save_corpus(const Corpus& corpus, const std::filesystem::path& dir);
Corpus load_corpus(const std::filesystem::path& dir);

// Hash of the canonical serialized content (config + seed + records).
std::uint64_t corpus_content_hash(const Corpus& corpus);

}  // namespace rgrpo

#endif  // RGRPO_CORPUS_HPP_
