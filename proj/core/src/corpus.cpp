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

#include "rgrpo/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <unordered_set>
#include <utility>

#include "rgrpo/errors.hpp"

namespace rgrpo {

namespace {

constexpr int kGenerationAttempts = 1000;

// Number of required attributes per slice. Alternative queries carry none:
// their intent is "same function, different brand", which keeps every
// function-matching foreign-brand item an exact answer and makes the
// brand-token overlap the only lexical signal. Longtail queries demand
// more attributes, so their truth sets are small and crowded by
// partial-coverage near-misses.
int required_attr_count(Slice slice, Rng& rng, int available) {
  switch (slice) {
    case Slice::alternative:
      return 0;
    case Slice::negation:
      return std::min(1, available);
    case Slice::longtail:
      return std::min(rng.next_int(2, 3), available);
    default:
      return std::min(rng.next_int(1, 2), available);
  }
}

}  // namespace

const char* to_string(Slice s) {
  switch (s) {
    case Slice::head: return "head";
    case Slice::longtail: return "longtail";
    case Slice::negation: return "negation";
    case Slice::alternative: return "alternative";
  }
  return "?";
}

const char* to_string(Split s) {
  switch (s) {
    case Split::train: return "train";
    case Split::eval_general: return "eval-general";
    case Split::eval_longtail: return "eval-longtail";
    case Split::eval_experience: return "eval-experience";
  }
  return "?";
}

Slice slice_from_string(const std::string& s) {
  if (s == "head") return Slice::head;
  if (s == "longtail") return Slice::longtail;
  if (s == "negation") return Slice::negation;
  if (s == "alternative") return Slice::alternative;
  throw ConfigError("unknown slice: " + s);
}

Split split_from_string(const std::string& s) {
  if (s == "train") return Split::train;
  if (s == "eval-general") return Split::eval_general;
  if (s == "eval-longtail") return Split::eval_longtail;
  if (s == "eval-experience") return Split::eval_experience;
  throw ConfigError("unknown split: " + s);
}

void VocabSpec::validate() const {
  auto bad = [](const char* what) {
    throw ConfigError(std::string("vocab: ") + what);
  };
  if (brand_tokens.size() <= 0 || function_tokens.size() <= 0 ||
      attribute_tokens.size() <= 0) {
    bad("empty token range");
  }
  const TokenRange* ranges[] = {&brand_tokens,          &function_tokens,
                                &attribute_tokens,      &quality_marker_tokens,
                                &filler_tokens,         &synonym_tokens};
  for (const auto* a : ranges) {
    for (const auto* b : ranges) {
      if (a != b && a->begin < b->end && b->begin < a->end) {
        bad("overlapping token ranges");
      }
    }
    if (a->contains(negation_token) || a->contains(alternative_token)) {
      bad("reserved token inside a range");
    }
  }
  const int total = brand_tokens.size() + function_tokens.size() +
                    attribute_tokens.size() + quality_marker_tokens.size() +
                    filler_tokens.size() + synonym_tokens.size() + 2;
  if (size < total) bad("size smaller than the sum of ranges");
}

int VocabSpec::synonym_for(int attribute_token, int variant) const {
  return synonym_tokens.begin +
         (attribute_token - attribute_tokens.begin) * synonyms_per_attribute +
         variant;
}

bool Item::has_attribute(int a) const {
  return std::binary_search(attributes.begin(), attributes.end(), a);
}

void CorpusConfig::validate() const {
  if (num_items <= 0) throw ConfigError("corpus: num_items must be positive");
  if (num_train_queries <= 0 || num_eval_queries <= 0) {
    throw ConfigError("corpus: query counts must be positive");
  }
  if (num_brands < 2 || num_functions < 2 || num_attributes < 2 ||
      num_fillers < 1) {
    throw ConfigError("corpus: vocabulary ranges too small");
  }
  if (attrs_per_item_min < 1 || attrs_per_item_max < attrs_per_item_min ||
      attrs_per_item_max > num_attributes) {
    throw ConfigError("corpus: bad attrs_per_item range");
  }
  if (fillers_per_item_min < 0 || fillers_per_item_max < fillers_per_item_min ||
      fillers_per_item_max > num_fillers) {
    throw ConfigError("corpus: bad fillers_per_item range");
  }
  if (zipf_exponent <= 0.0) throw ConfigError("corpus: zipf_exponent <= 0");
  double qsum = 0.0;
  for (double p : quality_probs) {
    if (p < 0.0) throw ConfigError("corpus: negative quality probability");
    qsum += p;
  }
  if (qsum <= 0.0) throw ConfigError("corpus: quality_probs sum to zero");
  if (quality_marker_prob < 0.0 || quality_marker_prob > 1.0) {
    throw ConfigError("corpus: quality_marker_prob outside [0, 1]");
  }
  if (synonyms_per_attribute < 0) {
    throw ConfigError("corpus: synonyms_per_attribute < 0");
  }
  if (query_literal_attr_prob < 0.0 || query_literal_attr_prob > 1.0) {
    throw ConfigError("corpus: query_literal_attr_prob outside [0, 1]");
  }
  const double mix = train_head_frac + train_longtail_frac +
                     train_negation_frac + train_alternative_frac;
  if (train_head_frac < 0 || train_longtail_frac < 0 ||
      train_negation_frac < 0 || train_alternative_frac < 0 ||
      std::abs(mix - 1.0) > 1e-9) {
    throw ConfigError("corpus: train slice fractions must sum to 1");
  }
}

const Item& Corpus::item_by_id(int id) const {
  return items[static_cast<std::size_t>(id)];
}

std::vector<int> Corpus::query_indices(Split split) const {
  std::vector<int> out;
  for (std::size_t i = 0; i < queries.size(); ++i) {
    if (queries[i].split == split) out.push_back(static_cast<int>(i));
  }
  return out;
}

std::vector<int> Corpus::query_indices(Split split, Slice slice) const {
  std::vector<int> out;
  for (std::size_t i = 0; i < queries.size(); ++i) {
    if (queries[i].split == split && queries[i].slice == slice) {
      out.push_back(static_cast<int>(i));
    }
  }
  return out;
}

int oracle_grade(const Query& query, const Item& item) {
  const auto& intent = query.intent;
  if (item.function != intent.required_function) return 0;
  if (intent.excluded_brand && item.brand == *intent.excluded_brand) return 1;
  for (int f : intent.forbidden_attributes) {
    if (item.has_attribute(f)) return 1;
  }
  const auto n = static_cast<int>(intent.required_attributes.size());
  if (n == 0) return 4;
  int covered = 0;
  for (int a : intent.required_attributes) {
    if (item.has_attribute(a)) ++covered;
  }
  if (covered == n) return 4;
  if (3 * covered >= 2 * n) return 3;
  if (3 * covered >= n) return 2;
  return 1;
}

double lexical_overlap(const Query& query, const Item& item) {
  std::set<int> q(query.tokens.begin(), query.tokens.end());
  std::set<int> d(item.tokens.begin(), item.tokens.end());
  int shared = 0;
  for (int t : q) shared += d.count(t) ? 1 : 0;
  return static_cast<double>(shared) / static_cast<double>(q.size());
}

namespace {

struct VocabLayout {
  VocabSpec spec;
  int marker_for_quality(int q) const {
    return spec.quality_marker_tokens.begin + q;
  }
};

VocabLayout make_vocab(const CorpusConfig& cfg) {
  return VocabLayout{make_vocab_spec(cfg)};
}

int sample_quality(const CorpusConfig& cfg, Rng& rng) {
  double total = 0.0;
  for (double p : cfg.quality_probs) total += p;
  double u = rng.next_double() * total;
  for (int g = 0; g <= kMaxQuality; ++g) {
    u -= cfg.quality_probs[static_cast<std::size_t>(g)];
    if (u < 0.0) return g;
  }
  return kMaxQuality;
}

// Distinct Zipf-ranked draws mapped into a token range.
std::vector<int> sample_distinct(const ZipfSampler& zipf, const TokenRange& r,
                                 int count, Rng& rng) {
  std::unordered_set<int> seen;
  std::vector<int> out;
  while (static_cast<int>(out.size()) < count) {
    const int t = r.begin + zipf.sample(rng);
    if (seen.insert(t).second) out.push_back(t);
  }
  return out;
}

std::vector<Item> generate_items(const CorpusConfig& cfg,
                                 const VocabLayout& vocab, Rng& rng) {
  ZipfSampler function_zipf(cfg.num_functions, cfg.zipf_exponent);
  ZipfSampler attribute_zipf(cfg.num_attributes, cfg.zipf_exponent);
  ZipfSampler filler_zipf(cfg.num_fillers, cfg.zipf_exponent);

  std::vector<Item> items;
  items.reserve(static_cast<std::size_t>(cfg.num_items));
  for (int id = 0; id < cfg.num_items; ++id) {
    Item item;
    item.id = id;
    item.brand = vocab.spec.brand_tokens.begin +
                 static_cast<int>(rng.next_below(
                     static_cast<std::uint64_t>(cfg.num_brands)));
    item.function =
        vocab.spec.function_tokens.begin + function_zipf.sample(rng);
    const int na = rng.next_int(cfg.attrs_per_item_min, cfg.attrs_per_item_max);
    item.attributes =
        sample_distinct(attribute_zipf, vocab.spec.attribute_tokens, na, rng);
    std::sort(item.attributes.begin(), item.attributes.end());
    item.quality = sample_quality(cfg, rng);

    item.tokens.push_back(item.brand);
    item.tokens.push_back(item.function);
    for (int a : item.attributes) item.tokens.push_back(a);
    if (rng.next_double() < cfg.quality_marker_prob) {
      item.tokens.push_back(vocab.marker_for_quality(item.quality));
    }
    const int nf =
        rng.next_int(cfg.fillers_per_item_min, cfg.fillers_per_item_max);
    if (nf > 0) {
      for (int t :
           sample_distinct(filler_zipf, vocab.spec.filler_tokens, nf, rng)) {
        item.tokens.push_back(t);
      }
    }
    items.push_back(std::move(item));
  }
  return items;
}

class QueryFactory {
 public:
  QueryFactory(const CorpusConfig& cfg, const VocabLayout& vocab,
               const std::vector<Item>& items, Rng& rng)
      : cfg_(cfg), vocab_(vocab), items_(items), rng_(rng),
        function_zipf_(cfg.num_functions, cfg.zipf_exponent),
        by_function_(static_cast<std::size_t>(cfg.num_functions)) {
    for (const auto& item : items) {
      const int f = item.function - vocab_.spec.function_tokens.begin;
      by_function_[static_cast<std::size_t>(f)].push_back(item.id);
      brands_of_function_[f].insert(item.brand);
    }
  }

  Query make(int id, Slice slice, Split split) {
    for (int attempt = 0; attempt < kGenerationAttempts; ++attempt) {
      if (auto q = try_make(id, slice, split)) return *q;
    }
    throw ConfigError(std::string("corpus: unable to generate a ") +
                      to_string(slice) + " query; pool too small or skewed");
  }

 private:
  // Head queries draw functions from the frequent end of the Zipf curve,
  // longtail queries from the rare end. Both reuse the item sampler so the
  // query frequency skew matches the item pool skew.
  int sample_function_rank(Slice slice) {
    const int r = function_zipf_.sample(rng_);
    if (slice == Slice::longtail) return cfg_.num_functions - 1 - r;
    return r;
  }

  const Item* pick_item_with_function(int frank) {
    const auto& bucket = by_function_[static_cast<std::size_t>(frank)];
    if (bucket.empty()) return nullptr;
    return &items_[static_cast<std::size_t>(
        bucket[rng_.next_below(bucket.size())])];
  }

  std::optional<Query> try_make(int id, Slice slice, Split split) {
    const int frank = sample_function_rank(slice);
    const Item* target = pick_item_with_function(frank);
    if (target == nullptr) return std::nullopt;

    Query q;
    q.id = id;
    q.slice = slice;
    q.split = split;
    q.intent.required_function = target->function;

    switch (slice) {
      case Slice::head:
      case Slice::longtail: {
        pick_required(q, *target);
        q.tokens.push_back(target->function);
        for (int a : q.intent.required_attributes) {
          q.tokens.push_back(attr_surface_token(a));
        }
        return q;
      }
      case Slice::negation: {
        pick_required(q, *target);
        const auto forbidden = pick_forbidden(frank, *target);
        if (!forbidden) return std::nullopt;
        q.intent.forbidden_attributes = {*forbidden};
        q.tokens.push_back(target->function);
        for (int a : q.intent.required_attributes) {
          q.tokens.push_back(attr_surface_token(a));
        }
        // The trap: the query literally names the attribute it rejects.
        q.tokens.push_back(vocab_.spec.negation_token);
        q.tokens.push_back(*forbidden);
        return q;
      }
      case Slice::alternative: {
        const auto& brands = brands_of_function_[frank];
        if (brands.size() < 2) return std::nullopt;
        const int excluded = pick_brand(brands, target->brand);
        if (excluded == target->brand) return std::nullopt;
        q.intent.excluded_brand = excluded;
        // The trap: the query names the brand it excludes.
        q.tokens.push_back(vocab_.spec.alternative_token);
        q.tokens.push_back(excluded);
        q.tokens.push_back(target->function);
        return q;
      }
    }
    return std::nullopt;
  }

  // Surface form of a required attribute: literal token or a synonym.
  int attr_surface_token(int attribute_token) {
    if (vocab_.spec.synonyms_per_attribute == 0 ||
        rng_.next_double() < cfg_.query_literal_attr_prob) {
      return attribute_token;
    }
    const int variant = static_cast<int>(rng_.next_below(
        static_cast<std::uint64_t>(vocab_.spec.synonyms_per_attribute)));
    return vocab_.spec.synonym_for(attribute_token, variant);
  }

  void pick_required(Query& q, const Item& target) {
    const int avail = static_cast<int>(target.attributes.size());
    const int want = required_attr_count(q.slice, rng_, avail);
    std::vector<int> attrs = target.attributes;
    rng_.shuffle(attrs);
    attrs.resize(static_cast<std::size_t>(want));
    std::sort(attrs.begin(), attrs.end());
    q.intent.required_attributes = std::move(attrs);
  }

  // A forbidden attribute that actually occurs among same-function items
  // (so the negation trap has teeth) but is absent from the target.
  std::optional<int> pick_forbidden(int frank, const Item& target) {
    const auto& bucket = by_function_[static_cast<std::size_t>(frank)];
    for (int attempt = 0; attempt < 32; ++attempt) {
      const auto& other = items_[static_cast<std::size_t>(
          bucket[rng_.next_below(bucket.size())])];
      for (int a : other.attributes) {
        if (!target.has_attribute(a)) return a;
      }
    }
    return std::nullopt;
  }

  int pick_brand(const std::set<int>& brands, int exclude) {
    std::vector<int> pool(brands.begin(), brands.end());
    std::erase(pool, exclude);
    if (pool.empty()) return exclude;
    return pool[rng_.next_below(pool.size())];
  }

  const CorpusConfig& cfg_;
  const VocabLayout& vocab_;
  const std::vector<Item>& items_;
  Rng& rng_;
  ZipfSampler function_zipf_;
  std::vector<std::vector<int>> by_function_;
  std::map<int, std::set<int>> brands_of_function_;
};

std::vector<std::pair<Slice, int>> slice_schedule(Split split,
                                                  const CorpusConfig& cfg) {
  const int n =
      split == Split::train ? cfg.num_train_queries : cfg.num_eval_queries;
  auto part = [n](double frac) {
    return static_cast<int>(std::floor(frac * n));
  };
  std::vector<std::pair<Slice, int>> plan;
  switch (split) {
    case Split::train:
      plan = {{Slice::longtail, part(cfg.train_longtail_frac)},
              {Slice::negation, part(cfg.train_negation_frac)},
              {Slice::alternative, part(cfg.train_alternative_frac)}};
      break;
    case Split::eval_general:
      plan = {{Slice::longtail, part(0.4)}};
      break;
    case Split::eval_longtail:
      plan = {{Slice::longtail, n}};
      break;
    case Split::eval_experience:
      plan = {{Slice::longtail, part(0.2)},
              {Slice::negation, part(0.4)},
              {Slice::alternative, part(0.4)}};
      break;
  }
  int used = 0;
  for (const auto& [slice, count] : plan) used += count;
  if (used < n) plan.insert(plan.begin(), {Slice::head, n - used});
  return plan;
}

}  // namespace

VocabSpec make_vocab_spec(const CorpusConfig& config) {
  VocabSpec spec;
  int cursor = 0;
  spec.brand_tokens = {cursor, cursor + config.num_brands};
  cursor += config.num_brands;
  spec.function_tokens = {cursor, cursor + config.num_functions};
  cursor += config.num_functions;
  spec.attribute_tokens = {cursor, cursor + config.num_attributes};
  cursor += config.num_attributes;
  spec.negation_token = cursor++;
  spec.alternative_token = cursor++;
  spec.quality_marker_tokens = {cursor, cursor + kMaxQuality + 1};
  cursor += kMaxQuality + 1;
  spec.filler_tokens = {cursor, cursor + config.num_fillers};
  cursor += config.num_fillers;
  spec.synonyms_per_attribute = config.synonyms_per_attribute;
  spec.synonym_tokens = {
      cursor, cursor + config.num_attributes * config.synonyms_per_attribute};
  cursor += spec.synonym_tokens.size();
  spec.size = cursor;
  spec.validate();
  return spec;
}

Corpus generate_corpus(const CorpusConfig& config, std::uint64_t seed) {
  config.validate();
  Corpus corpus;
  corpus.config = config;
  corpus.seed = seed;
  const VocabLayout vocab = make_vocab(config);
  corpus.vocab = vocab.spec;

  Rng items_rng(hash_combine(seed, 0xA11CE));
  corpus.items = generate_items(config, vocab, items_rng);

  Rng queries_rng(hash_combine(seed, 0xB0B));
  QueryFactory factory(config, vocab, corpus.items, queries_rng);
  int next_id = 0;
  for (Split split : {Split::train, Split::eval_general, Split::eval_longtail,
                      Split::eval_experience}) {
    for (const auto& [slice, count] : slice_schedule(split, config)) {
      for (int i = 0; i < count; ++i) {
        corpus.queries.push_back(factory.make(next_id++, slice, split));
      }
    }
  }
  return corpus;
}

CorpusIndex::CorpusIndex(const Corpus& corpus) : corpus_(&corpus) {
  by_function_.resize(
      static_cast<std::size_t>(corpus.vocab.function_tokens.size()));
  for (const auto& item : corpus.items) {
    const int f = item.function - corpus.vocab.function_tokens.begin;
    by_function_[static_cast<std::size_t>(f)].push_back(item.id);
  }
}

const std::vector<int>& CorpusIndex::items_with_function(int function) const {
  const int f = function - corpus_->vocab.function_tokens.begin;
  if (f < 0 || f >= static_cast<int>(by_function_.size())) return empty_;
  return by_function_[static_cast<std::size_t>(f)];
}

std::vector<int> CorpusIndex::excellent_items(const Query& query) const {
  return items_with_grade_at_least(query, 4);
}

std::vector<int> CorpusIndex::items_with_grade_at_least(const Query& query,
                                                        int min_grade) const {
  std::vector<int> out;
  // Any grade above 0 requires a function match, so only that bucket can
  // contribute.
  for (int id : items_with_function(query.intent.required_function)) {
    if (oracle_grade(query, corpus_->item_by_id(id)) >= min_grade) {
      out.push_back(id);
    }
  }
  return out;
}

}  // namespace rgrpo
