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

#include <cstdio>
#include <fstream>
#include <sstream>

#include "rgrpo/corpus.hpp"
#include "rgrpo/errors.hpp"
#include "rgrpo/serde.hpp"

namespace rgrpo {

void check_keys(const Json& j, const std::string& section,
                std::initializer_list<const char*> allowed) {
  if (!j.is_object()) {
    throw ConfigError(section + ": expected a JSON object");
  }
  for (const auto& [key, value] : j.items()) {
    bool known = false;
    for (const char* a : allowed) {
      if (key == a) {
        known = true;
        break;
      }
    }
    if (!known) {
      throw ConfigError(section + ": unknown key \"" + key + "\"");
    }
  }
}

std::string hash_hex(std::uint64_t h) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(h));
  return buf;
}

Json to_json(const CorpusConfig& cfg) {
  return Json{
      {"num_items", cfg.num_items},
      {"num_train_queries", cfg.num_train_queries},
      {"num_eval_queries", cfg.num_eval_queries},
      {"num_brands", cfg.num_brands},
      {"num_functions", cfg.num_functions},
      {"num_attributes", cfg.num_attributes},
      {"num_fillers", cfg.num_fillers},
      {"attrs_per_item_min", cfg.attrs_per_item_min},
      {"attrs_per_item_max", cfg.attrs_per_item_max},
      {"fillers_per_item_min", cfg.fillers_per_item_min},
      {"fillers_per_item_max", cfg.fillers_per_item_max},
      {"zipf_exponent", cfg.zipf_exponent},
      {"quality_probs", cfg.quality_probs},
      {"quality_marker_prob", cfg.quality_marker_prob},
      {"synonyms_per_attribute", cfg.synonyms_per_attribute},
      {"query_literal_attr_prob", cfg.query_literal_attr_prob},
      {"train_head_frac", cfg.train_head_frac},
      {"train_longtail_frac", cfg.train_longtail_frac},
      {"train_negation_frac", cfg.train_negation_frac},
      {"train_alternative_frac", cfg.train_alternative_frac},
  };
}

CorpusConfig corpus_config_from_json(const Json& j) {
  check_keys(j, "corpus",
             {"num_items", "num_train_queries", "num_eval_queries",
              "num_brands", "num_functions", "num_attributes", "num_fillers",
              "attrs_per_item_min", "attrs_per_item_max",
              "fillers_per_item_min", "fillers_per_item_max", "zipf_exponent",
              "quality_probs", "quality_marker_prob",
              "synonyms_per_attribute", "query_literal_attr_prob",
              "train_head_frac", "train_longtail_frac",
              "train_negation_frac", "train_alternative_frac"});
  CorpusConfig cfg;
  cfg.num_items = j.value("num_items", cfg.num_items);
  cfg.num_train_queries = j.value("num_train_queries", cfg.num_train_queries);
  cfg.num_eval_queries = j.value("num_eval_queries", cfg.num_eval_queries);
  cfg.num_brands = j.value("num_brands", cfg.num_brands);
  cfg.num_functions = j.value("num_functions", cfg.num_functions);
  cfg.num_attributes = j.value("num_attributes", cfg.num_attributes);
  cfg.num_fillers = j.value("num_fillers", cfg.num_fillers);
  cfg.attrs_per_item_min = j.value("attrs_per_item_min", cfg.attrs_per_item_min);
  cfg.attrs_per_item_max = j.value("attrs_per_item_max", cfg.attrs_per_item_max);
  cfg.fillers_per_item_min =
      j.value("fillers_per_item_min", cfg.fillers_per_item_min);
  cfg.fillers_per_item_max =
      j.value("fillers_per_item_max", cfg.fillers_per_item_max);
  cfg.zipf_exponent = j.value("zipf_exponent", cfg.zipf_exponent);
  if (j.contains("quality_probs")) {
    cfg.quality_probs = j.at("quality_probs");
  }
  cfg.quality_marker_prob =
      j.value("quality_marker_prob", cfg.quality_marker_prob);
  cfg.synonyms_per_attribute =
      j.value("synonyms_per_attribute", cfg.synonyms_per_attribute);
  cfg.query_literal_attr_prob =
      j.value("query_literal_attr_prob", cfg.query_literal_attr_prob);
  cfg.train_head_frac = j.value("train_head_frac", cfg.train_head_frac);
  cfg.train_longtail_frac =
      j.value("train_longtail_frac", cfg.train_longtail_frac);
  cfg.train_negation_frac =
      j.value("train_negation_frac", cfg.train_negation_frac);
  cfg.train_alternative_frac =
      j.value("train_alternative_frac", cfg.train_alternative_frac);
  return cfg;
}

namespace {

Json item_to_json(const Item& item) {
  return Json{{"id", item.id},           {"tokens", item.tokens},
              {"brand", item.brand},     {"function", item.function},
              {"attributes", item.attributes},
              {"quality", item.quality}};
}

Item item_from_json(const Json& j) {
  Item item;
  item.id = j.at("id");
  item.tokens = j.at("tokens").get<std::vector<int>>();
  item.brand = j.at("brand");
  item.function = j.at("function");
  item.attributes = j.at("attributes").get<std::vector<int>>();
  item.quality = j.at("quality");
  return item;
}

Json query_to_json(const Query& q) {
  Json intent{{"function", q.intent.required_function},
              {"required", q.intent.required_attributes},
              {"forbidden", q.intent.forbidden_attributes}};
  if (q.intent.excluded_brand) {
    intent["excluded_brand"] = *q.intent.excluded_brand;
  } else {
    intent["excluded_brand"] = nullptr;
  }
  return Json{{"id", q.id},
              {"tokens", q.tokens},
              {"slice", to_string(q.slice)},
              {"split", to_string(q.split)},
              {"intent", intent}};
}

Query query_from_json(const Json& j) {
  Query q;
  q.id = j.at("id");
  q.tokens = j.at("tokens").get<std::vector<int>>();
  q.slice = slice_from_string(j.at("slice"));
  q.split = split_from_string(j.at("split"));
  const Json& intent = j.at("intent");
  q.intent.required_function = intent.at("function");
  q.intent.required_attributes = intent.at("required").get<std::vector<int>>();
  q.intent.forbidden_attributes =
      intent.at("forbidden").get<std::vector<int>>();
  if (!intent.at("excluded_brand").is_null()) {
    q.intent.excluded_brand = intent.at("excluded_brand").get<int>();
  }
  return q;
}

std::string items_jsonl(const Corpus& corpus) {
  std::ostringstream out;
  for (const auto& item : corpus.items) {
    out << item_to_json(item).dump() << '\n';
  }
  return out.str();
}

std::string queries_jsonl(const Corpus& corpus) {
  std::ostringstream out;
  for (const auto& q : corpus.queries) {
    out << query_to_json(q).dump() << '\n';
  }
  return out.str();
}

std::uint64_t content_hash(const std::string& items,
                           const std::string& queries) {
  return fnv1a64(queries.data(), queries.size(),
                 fnv1a64(items.data(), items.size()));
}

void write_file(const std::filesystem::path& path, const std::string& body) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open for writing: " + path.string());
  out << body;
  if (!out) throw IoError("write failed: " + path.string());
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open: " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

std::uint64_t corpus_content_hash(const Corpus& corpus) {
  return content_hash(items_jsonl(corpus), queries_jsonl(corpus));
}

void save_corpus(const Corpus& corpus, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  const std::string items = items_jsonl(corpus);
  const std::string queries = queries_jsonl(corpus);
  write_file(dir / "items.jsonl", items);
  write_file(dir / "queries.jsonl", queries);
  Json manifest{{"config", to_json(corpus.config)},
                {"seed", corpus.seed},
                {"num_items", corpus.items.size()},
                {"num_queries", corpus.queries.size()},
                {"content_hash", hash_hex(content_hash(items, queries))}};
  write_file(dir / "corpus.json", manifest.dump(2) + "\n");
}

Corpus load_corpus(const std::filesystem::path& dir) {
  const Json manifest = Json::parse(read_file(dir / "corpus.json"));
  Corpus corpus;
  corpus.config = corpus_config_from_json(manifest.at("config"));
  corpus.seed = manifest.at("seed");

  const std::string items = read_file(dir / "items.jsonl");
  const std::string queries = read_file(dir / "queries.jsonl");
  if (hash_hex(content_hash(items, queries)) !=
      manifest.at("content_hash").get<std::string>()) {
    throw IoError("corpus content hash mismatch in " + dir.string());
  }

  std::istringstream item_lines(items);
  std::string line;
  while (std::getline(item_lines, line)) {
    if (line.empty()) continue;
    corpus.items.push_back(item_from_json(Json::parse(line)));
  }
  std::istringstream query_lines(queries);
  while (std::getline(query_lines, line)) {
    if (line.empty()) continue;
    corpus.queries.push_back(query_from_json(Json::parse(line)));
  }

  corpus.vocab = make_vocab_spec(corpus.config);
  return corpus;
}

}  // namespace rgrpo
