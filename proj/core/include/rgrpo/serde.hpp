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

#ifndef RGRPO_SERDE_HPP_
#define RGRPO_SERDE_HPP_

#include <initializer_list>
#include <string>

#include "json.hpp"
#include "rgrpo/corpus.hpp"

namespace rgrpo {

using Json = nlohmann::json;

// Strict section parsing: unknown keys are configuration errors.
void check_keys(const Json& j, const std::string& section,
                std::initializer_list<const char*> allowed);

Json to_json(const CorpusConfig& cfg);
CorpusConfig corpus_config_from_json(const Json& j);

std::string hash_hex(std::uint64_t h);

}  // namespace rgrpo

#endif  // RGRPO_SERDE_HPP_
