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

#ifndef RGRPO_JSONL_HPP_
#define RGRPO_JSONL_HPP_

#include <filesystem>
#include <fstream>

#include "json.hpp"
#include "rgrpo/errors.hpp"

namespace rgrpo {

// Line-delimited JSON metrics log, one record per step/round.
class JsonlWriter {
 public:
  explicit JsonlWriter(const std::filesystem::path& path)
      : out_(path, std::ios::binary) {
    if (!out_) throw IoError("cannot open metrics log: " + path.string());
  }

  void write(const nlohmann::json& record) {
    out_ << record.dump() << '\n';
    if (!out_) throw IoError("metrics log write failed");
  }

  void flush() { out_.flush(); }

 private:
  std::ofstream out_;
};

}  // namespace rgrpo

#endif  // RGRPO_JSONL_HPP_
