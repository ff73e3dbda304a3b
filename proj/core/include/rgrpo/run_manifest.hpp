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

#ifndef RGRPO_RUN_MANIFEST_HPP_
#define RGRPO_RUN_MANIFEST_HPP_

#include <filesystem>
#include <string>
#include <vector>

#include "rgrpo/serde.hpp"

namespace rgrpo {

constexpr const char* kToolVersion = "0.1.0";

// Fixed run-directory layout: corpus/, checkpoints/, metrics/, reports/,
// manifest.json. Every stage writes only under its run_dir.
struct RunPaths {
  std::filesystem::path root;
  std::filesystem::path corpus_dir;
  std::filesystem::path checkpoints_dir;
  std::filesystem::path metrics_dir;
  std::filesystem::path reports_dir;
  std::filesystem::path manifest_path;

  static RunPaths under(const std::filesystem::path& run_dir);
  void ensure_dirs() const;
};

// Stage bookkeeping for idempotent re-runs: a stage is a cache hit when
// its recorded input hash matches and all recorded outputs still exist.
// The manifest is rewritten atomically (temp file + rename) at stage
// boundaries.
class RunManifest {
 public:
  static RunManifest load_or_create(const RunPaths& paths,
                                    const Json& config_snapshot);

  bool is_cached(const std::string& stage, const std::string& inputs_hash,
                 const std::vector<std::filesystem::path>& outputs) const;
  void record_stage(const std::string& stage, const std::string& inputs_hash,
                    const std::vector<std::filesystem::path>& outputs,
                    double wall_ms);
  void save() const;

  const Json& data() const { return data_; }

 private:
  RunManifest(std::filesystem::path path, Json data);

  std::filesystem::path path_;
  Json data_;
};

}  // namespace rgrpo

#endif  // RGRPO_RUN_MANIFEST_HPP_
