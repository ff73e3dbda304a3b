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

#include "rgrpo/run_manifest.hpp"

#include <fstream>

#include "rgrpo/errors.hpp"

namespace rgrpo {

RunPaths RunPaths::under(const std::filesystem::path& run_dir) {
  RunPaths p;
  p.root = run_dir;
  p.corpus_dir = run_dir / "corpus";
  p.checkpoints_dir = run_dir / "checkpoints";
  p.metrics_dir = run_dir / "metrics";
  p.reports_dir = run_dir / "reports";
  p.manifest_path = run_dir / "manifest.json";
  return p;
}

void RunPaths::ensure_dirs() const {
  std::filesystem::create_directories(corpus_dir);
  std::filesystem::create_directories(checkpoints_dir);
  std::filesystem::create_directories(metrics_dir);
  std::filesystem::create_directories(reports_dir);
}

RunManifest::RunManifest(std::filesystem::path path, Json data)
    : path_(std::move(path)), data_(std::move(data)) {}

RunManifest RunManifest::load_or_create(const RunPaths& paths,
                                        const Json& config_snapshot) {
  Json data;
  if (std::filesystem::exists(paths.manifest_path)) {
    std::ifstream in(paths.manifest_path);
    if (!in) {
      throw IoError("cannot read manifest: " + paths.manifest_path.string());
    }
    data = Json::parse(in);
    // A config change invalidates every cached stage.
    if (data.value("config", Json()) != config_snapshot) {
      data = Json{{"tool_version", kToolVersion},
                  {"config", config_snapshot},
                  {"stages", Json::object()}};
    }
  } else {
    data = Json{{"tool_version", kToolVersion},
                {"config", config_snapshot},
                {"stages", Json::object()}};
  }
  return RunManifest(paths.manifest_path, std::move(data));
}

bool RunManifest::is_cached(
    const std::string& stage, const std::string& inputs_hash,
    const std::vector<std::filesystem::path>& outputs) const {
  const auto& stages = data_.at("stages");
  if (!stages.contains(stage)) return false;
  if (stages.at(stage).value("inputs_hash", "") != inputs_hash) return false;
  for (const auto& out : outputs) {
    if (!std::filesystem::exists(out)) return false;
  }
  return true;
}

void RunManifest::record_stage(
    const std::string& stage, const std::string& inputs_hash,
    const std::vector<std::filesystem::path>& outputs, double wall_ms) {
  Json out_list = Json::array();
  for (const auto& out : outputs) out_list.push_back(out.string());
  data_["stages"][stage] = Json{{"inputs_hash", inputs_hash},
                                {"outputs", out_list},
                                {"wall_ms", wall_ms}};
  save();
}

void RunManifest::save() const {
  const std::filesystem::path tmp = path_.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw IoError("cannot write manifest: " + tmp.string());
    out << data_.dump(2) << '\n';
  }
  std::filesystem::rename(tmp, path_);
}

}  // namespace rgrpo
