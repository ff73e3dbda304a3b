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

#ifndef RGRPO_PIPELINE_HPP_
#define RGRPO_PIPELINE_HPP_

#include <filesystem>
#include <string>
#include <vector>

#include "rgrpo/config.hpp"

namespace rgrpo {

// Stage orchestration shared by the CLI and the acceptance suite. Each
// stage is idempotent per the run manifest: re-running with unchanged
// inputs is a no-op unless forced.

struct StageResult {
  bool cached{false};
  std::filesystem::path artifact;  // primary output of the stage
};

StageResult run_gen_corpus(const ExperimentConfig& config, bool force = false);
StageResult run_train_sft(const ExperimentConfig& config, bool force = false);
StageResult run_train_rgrpo(const ExperimentConfig& config,
                            bool force = false);
StageResult run_train_baseline(const ExperimentConfig& config,
                               const std::string& kind, bool force = false);
// Evaluates the given checkpoint; writes reports/eval-<checkpoint-stem>.json.
StageResult run_eval(const ExperimentConfig& config,
                     const std::filesystem::path& checkpoint,
                     bool force = false);

struct GradcheckEntry {
  std::string loss_name;
  double max_rel_error{0.0};
  bool pass{false};
};

struct GradcheckReport {
  std::vector<GradcheckEntry> entries;
  bool all_pass{false};
};

// Finite-difference verification of the four trainable losses through the
// full encoder pass on small seeded fixtures (h = 1e-5, threshold 1e-4,
// >= 32 probes per parameter tensor).
GradcheckReport run_gradcheck(std::uint64_t seed);

// Comparison across evaluation reports; writes JSON + aligned text under
// reports/ and returns the JSON document.
Json run_report(const ExperimentConfig& config,
                const std::vector<std::filesystem::path>& report_files);

}  // namespace rgrpo

#endif  // RGRPO_PIPELINE_HPP_
