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
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "rgrpo/errors.hpp"
#include "rgrpo/pipeline.hpp"
#include "rgrpo/run_manifest.hpp"

namespace {

// Distinct exit codes per failure class.
enum ExitCode {
  kOk = 0,
  kUnexpected = 1,
  kConfig = 2,
  kIo = 3,
  kNumeric = 4,
  kValidation = 5,
};

struct CommonArgs {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  bool force{false};
};

void add_common(CLI::App* cmd, CommonArgs& args) {
  cmd->add_option("--config", args.config_path, "experiment config file")
      ->required();
  cmd->add_option("--seed", args.seed, "override the config seed");
  cmd->add_flag("--force", args.force, "ignore the manifest cache");
}

rgrpo::ExperimentConfig load(const CommonArgs& args) {
  rgrpo::ExperimentConfig config =
      rgrpo::load_experiment_config(args.config_path);
  if (args.seed) {
    config.seed = *args.seed;
    config.validate();
  }
  return config;
}

void print_stage(const char* stage, const rgrpo::StageResult& result) {
  std::printf("%s: %s %s\n", stage, result.cached ? "cached" : "done",
              result.artifact.string().c_str());
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"dense-retrieval training lab: contrastive SFT + GRPO"};
  app.require_subcommand(1);

  CommonArgs gen_args, sft_args, rgrpo_args, baseline_args, eval_args,
      gradcheck_args, report_args;
  std::string baseline_kind = "dpo";
  std::string eval_checkpoint;
  std::vector<std::string> report_runs;

  CLI::App* gen = app.add_subcommand("gen-corpus", "generate the corpus");
  add_common(gen, gen_args);

  CLI::App* sft = app.add_subcommand("train-sft", "stage-1 contrastive SFT");
  add_common(sft, sft_args);

  CLI::App* grpo =
      app.add_subcommand("train-rgrpo", "stage-2 GRPO over live retrieval");
  add_common(grpo, rgrpo_args);

  CLI::App* baseline = app.add_subcommand(
      "train-baseline", "stage-2 baseline on mined hard negatives");
  add_common(baseline, baseline_args);
  baseline->add_option("--kind", baseline_kind, "ranking | dpo")
      ->check(CLI::IsMember({"ranking", "dpo"}));

  CLI::App* eval = app.add_subcommand("eval", "evaluate a checkpoint");
  add_common(eval, eval_args);
  eval->add_option("--checkpoint", eval_checkpoint, "checkpoint file")
      ->required();

  CLI::App* gradcheck = app.add_subcommand(
      "gradcheck", "finite-difference verification of all losses");
  add_common(gradcheck, gradcheck_args);

  CLI::App* report =
      app.add_subcommand("report", "compare evaluation reports");
  add_common(report, report_args);
  report->add_option("--run", report_runs, "evaluation report files (2+)")
      ->required()
      ->expected(-2);

  CLI11_PARSE(app, argc, argv);

  try {
    if (gen->parsed()) {
      print_stage("gen-corpus", rgrpo::run_gen_corpus(load(gen_args),
                                                      gen_args.force));
    } else if (sft->parsed()) {
      print_stage("train-sft", rgrpo::run_train_sft(load(sft_args),
                                                    sft_args.force));
    } else if (grpo->parsed()) {
      print_stage("train-rgrpo", rgrpo::run_train_rgrpo(load(rgrpo_args),
                                                        rgrpo_args.force));
    } else if (baseline->parsed()) {
      print_stage(("train-baseline(" + baseline_kind + ")").c_str(),
                  rgrpo::run_train_baseline(load(baseline_args), baseline_kind,
                                            baseline_args.force));
    } else if (eval->parsed()) {
      print_stage("eval", rgrpo::run_eval(load(eval_args), eval_checkpoint,
                                          eval_args.force));
    } else if (gradcheck->parsed()) {
      const rgrpo::ExperimentConfig config = load(gradcheck_args);
      const rgrpo::GradcheckReport result = rgrpo::run_gradcheck(config.seed);
      for (const auto& entry : result.entries) {
        std::printf("%-10s max_rel_err=%.3e  %s\n", entry.loss_name.c_str(),
                    entry.max_rel_error, entry.pass ? "PASS" : "FAIL");
      }
      if (!result.all_pass) return kValidation;
    } else if (report->parsed()) {
      const rgrpo::ExperimentConfig config = load(report_args);
      std::vector<std::filesystem::path> files(report_runs.begin(),
                                               report_runs.end());
      rgrpo::run_report(config, files);
      const auto paths = rgrpo::RunPaths::under(config.run_dir);
      std::printf("report: done %s\n",
                  (paths.reports_dir / "comparison.json").string().c_str());
    }
  } catch (const rgrpo::ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kConfig;
  } catch (const rgrpo::CheckpointError& e) {
    std::fprintf(stderr, "checkpoint error: %s\n", e.what());
    return kIo;
  } catch (const rgrpo::IoError& e) {
    std::fprintf(stderr, "io error: %s\n", e.what());
    return kIo;
  } catch (const rgrpo::NumericError& e) {
    std::fprintf(stderr, "numeric error: %s\n", e.what());
    return kNumeric;
  } catch (const rgrpo::ComparisonError& e) {
    std::fprintf(stderr, "comparison error: %s\n", e.what());
    return kValidation;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kUnexpected;
  }
  return kOk;
}
