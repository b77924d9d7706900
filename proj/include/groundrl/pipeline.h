// Copyright 2026 The groundrl Authors.
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

#ifndef GROUNDRL_PIPELINE_H_
#define GROUNDRL_PIPELINE_H_

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "json.hpp"
#include "groundrl/dataset_io.h"
#include "groundrl/grpo.h"
#include "groundrl/metrics.h"
#include "groundrl/optimizer.h"
#include "groundrl/policy.h"
#include "groundrl/synthworld.h"

namespace groundrl {

// ---------------------------------------------------------------------------
// Configuration

struct DataConfig {
  int cases = 1000;
  // Concept learning and reinforcement draw from disjoint halves of the
  // training split when set.
  bool disjoint_pools = false;
};

struct PolicyInitConfig {
  int context = 8;
  int embed_dim = 16;
  int hidden = 64;
  double init_scale = 0.05;
};

struct SupervisedConfig {
  double learning_rate = 1e-4;
  double lr_floor = 1e-6;
  int epochs = 2;
  int batch_size = 1;
  OptimizerKind optimizer = OptimizerKind::kAdamW;
  double weight_decay = 0.01;
};

struct AdapterConfig {
  int rank = kAdapterRank;
  SupervisedConfig train{1e-3, 1e-6, 2, 1, OptimizerKind::kAdamW, 0.01};
};

struct AblationFlags {
  bool skip_mcl = false;
  bool skip_svr = false;
  bool freeze_obs_proj = true;
  bool freeze_ctx_proj = true;
  bool adapter_on = true;

  friend bool operator==(const AblationFlags&, const AblationFlags&) = default;
};

struct EvalConfig {
  int max_report_len = 48;
};

struct RunConfig {
  uint64_t seed = 0;
  WorldConfig world;
  DataConfig data;
  PolicyInitConfig policy;
  SupervisedConfig mcl;
  RLConfig rl;
  AdapterConfig adapter;
  AblationFlags ablation;
  EvalConfig eval;
  int workers = 1;
};

// Every field with its default value.
nlohmann::ordered_json default_config_json();
// Strict: unknown keys and ill-typed values throw ConfigError.
RunConfig run_config_from_json(const nlohmann::ordered_json& j);
nlohmann::ordered_json run_config_to_json(const RunConfig& c);
// "a.b.c=value"; value is parsed as JSON when possible, else taken as a
// string. Throws ConfigError on unknown paths.
void apply_override(nlohmann::ordered_json& j, const std::string& assignment);
// Merges `patch` into `base`, rejecting keys `base` does not have.
void merge_config(nlohmann::ordered_json& base,
                  const nlohmann::ordered_json& patch);

// Named rows of the component and freeze-strategy ablation tables. Also
// accepts individual flag names ("skip_mcl", "no_adapter", ...).
AblationFlags apply_ablation(AblationFlags flags, const std::string& spec);
std::vector<std::string> ablation_presets();

// Seeds derived from the global run seed.
uint64_t case_seed(uint64_t run_seed, size_t index);
uint64_t policy_init_seed(const RunConfig& c);
uint64_t adapter_init_seed(const RunConfig& c);

PolicyConfig policy_config(const RunConfig& c);
PolicyParams initial_policy(const RunConfig& c);

// ---------------------------------------------------------------------------
// Run directory layout

struct RunPaths {
  std::filesystem::path root;

  std::filesystem::path config() const { return root / "config.json"; }
  std::filesystem::path cases() const { return root / "data" / "cases.jsonl"; }
  std::filesystem::path cot() const { return root / "data" / "cot.jsonl"; }
  std::filesystem::path grounding() const {
    return root / "data" / "grounding.jsonl";
  }
  std::filesystem::path reports() const {
    return root / "data" / "reports.jsonl";
  }
  std::filesystem::path checkpoint(Phase p) const;
  std::filesystem::path mcl_log() const { return root / "logs" / "mcl.jsonl"; }
  std::filesystem::path svr_log() const { return root / "logs" / "svr.jsonl"; }
  std::filesystem::path adapter_log() const {
    return root / "logs" / "adapter.jsonl";
  }
  std::filesystem::path eval_json() const {
    return root / "eval" / "report.json";
  }
  std::filesystem::path eval_csv() const { return root / "eval" / "report.csv"; }
  std::filesystem::path eval_cases() const {
    return root / "eval" / "per_case.jsonl";
  }
};

// ---------------------------------------------------------------------------
// Data

struct Dataset {
  std::vector<GroundTruthCase> cases;
  std::vector<Observation> observations;  // parallel to cases
  std::map<uint64_t, size_t> by_seed;
  std::vector<SupervisedExample> cot;
  std::vector<GroundingExample> grounding;
  std::vector<SupervisedExample> reports;

  const GroundTruthCase& case_for(uint64_t seed) const;
  const Observation& obs_for(uint64_t seed) const;
};

std::vector<GroundTruthCase> generate_cases(const RunConfig& c);
// One MCL example per chain-of-thought step: the step prompt, then the
// think/answer response whose answer is the step's anatomical region box.
std::vector<SupervisedExample> cot_examples(const GroundTruthCase& c,
                                            const RegionMap& regions);
std::vector<GroundingExample> grounding_examples(const GroundTruthCase& c);
SupervisedExample report_example(const GroundTruthCase& c);

// Writes the four dataset files.
void write_dataset(const RunPaths& paths, const std::vector<GroundTruthCase>& cases);
Dataset load_dataset(const RunPaths& paths, const Canvas& canvas);

// Training pool membership for a case under the configured split policy.
bool in_mcl_pool(const RunConfig& c, uint64_t case_seed);
bool in_svr_pool(const RunConfig& c, uint64_t case_seed);

std::vector<GroundingTask> grounding_tasks(const Dataset& d, Split split,
                                           const RunConfig& c,
                                           bool svr_pool_only = false);

// ---------------------------------------------------------------------------
// Training phases

struct SupervisedLog {
  std::vector<double> step_losses;
  std::vector<double> epoch_mean_losses;
};

// Supervised fine-tuning over `examples` with a cosine schedule; only the
// parameters selected by `mask` move. Writes one JSON object per step.
SupervisedLog supervised_train(PolicyParams& params, AdapterParams* adapter,
                               const std::vector<SequenceExample>& examples,
                               const SupervisedConfig& config,
                               const TrainableMask& mask, uint64_t seed,
                               std::ostream* log);

struct MclResult {
  PolicyParams params;
  SupervisedLog log;
};

MclResult train_mcl(const RunConfig& c, const Dataset& d,
                    const PolicyParams& theta, std::ostream* log);

struct AdapterResult {
  PolicyParams base;
  std::optional<AdapterParams> adapter;
  SupervisedLog log;
  double heldout_nll_base = 0.0;
  double heldout_nll_adapted = 0.0;
};

TrainableMask adapter_phase_mask(const AblationFlags& flags);
// Hash over every base block the mask leaves frozen.
uint64_t frozen_base_hash(const PolicyParams& p, const TrainableMask& mask);

// Throws IntegrityError when a frozen block changed.
AdapterResult train_adapter(const RunConfig& c, const Dataset& d,
                            const PolicyParams& base, std::ostream* log);

// Phases a phase consumes, given the ablation flags.
std::vector<Phase> svr_input_phases(const AblationFlags& f);
std::vector<Phase> adapter_input_phases(const AblationFlags& f);

// ---------------------------------------------------------------------------
// Evaluation

struct GroundingOutcome {
  uint64_t query_id = 0;
  uint64_t case_seed = 0;
  Tokens response;
  RewardBreakdown reward;
};

std::vector<GroundingOutcome> evaluate_grounding(
    const PolicyParams& policy, const std::vector<GroundingTask>& tasks,
    const Dataset& d, int max_len);

GroundingSummary summarize(const std::vector<GroundingOutcome>& outcomes);

Tokens generate_report(const PolicyParams& base, const AdapterParams* adapter,
                       const Observation& obs, int max_len);

struct PerCase {
  uint64_t case_seed = 0;
  Tokens report;
  std::optional<double> total_reward;  // mean over the case's queries
  std::optional<double> iou_reward;
  double rouge_l = 0.0;
  double meteor = 0.0;
  double label_accuracy = 0.0;
  size_t criteria_errors = 0;
};

struct Evaluation {
  EvalReport report;
  std::vector<PerCase> cases;
};

// Scores generated reports and grounding outcomes for `cases`.
Evaluation score_run(const std::vector<const GroundTruthCase*>& cases,
                     const std::vector<Tokens>& reports,
                     const std::vector<GroundingOutcome>& grounding,
                     const std::string& split);

nlohmann::ordered_json per_case_to_json(const PerCase& p);
PerCase per_case_from_json(const nlohmann::ordered_json& j);

// Paired one-tailed tests of "other < this" on the per-case metrics.
std::vector<SignificanceEntry> compare_runs(const std::vector<PerCase>& mine,
                                            const std::vector<PerCase>& other);

// ---------------------------------------------------------------------------
// Commands. Each reads and writes files under the run directory.

struct CommandContext {
  RunConfig config;
  RunPaths paths;
  std::ostream* out = nullptr;  // progress messages; may be null
};

void cmd_gen_data(const CommandContext& ctx);
void cmd_train_mcl(const CommandContext& ctx);
// `input` overrides the checkpoint the phase would read.
void cmd_train_svr(const CommandContext& ctx,
                   const std::optional<std::filesystem::path>& input = {});
void cmd_train_adapter(const CommandContext& ctx,
                       const std::optional<std::filesystem::path>& input = {});
// Writes eval/report.json, eval/report.csv and eval/per_case.jsonl. With
// `oracle`, ground-truth reports and boxes stand in for model output.
EvalReport cmd_evaluate(const CommandContext& ctx,
                        const std::optional<std::filesystem::path>& compare,
                        bool oracle = false);
// Every phase the ablation flags enable, then evaluation.
EvalReport cmd_run(const CommandContext& ctx);

// Checkpoints the evaluation of a run reads, honoring skipped phases.
Phase grounding_phase(const AblationFlags& f);

}  // namespace groundrl

#endif  // GROUNDRL_PIPELINE_H_
