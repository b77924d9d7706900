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

#ifndef GROUNDRL_GRPO_H_
#define GROUNDRL_GRPO_H_

#include <cstdint>
#include <functional>
#include <ostream>
#include <string>
#include <vector>

#include "groundrl/optimizer.h"
#include "groundrl/policy.h"
#include "groundrl/rewards.h"
#include "groundrl/vocabulary.h"

namespace groundrl {

struct RLConfig {
  int group_size = 8;
  double kl_beta = 0.04;
  double learning_rate = 0.05;
  int epochs = 4;
  int max_response_len = 32;
  double advantage_epsilon = kDefaultAdvantageEpsilon;
  double temperature = 1.0;
  OptimizerKind optimizer = OptimizerKind::kSgd;
  uint64_t seed = 0;
  // Rollout worker threads. Streams are derived per rollout, so the result
  // does not depend on this value.
  int workers = 1;
};

// Throws ConfigError.
void validate(const RLConfig& config);

// One grounding query with its conditioning.
struct GroundingTask {
  uint64_t query_id = 0;
  Observation obs;
  TokenIds prompt;
  BBox gt_box;
  Canvas canvas;
};

struct RolloutGroup {
  uint64_t query_id = 0;
  std::vector<Rollout> rollouts;
  std::vector<RewardBreakdown> rewards;
  GroupAdvantages advantages;
  double mean_reward = 0.0;
  double max_reward = 0.0;
};

// Scores one decoded response (without <eos>) against the query.
RewardBreakdown score_response(std::span<const TokenId> body,
                               const GroundingTask& task,
                               const Vocabulary& vocab);

// Samples N responses with streams derived from (seed, query id, group index,
// rollout index), scores each, and normalizes within the group.
RolloutGroup rollout_group(const PolicyParams& policy, const GroundingTask& task,
                           const RLConfig& config, uint64_t group_index,
                           const Vocabulary& vocab = Vocabulary::standard());

// Recomputes rewards and advantages from `rewards` (e.g. after editing them).
void reassign_rewards(RolloutGroup& group, std::vector<double> totals,
                      double epsilon);

// Which parts of the regularized objective to differentiate.
struct ObjectiveTerms {
  bool policy_gradient = true;
  bool kl = true;
};

// (1/N) sum_i A_i sum_t log pi(y_it)
double policy_gradient_objective(const PolicyParams& policy,
                                 const RolloutGroup& group,
                                 const GroundingTask& task);

// (1/N) sum_i sum_t KL(pi(.|ctx_it) || pi_ref(.|ctx_it))
double kl_objective(const PolicyParams& policy, const PolicyParams& reference,
                    const RolloutGroup& group, const GroundingTask& task);

// Gradient of  PG - beta * KL  with respect to every base parameter. Returns
// the mean KL per rollout through `mean_kl` when non-null.
Gradient grpo_gradient(const PolicyParams& policy,
                       const PolicyParams& reference, const RolloutGroup& group,
                       const GroundingTask& task, double beta,
                       ObjectiveTerms terms = {}, double* mean_kl = nullptr);

struct StepStats {
  double mean_reward = 0.0;
  double mean_kl = 0.0;
  double grad_norm = 0.0;
};

// One ascent step on the group. Plain SGD when `optimizer` is null. Throws
// NumericError when the gradient is not finite.
PolicyParams grpo_step(const PolicyParams& current,
                       const PolicyParams& reference, const RolloutGroup& group,
                       const GroundingTask& task, const RLConfig& config,
                       StepStats* stats = nullptr,
                       Optimizer* optimizer = nullptr);

struct SvrEpochLog {
  int epoch = 0;
  double mean_iou_reward = 0.0;
  double format_hit_rate = 0.0;
  double mean_total_reward = 0.0;
  double mean_kl = 0.0;
};

struct SvrResult {
  PolicyParams params;
  std::vector<SvrEpochLog> epochs;
  // Mean total reward of every step, in order.
  std::vector<double> step_rewards;
};

struct SvrOptions {
  // Accept a theta checkpoint (ablation without concept learning).
  bool allow_untrained = false;
  // One JSON object per step is appended here when non-null.
  std::ostream* log = nullptr;
};

// Reference policy is frozen at entry. Throws PhaseGateError when `start`
// does not carry theta_prime (or theta with allow_untrained).
SvrResult svr_train(const PolicyParams& start,
                    const std::vector<GroundingTask>& tasks,
                    const RLConfig& config, const SvrOptions& options = {},
                    const Vocabulary& vocab = Vocabulary::standard());

}  // namespace groundrl

#endif  // GROUNDRL_GRPO_H_
