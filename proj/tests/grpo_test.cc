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

#include <cmath>
#include <sstream>
#include <vector>

#include "gradcheck.h"
#include "groundrl/errors.h"
#include "groundrl/grpo.h"
#include "groundrl/synthworld.h"
#include "gtest/gtest.h"
#include "json.hpp"
#include "world_fixture.h"

namespace groundrl {
namespace {

const Vocabulary& V() { return Vocabulary::standard(); }

GroundingTask task_from_world(size_t i) {
  const auto& w = testing_world::small_world();
  return grounding_tasks(w.data, Split::kTrain, w.config)[i];
}

TEST(ScoreResponseTest, PerfectAndMalformed) {
  const GroundingTask task = task_from_world(0);
  CoTStep step;
  step.finding = {"edema"};
  step.disease = 5;
  const TokenIds perfect = V().encode(render_grounding_response(step, task.gt_box));
  const RewardBreakdown r = score_response(perfect, task, V());
  EXPECT_EQ(r.total, 2.0);
  const TokenIds junk = V().encode({"<think>", "edema"});
  EXPECT_EQ(score_response(junk, task, V()).total, 0.0);
}

TEST(RolloutGroupTest, DeterministicOnPolicyAndWorkerIndependent) {
  const auto& w = testing_world::small_world();
  const GroundingTask task = task_from_world(1);
  RLConfig cfg = w.config.rl;
  const RolloutGroup a = rollout_group(w.theta_prime, task, cfg, 3);
  const RolloutGroup b = rollout_group(w.theta_prime, task, cfg, 3);
  cfg.workers = 4;
  const RolloutGroup c = rollout_group(w.theta_prime, task, cfg, 3);
  ASSERT_EQ(a.rollouts.size(), 8u);
  for (size_t i = 0; i < a.rollouts.size(); ++i) {
    EXPECT_EQ(a.rollouts[i].tokens, b.rollouts[i].tokens);
    EXPECT_EQ(a.rollouts[i].logprobs, b.rollouts[i].logprobs);
    EXPECT_EQ(a.rollouts[i].tokens, c.rollouts[i].tokens);
    EXPECT_EQ(a.rewards[i], c.rewards[i]);
    EXPECT_NEAR(a.rollouts[i].total_logprob(),
                sequence_logprob(w.theta_prime, nullptr, task.obs, task.prompt,
                                 a.rollouts[i].tokens),
                1e-10);
    EXPECT_EQ(a.rewards[i].total, a.rewards[i].r_iou + a.rewards[i].r_format);
  }
  EXPECT_EQ(a.advantages.advantages, c.advantages.advantages);
}

TEST(RolloutGroupTest, ReassignedRewards) {
  const auto& w = testing_world::small_world();
  RLConfig cfg = w.config.rl;
  cfg.group_size = 2;
  RolloutGroup g = rollout_group(w.theta_prime, task_from_world(2), cfg, 0);
  reassign_rewards(g, {0.0, 2.0}, kDefaultAdvantageEpsilon);
  EXPECT_NEAR(g.advantages.advantages[0], -1.0, 1e-12);
  EXPECT_NEAR(g.advantages.advantages[1], 1.0, 1e-12);
  reassign_rewards(g, {2.0, 2.0}, kDefaultAdvantageEpsilon);
  EXPECT_TRUE(g.advantages.degenerate);
}

TEST(GrpoStepTest, DegenerateGroupWithoutKlIsNoOp) {
  const gradcheck::Fixture f = gradcheck::make_fixture(1);
  RolloutGroup g = f.group;
  reassign_rewards(g, std::vector<double>(g.rollouts.size(), 1.5),
                   kDefaultAdvantageEpsilon);
  RLConfig cfg;
  cfg.kl_beta = 0.0;
  EXPECT_EQ(grpo_step(f.policy, f.reference, g, f.task, cfg), f.policy);
}

TEST(GrpoStepTest, PositiveAdvantageRaisesLogprob) {
  gradcheck::Fixture f = gradcheck::make_fixture(2);
  RolloutGroup g = f.group;
  reassign_rewards(g, {2.0, 0.0, 0.0, 0.0}, kDefaultAdvantageEpsilon);
  RLConfig cfg;
  cfg.kl_beta = 0.0;
  cfg.learning_rate = 1e-3;
  auto lp = [&](const PolicyParams& p) {
    return sequence_logprob(p, nullptr, f.task.obs, f.task.prompt,
                            g.rollouts[0].tokens);
  };
  const PolicyParams next = grpo_step(f.policy, f.reference, g, f.task, cfg);
  EXPECT_GT(lp(next), lp(f.policy));
}

TEST(GrpoStepTest, KlGradientVanishesAtReference) {
  const gradcheck::Fixture f = gradcheck::make_fixture(3);
  double mean_kl = -1.0;
  const Gradient g = grpo_gradient(f.policy, f.policy, f.group, f.task, 1.0,
                                   {false, true}, &mean_kl);
  EXPECT_LT(g.norm(), 1e-12);
  EXPECT_NEAR(mean_kl, 0.0, 1e-12);
}

TEST(GrpoStepTest, ShiftedRewardsGiveBitwiseIdenticalUpdate) {
  for (uint64_t seed = 0; seed < 10; ++seed) {
    const gradcheck::Fixture f = gradcheck::make_fixture(100 + seed);
    RolloutGroup a = f.group, b = f.group;
    std::vector<double> r = f.group.advantages.rewards, s = r;
    for (double& x : s) x += 0.75;
    reassign_rewards(a, r, kDefaultAdvantageEpsilon);
    reassign_rewards(b, s, kDefaultAdvantageEpsilon);
    const RLConfig cfg;
    EXPECT_EQ(grpo_step(f.policy, f.reference, a, f.task, cfg),
              grpo_step(f.policy, f.reference, b, f.task, cfg))
        << seed;
  }
}

TEST(GrpoStepTest, NonFiniteGradientThrows) {
  gradcheck::Fixture f = gradcheck::make_fixture(4);
  f.policy.block(Block::kOutBias)[0] = std::nan("");
  EXPECT_THROW(grpo_step(f.policy, f.reference, f.group, f.task, RLConfig{}),
               NumericError);
}

TEST(RLConfigTest, Validation) {
  RLConfig c;
  EXPECT_NO_THROW(validate(c));
  c.group_size = 1;
  EXPECT_THROW(validate(c), ConfigError);
  c = RLConfig{};
  c.kl_beta = -1;
  EXPECT_THROW(validate(c), ConfigError);
  c = RLConfig{};
  c.learning_rate = 0;
  EXPECT_THROW(validate(c), ConfigError);
}

// ---------------------------------------------------------------------------

std::vector<GroundingTask> first_tasks(size_t n) {
  const auto& w = testing_world::small_world();
  auto t = grounding_tasks(w.data, Split::kTrain, w.config);
  t.resize(std::min(n, t.size()));
  return t;
}

TEST(SvrTrainTest, PhaseGate) {
  const auto& w = testing_world::small_world();
  const auto tasks = first_tasks(4);
  EXPECT_THROW(svr_train(w.theta, tasks, w.config.rl), PhaseGateError);
  RLConfig cfg = w.config.rl;
  cfg.epochs = 0;
  SvrOptions opt;
  opt.allow_untrained = true;
  EXPECT_NO_THROW(svr_train(w.theta, tasks, cfg, opt));
}

TEST(SvrTrainTest, ZeroEpochsKeepParameters) {
  const auto& w = testing_world::small_world();
  RLConfig cfg = w.config.rl;
  cfg.epochs = 0;
  const SvrResult r = svr_train(w.theta_prime, first_tasks(4), cfg);
  EXPECT_TRUE(std::equal(r.params.values().begin(), r.params.values().end(),
                         w.theta_prime.values().begin()));
  EXPECT_EQ(r.params.phase(), Phase::kThetaDoublePrime);
}

TEST(SvrTrainTest, DeterministicWithWellFormedLog) {
  const auto& w = testing_world::small_world();
  RLConfig cfg = w.config.rl;
  cfg.epochs = 2;
  const auto tasks = first_tasks(12);
  std::ostringstream log1, log2;
  SvrOptions o1, o2;
  o1.log = &log1;
  o2.log = &log2;
  const SvrResult a = svr_train(w.theta_prime, tasks, cfg, o1);
  const SvrResult b = svr_train(w.theta_prime, tasks, cfg, o2);
  EXPECT_EQ(a.params, b.params);
  EXPECT_EQ(log1.str(), log2.str());
  std::istringstream in(log1.str());
  std::string line;
  size_t steps = 0;
  while (std::getline(in, line)) {
    const auto j = nlohmann::json::parse(line);
    if (j["event"] == "step") {
      ++steps;
      EXPECT_GE(j["kl"].get<double>(), -1e-12);
      EXPECT_EQ(j["rewards"].size(), 8u);
      EXPECT_EQ(j["advantages"].size(), 8u);
      EXPECT_TRUE(j.contains("grad_norm"));
      EXPECT_TRUE(j.contains("query_id"));
    }
  }
  EXPECT_EQ(steps, 24u);
  ASSERT_EQ(a.epochs.size(), 2u);
  for (const auto& e : a.epochs) {
    EXPECT_GE(e.format_hit_rate, 0.0);
    EXPECT_LE(e.format_hit_rate, 1.0);
  }
}

// Plain ascent on beta * KL is stable only while beta * learning_rate stays
// small, so both paired runs use a step that keeps beta = 10 stable.
TEST(SvrTrainTest, StrongKlKeepsPolicyCloser) {
  const auto& w = testing_world::small_world();
  const auto tasks = first_tasks(40);
  RLConfig cfg = w.config.rl;
  cfg.epochs = 2;
  cfg.learning_rate = 0.005;
  const SvrResult weak = svr_train(w.theta_prime, tasks, cfg);
  cfg.kl_beta = 10.0;
  const SvrResult strong = svr_train(w.theta_prime, tasks, cfg);
  EXPECT_LT(strong.epochs.back().mean_kl, weak.epochs.back().mean_kl);
}

}  // namespace
}  // namespace groundrl
