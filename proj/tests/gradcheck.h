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

// Central finite-difference checks of the analytic gradients. Shared by the
// unit tests and the acceptance runner.

#ifndef GROUNDRL_TESTS_GRADCHECK_H_
#define GROUNDRL_TESTS_GRADCHECK_H_

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "groundrl/grpo.h"
#include "groundrl/policy.h"
#include "groundrl/rng.h"
#include "groundrl/vocabulary.h"
#include "oracles.h"

namespace groundrl::gradcheck {

inline constexpr double kStep = 1e-5;
// Coordinates per parameter block: this many chosen at random plus this many
// with the largest analytic magnitude.
inline constexpr int kPerBlock = 12;

struct Fixture {
  PolicyConfig config;
  PolicyParams policy;
  PolicyParams reference;
  AdapterParams adapter;
  Observation obs;
  GroundingTask task;
  RolloutGroup group;
  std::vector<SequenceExample> batch;
};

inline Observation random_obs(Rng& rng) {
  Observation o;
  for (double& v : o.v) v = rng.uniform();
  return o;
}

inline TokenIds random_tokens(Rng& rng, int len, const Vocabulary& vocab) {
  TokenIds t;
  for (int i = 0; i < len; ++i) {
    t.push_back(static_cast<TokenId>(rng.uniform_int(3, vocab.size() - 1)));
  }
  return t;
}

inline Fixture make_fixture(uint64_t seed) {
  const Vocabulary& vocab = Vocabulary::standard();
  Rng rng(derive_seed({seed, 0x9c}));
  Fixture f;
  f.config = default_policy_config(vocab);
  f.policy = PolicyParams::init_uniform(f.config, derive_seed({seed, 1}), 0.3);
  f.reference = PolicyParams::init_uniform(f.config, derive_seed({seed, 2}), 0.3);
  f.adapter = AdapterParams::init(f.config, kAdapterRank, derive_seed({seed, 3}),
                                  0.3);
  for (double& w : f.adapter.w()) w = rng.uniform(-0.3, 0.3);
  f.obs = random_obs(rng);

  for (int i = 0; i < 3; ++i) {
    SequenceExample ex;
    ex.obs = &f.obs;
    ex.prompt = random_tokens(rng, 3, vocab);
    ex.target = random_tokens(rng, 6, vocab);
    ex.target.push_back(vocab.eos());
    f.batch.push_back(ex);
  }

  f.task.query_id = seed;
  f.task.obs = f.obs;
  f.task.prompt = random_tokens(rng, 4, vocab);
  f.task.gt_box = {10, 10, 30, 30};
  RLConfig rl;
  rl.group_size = 4;
  rl.max_response_len = 8;
  rl.seed = seed;
  f.group = rollout_group(f.policy, f.task, rl, 0, vocab);
  std::vector<double> totals(4);
  for (double& t : totals) t = rng.uniform(0.0, 2.0);
  reassign_rewards(f.group, totals, kDefaultAdvantageEpsilon);
  return f;
}

// Indices to probe within [first, first + n).
inline std::vector<size_t> probe_indices(std::span<const double> analytic,
                                         size_t first, size_t n, Rng& rng) {
  std::vector<size_t> idx(n);
  std::iota(idx.begin(), idx.end(), first);
  std::partial_sort(idx.begin(),
                    idx.begin() + std::min<size_t>(kPerBlock, n), idx.end(),
                    [&](size_t a, size_t b) {
                      return std::fabs(analytic[a]) > std::fabs(analytic[b]);
                    });
  std::vector<size_t> out(idx.begin(), idx.begin() + std::min<size_t>(kPerBlock, n));
  for (int k = 0; k < kPerBlock; ++k) {
    out.push_back(first + rng.uniform_int(0, n - 1));
  }
  return out;
}

// Max relative error between `analytic` and the central difference of `f`
// over probe coordinates of every block of `values`.
template <typename F>
double max_error(std::span<double> values, std::span<const double> analytic,
                 const std::vector<std::pair<size_t, size_t>>& blocks, F&& f,
                 Rng& rng) {
  double worst = 0.0;
  for (auto [first, n] : blocks) {
    for (size_t k : probe_indices(analytic, first, n, rng)) {
      const double fd = oracle::central_difference(f, values[k], kStep);
      worst = std::max(worst, oracle::relative_error(analytic[k], fd));
    }
  }
  return worst;
}

inline std::vector<std::pair<size_t, size_t>> base_blocks(const PolicyParams& p) {
  std::vector<std::pair<size_t, size_t>> b;
  for (int i = 0; i < kNumBlocks; ++i) {
    const Block blk = static_cast<Block>(i);
    b.emplace_back(p.block_offset(blk), p.block_size(blk));
  }
  return b;
}

// Supervised loss, with respect to base and adapter parameters.
inline double sft_error(uint64_t seed) {
  Fixture f = make_fixture(seed);
  Rng rng(derive_seed({seed, 0xfd}));
  TrainableMask mask;
  mask.adapter = true;
  const LossAndGradient lg = sft_loss_and_grad(f.policy, &f.adapter, f.batch, mask);
  auto loss = [&] { return sft_loss(f.policy, &f.adapter, f.batch); };
  const double base = max_error(f.policy.values(), lg.grad.base,
                                base_blocks(f.policy), loss, rng);
  const size_t nu = f.adapter.u().size(), nw = f.adapter.w().size();
  const double adapter = max_error(f.adapter.values(), lg.grad.adapter,
                                   {{0, nu}, {nu, nw}}, loss, rng);
  return std::max(base, adapter);
}

// Advantage-weighted log-likelihood term of the group objective.
inline double policy_gradient_error(uint64_t seed) {
  Fixture f = make_fixture(seed);
  Rng rng(derive_seed({seed, 0xfe}));
  const Gradient g = grpo_gradient(f.policy, f.reference, f.group, f.task, 0.0,
                                   {true, false});
  auto obj = [&] { return policy_gradient_objective(f.policy, f.group, f.task); };
  return max_error(f.policy.values(), g.base, base_blocks(f.policy), obj, rng);
}

// KL penalty term; the gradient of -beta * KL with beta = 1.
inline double kl_error(uint64_t seed) {
  Fixture f = make_fixture(seed);
  Rng rng(derive_seed({seed, 0xff}));
  const Gradient g = grpo_gradient(f.policy, f.reference, f.group, f.task, 1.0,
                                   {false, true});
  auto obj = [&] {
    return -kl_objective(f.policy, f.reference, f.group, f.task);
  };
  return max_error(f.policy.values(), g.base, base_blocks(f.policy), obj, rng);
}

}  // namespace groundrl::gradcheck

#endif  // GROUNDRL_TESTS_GRADCHECK_H_
