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

#include "groundrl/grpo.h"

#include <algorithm>
#include <cmath>
#include <future>
#include <numeric>

#include "groundrl/checkpoint.h"
#include "groundrl/errors.h"
#include "json.hpp"

namespace groundrl {
namespace {

void log_softmax_inplace(std::vector<double>& z) {
  const double m = *std::max_element(z.begin(), z.end());
  double s = 0.0;
  for (double v : z) s += std::exp(v - m);
  const double lse = m + std::log(s);
  for (double& v : z) v -= lse;
}

// Calls fn(ctx, y) for every response position of every rollout.
template <typename Fn>
void for_each_position(const PolicyParams& policy, const RolloutGroup& group,
                       const GroundingTask& task, Fn&& fn) {
  const int K = policy.config().context;
  const TokenId pad = Vocabulary::standard().pad();
  for (size_t i = 0; i < group.rollouts.size(); ++i) {
    const Rollout& r = group.rollouts[i];
    TokenIds seq = task.prompt;
    seq.insert(seq.end(), r.tokens.begin(), r.tokens.end());
    for (size_t t = 0; t < r.tokens.size(); ++t) {
      const TokenIds ctx =
          context_window(seq, task.prompt.size() + t, K, pad);
      fn(i, std::span<const TokenId>(ctx), r.tokens[t]);
    }
  }
}

}  // namespace

void validate(const RLConfig& c) {
  if (c.group_size < 2) throw ConfigError("group_size must be >= 2");
  if (!(c.kl_beta >= 0.0) || !std::isfinite(c.kl_beta)) {
    throw ConfigError("kl_beta must be finite and >= 0");
  }
  if (!(c.learning_rate > 0.0) || !std::isfinite(c.learning_rate)) {
    throw ConfigError("learning_rate must be > 0");
  }
  if (c.epochs < 0) throw ConfigError("epochs must be >= 0");
  if (c.max_response_len < 1) throw ConfigError("max_response_len must be >= 1");
  if (!(c.advantage_epsilon > 0.0)) {
    throw ConfigError("advantage_epsilon must be > 0");
  }
  if (!(c.temperature > 0.0)) throw ConfigError("temperature must be > 0");
  if (c.workers < 1) throw ConfigError("workers must be >= 1");
}

RewardBreakdown score_response(std::span<const TokenId> body,
                               const GroundingTask& task,
                               const Vocabulary& vocab) {
  const Tokens text = vocab.decode(body);
  return total_reward(parse_response(text), task.gt_box, task.canvas);
}

void reassign_rewards(RolloutGroup& group, std::vector<double> totals,
                      double epsilon) {
  group.advantages = group_advantages(totals, epsilon);
  group.mean_reward =
      std::accumulate(totals.begin(), totals.end(), 0.0) / totals.size();
  group.max_reward = *std::max_element(totals.begin(), totals.end());
}

RolloutGroup rollout_group(const PolicyParams& policy, const GroundingTask& task,
                           const RLConfig& config, uint64_t group_index,
                           const Vocabulary& vocab) {
  validate(config);
  const int n = config.group_size;
  RolloutGroup g;
  g.query_id = task.query_id;
  g.rollouts.resize(n);
  g.rewards.resize(n);
  SamplingOptions opts;
  opts.max_len = config.max_response_len;
  opts.temperature = config.temperature;

  auto run = [&](int i) {
    Rng rng(derive_seed({config.seed, task.query_id, group_index,
                         static_cast<uint64_t>(i)}));
    g.rollouts[i] =
        sample_sequence(policy, nullptr, task.obs, task.prompt, opts, rng);
    g.rewards[i] = score_response(g.rollouts[i].body(), task, vocab);
  };
  const int workers = std::min(config.workers, n);
  if (workers <= 1) {
    for (int i = 0; i < n; ++i) run(i);
  } else {
    std::vector<std::future<void>> jobs;
    for (int w = 0; w < workers; ++w) {
      jobs.push_back(std::async(std::launch::async, [&, w] {
        for (int i = w; i < n; i += workers) run(i);
      }));
    }
    for (auto& j : jobs) j.get();
  }
  std::vector<double> totals(n);
  for (int i = 0; i < n; ++i) totals[i] = g.rewards[i].total;
  reassign_rewards(g, std::move(totals), config.advantage_epsilon);
  return g;
}

double policy_gradient_objective(const PolicyParams& policy,
                                 const RolloutGroup& group,
                                 const GroundingTask& task) {
  const double n = static_cast<double>(group.rollouts.size());
  double j = 0.0;
  for (size_t i = 0; i < group.rollouts.size(); ++i) {
    const double a = group.advantages.advantages[i];
    if (a == 0.0) continue;
    j += a * sequence_logprob(policy, nullptr, task.obs, task.prompt,
                              group.rollouts[i].tokens);
  }
  return j / n;
}

double kl_objective(const PolicyParams& policy, const PolicyParams& reference,
                    const RolloutGroup& group, const GroundingTask& task) {
  const double n = static_cast<double>(group.rollouts.size());
  double j = 0.0;
  for (const Rollout& r : group.rollouts) {
    j += sequence_kl(policy, reference, task.obs, task.prompt, r.tokens);
  }
  return j / n;
}

Gradient grpo_gradient(const PolicyParams& policy,
                       const PolicyParams& reference, const RolloutGroup& group,
                       const GroundingTask& task, double beta,
                       ObjectiveTerms terms, double* mean_kl) {
  if (group.advantages.advantages.size() != group.rollouts.size()) {
    throw Error("rollout group has mismatched advantages");
  }
  Gradient grad = Gradient::zeros_like(policy, nullptr);
  const double inv_n = 1.0 / static_cast<double>(group.rollouts.size());
  const size_t V = static_cast<size_t>(policy.config().vocab_size);
  const TrainableMask mask = TrainableMask::base_only();
  const bool need_kl = terms.kl && (beta != 0.0 || mean_kl != nullptr);
  std::vector<double> dz(V);
  double kl_sum = 0.0;

  for_each_position(policy, group, task, [&](size_t i,
                                             std::span<const TokenId> ctx,
                                             TokenId y) {
    const double a = terms.policy_gradient ? group.advantages.advantages[i] : 0.0;
    if (a == 0.0 && !need_kl) return;
    auto lp = next_token_logits(policy, nullptr, task.obs, ctx);
    log_softmax_inplace(lp);
    std::fill(dz.begin(), dz.end(), 0.0);
    if (a != 0.0) {
      // d log p_y / dz_k = [k == y] - p_k
      for (size_t k = 0; k < V; ++k) dz[k] = -a * inv_n * std::exp(lp[k]);
      dz[static_cast<size_t>(y)] += a * inv_n;
    }
    if (need_kl) {
      auto lq = next_token_logits(reference, nullptr, task.obs, ctx);
      log_softmax_inplace(lq);
      double kl = 0.0;
      for (size_t k = 0; k < V; ++k) kl += std::exp(lp[k]) * (lp[k] - lq[k]);
      kl_sum += kl;
      if (terms.kl && beta != 0.0) {
        // d KL / dz_k = p_k (log p_k - log q_k - KL)
        const double c = -beta * inv_n;
        for (size_t k = 0; k < V; ++k) {
          dz[k] += c * std::exp(lp[k]) * (lp[k] - lq[k] - kl);
        }
      }
    }
    accumulate_position_gradient(policy, nullptr, task.obs, ctx, dz, mask,
                                 grad);
  });
  if (mean_kl != nullptr) *mean_kl = kl_sum * inv_n;
  return grad;
}

PolicyParams grpo_step(const PolicyParams& current,
                       const PolicyParams& reference, const RolloutGroup& group,
                       const GroundingTask& task, const RLConfig& config,
                       StepStats* stats, Optimizer* optimizer) {
  double mean_kl = 0.0;
  const Gradient grad = grpo_gradient(current, reference, group, task,
                                      config.kl_beta, {}, &mean_kl);
  if (!grad.all_finite()) {
    throw NumericError("non-finite gradient at query " +
                       std::to_string(group.query_id) + " (policy version " +
                       hex64(current.content_hash()) + ")");
  }
  PolicyParams next = current;
  auto values = next.values();
  if (optimizer == nullptr) {
    for (size_t k = 0; k < values.size(); ++k) {
      values[k] += config.learning_rate * grad.base[k];
    }
  } else {
    std::vector<double> neg(grad.base.size());
    for (size_t k = 0; k < neg.size(); ++k) neg[k] = -grad.base[k];
    const ParamRange all{0, values.size()};
    optimizer->descend(values, neg, config.learning_rate, {&all, 1});
  }
  if (stats != nullptr) {
    stats->mean_reward = group.mean_reward;
    stats->mean_kl = mean_kl;
    stats->grad_norm = grad.norm();
  }
  return next;
}

namespace {

nlohmann::ordered_json step_record(size_t step, int epoch,
                                   const RolloutGroup& g,
                                   const StepStats& s) {
  nlohmann::ordered_json j;
  j["event"] = "step";
  j["step"] = step;
  j["epoch"] = epoch;
  j["query_id"] = g.query_id;
  auto rewards = nlohmann::ordered_json::array();
  for (const auto& r : g.rewards) {
    rewards.push_back({{"iou", r.r_iou}, {"format", r.r_format},
                       {"total", r.total}});
  }
  j["rewards"] = std::move(rewards);
  j["advantages"] = g.advantages.advantages;
  j["degenerate"] = g.advantages.degenerate;
  j["mean_reward"] = s.mean_reward;
  j["kl"] = s.mean_kl;
  j["grad_norm"] = s.grad_norm;
  return j;
}

}  // namespace

SvrResult svr_train(const PolicyParams& start,
                    const std::vector<GroundingTask>& tasks,
                    const RLConfig& config, const SvrOptions& options,
                    const Vocabulary& vocab) {
  validate(config);
  if (options.allow_untrained) {
    require_phase(start, {Phase::kTheta, Phase::kThetaPrime}, "svr_train");
  } else {
    require_phase(start, {Phase::kThetaPrime}, "svr_train");
  }
  if (config.epochs > 0 && tasks.empty()) {
    throw ConfigError("svr_train: no grounding queries");
  }
  const PolicyParams reference = start;
  SvrResult out;
  out.params = start;
  std::optional<Optimizer> adam;
  if (config.optimizer == OptimizerKind::kAdamW) {
    adam.emplace(OptimizerKind::kAdamW, start.values().size());
  }

  size_t step = 0;
  std::vector<size_t> order(tasks.size());
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), size_t{0});
    Rng shuffle(derive_seed({config.seed, 0x5e9u, static_cast<uint64_t>(epoch)}));
    for (size_t i = order.size(); i > 1; --i) {
      std::swap(order[i - 1], order[static_cast<size_t>(shuffle.uniform_int(0, static_cast<int64_t>(i) - 1))]);
    }
    SvrEpochLog e;
    e.epoch = epoch;
    size_t samples = 0;
    for (size_t qi : order) {
      const GroundingTask& task = tasks[qi];
      const RolloutGroup group =
          rollout_group(out.params, task, config, step, vocab);
      StepStats stats;
      out.params = grpo_step(out.params, reference, group, task, config,
                             &stats, adam ? &*adam : nullptr);
      for (const auto& r : group.rewards) {
        e.mean_iou_reward += r.r_iou;
        e.format_hit_rate += r.r_format;
        e.mean_total_reward += r.total;
      }
      samples += group.rewards.size();
      e.mean_kl += stats.mean_kl;
      out.step_rewards.push_back(group.mean_reward);
      if (options.log != nullptr) {
        *options.log << step_record(step, epoch, group, stats).dump() << '\n';
      }
      ++step;
    }
    e.mean_iou_reward /= samples;
    e.format_hit_rate /= samples;
    e.mean_total_reward /= samples;
    e.mean_kl /= order.size();
    out.epochs.push_back(e);
    if (options.log != nullptr) {
      nlohmann::ordered_json j;
      j["event"] = "epoch";
      j["epoch"] = epoch;
      j["mean_iou_reward"] = e.mean_iou_reward;
      j["format_hit_rate"] = e.format_hit_rate;
      j["mean_total_reward"] = e.mean_total_reward;
      j["mean_kl"] = e.mean_kl;
      *options.log << j.dump() << '\n';
    }
  }
  out.params.set_phase(Phase::kThetaDoublePrime);
  return out;
}

}  // namespace groundrl
