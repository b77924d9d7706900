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

#include "groundrl/rewards.h"

#include <cmath>
#include <cstdint>
#include <string>

#include "groundrl/errors.h"

namespace groundrl {
namespace {

constexpr double kFixedScale = 0x1.0p30;
constexpr double kMaxAbsReward = 0x1.0p20;

}  // namespace

double iou_reward(const ParsedResponse& parsed, const BBox& gt,
                  const Canvas& canvas) {
  if (!parsed.answer_box) return 0.0;
  const double v = iou(parsed.answer_box->clipped(canvas), gt);
  return v > 0.0 ? v : 0.0;
}

int format_reward(const ParsedResponse& parsed) {
  return parsed.format_ok ? 1 : 0;
}

RewardBreakdown total_reward(const ParsedResponse& parsed, const BBox& gt,
                             const Canvas& canvas) {
  RewardBreakdown r;
  r.r_iou = iou_reward(parsed, gt, canvas);
  r.r_format = format_reward(parsed);
  r.total = r.r_iou + static_cast<double>(r.r_format);
  return r;
}

GroupAdvantages group_advantages(std::span<const double> rewards,
                                 double epsilon) {
  const size_t n = rewards.size();
  if (n < 2) {
    throw GroupSizeError("group_advantages needs at least 2 rewards, got " +
                         std::to_string(n));
  }
  GroupAdvantages out;
  out.rewards.assign(rewards.begin(), rewards.end());
  out.advantages.assign(n, 0.0);

  std::vector<int64_t> q(n);
  int64_t sum = 0;
  for (size_t i = 0; i < n; ++i) {
    if (!std::isfinite(rewards[i]) || std::fabs(rewards[i]) >= kMaxAbsReward) {
      throw Error("group_advantages: reward out of range: " +
                  std::to_string(rewards[i]));
    }
    q[i] = std::llround(rewards[i] * kFixedScale);
    sum += q[i];
  }
  // dev_i = n * (q_i - mean(q)) is an exact integer and shift invariant.
  const auto nn = static_cast<int64_t>(n);
  std::vector<double> dev(n);
  double sq = 0.0;
  for (size_t i = 0; i < n; ++i) {
    dev[i] = static_cast<double>(nn * q[i] - sum);
    sq += dev[i] * dev[i];
  }
  const double dev_rms = std::sqrt(sq / static_cast<double>(n));
  const double std_reward = dev_rms / static_cast<double>(n) / kFixedScale;
  if (!(std_reward >= epsilon)) {
    out.degenerate = true;
    return out;
  }
  for (size_t i = 0; i < n; ++i) out.advantages[i] = dev[i] / dev_rms;
  return out;
}

}  // namespace groundrl
