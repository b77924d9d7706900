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

#ifndef GROUNDRL_REWARDS_H_
#define GROUNDRL_REWARDS_H_

#include <span>
#include <vector>

#include "groundrl/bbox.h"
#include "groundrl/response_parser.h"

namespace groundrl {

// Per-rollout verifiable reward. total == r_iou + r_format exactly.
struct RewardBreakdown {
  double r_iou = 0.0;
  int r_format = 0;
  double total = 0.0;

  friend bool operator==(const RewardBreakdown&,
                         const RewardBreakdown&) = default;
};

// IoU between the parsed answer (clipped to the canvas) and the ground truth;
// 0 when no box parsed or the boxes do not overlap.
double iou_reward(const ParsedResponse& parsed, const BBox& gt,
                  const Canvas& canvas = {});

// 1 iff the response matched the think/answer grammar.
int format_reward(const ParsedResponse& parsed);

RewardBreakdown total_reward(const ParsedResponse& parsed, const BBox& gt,
                             const Canvas& canvas = {});

inline constexpr double kDefaultAdvantageEpsilon = 1e-8;

// Group-relative advantages (r_i - mean) / popstd over one sampled group.
struct GroupAdvantages {
  std::vector<double> rewards;
  std::vector<double> advantages;
  bool degenerate = false;
};

// Rewards are snapped to a 2^-30 fixed-point grid before centering, which
// makes the advantages bit-identical under any shift of all rewards by a
// multiple of 2^-30. |reward| must stay below 2^20.
//
// Throws GroupSizeError when rewards.size() < 2.
GroupAdvantages group_advantages(std::span<const double> rewards,
                                 double epsilon = kDefaultAdvantageEpsilon);

}  // namespace groundrl

#endif  // GROUNDRL_REWARDS_H_
