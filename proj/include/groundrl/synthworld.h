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

#ifndef GROUNDRL_SYNTHWORLD_H_
#define GROUNDRL_SYNTHWORLD_H_

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "groundrl/bbox.h"
#include "groundrl/knowledge_bank.h"
#include "groundrl/tokens.h"

namespace groundrl {

// Twelve anatomical region boxes for one canvas, indexed as kRegionTokens.
struct RegionMap {
  Canvas canvas;
  std::array<BBox, kNumRegions> boxes;

  const BBox& box(int region) const { return boxes.at(region); }
};

// Fixed layout at 64x64, scaled by floor(coord * size / 64) otherwise.
// Throws DimensionError below 64x64.
RegionMap build_region_map(const Canvas& canvas);

// Row-major intensity grid; 0 is background.
struct SynthImage {
  int height = 0;
  int width = 0;
  std::vector<int> pixels;

  int at(int x, int y) const { return pixels[static_cast<size_t>(y) * width + x]; }
  friend bool operator==(const SynthImage&, const SynthImage&) = default;
};

struct Lesion {
  int disease = 1;  // never kNoFinding
  int region = 0;
  Severity severity = Severity::kMild;
  // Index into finding_phrases(disease) used when rendering the report.
  int phrase = 0;
  BBox box;

  friend bool operator==(const Lesion&, const Lesion&) = default;
};

enum class Change { kImproved, kWorsened };

struct Comparison {
  int disease = 1;
  Change change = Change::kImproved;

  friend bool operator==(const Comparison&, const Comparison&) = default;
};

struct CoTStep {
  Tokens finding;
  int disease = kNoFinding;
  int region = kWholeLung;

  friend bool operator==(const CoTStep&, const CoTStep&) = default;
};

// Findings -> Disease -> Anatomy chain, one step per report finding.
struct CoTChain {
  std::vector<CoTStep> steps;
  // "finding : <phrase> ; disease : <label> ; region : <name> ;" per step,
  // then <eos>.
  Tokens serialized;

  friend bool operator==(const CoTChain&, const CoTChain&) = default;
};

struct GroundTruthCase {
  uint64_t seed = 0;
  SynthImage image;
  // Sorted by region index; this is also the report order.
  std::vector<Lesion> lesions;
  Tokens report;
  CoTChain cot;
  std::vector<Comparison> comparisons;

  friend bool operator==(const GroundTruthCase&,
                         const GroundTruthCase&) = default;
};

struct WorldConfig {
  Canvas canvas;
  int min_lesions = 0;
  int max_lesions = 2;
  double comparison_probability = 0.25;
};

// Throws ConfigError / DimensionError on an infeasible config.
void validate(const WorldConfig& config);

// Version of the chain-of-thought serialization template.
inline constexpr int kCotTemplateVersion = 1;

// Intensity of a lesion pixel; encodes disease and severity.
int lesion_intensity(int disease, Severity severity);

GroundTruthCase sample_case(uint64_t seed, const WorldConfig& config = {});

// "<severity> <phrase> in the <region> ."
Tokens render_finding_sentence(const Lesion& lesion);
// Full report: one sentence per lesion (or the normal-study sentence), then
// one "<disease> improved|worsened since prior ." per comparison.
Tokens render_report(const std::vector<Lesion>& lesions,
                     const std::vector<Comparison>& comparisons);

// Re-parses the templated report into one step per finding, in report order.
CoTChain decompose_to_cot(const GroundTruthCase& c);

Tokens serialize_cot(const std::vector<CoTStep>& steps);

struct GroundingQuery {
  Tokens prompt;
  BBox gt_box;
};

// "<bos> <image> locate <phrase>" with the lesion's box as target.
// Throws IndexError when lesion_index is out of range.
GroundingQuery render_grounding_query(const GroundTruthCase& c,
                                      size_t lesion_index);

// Prompt for one chain-of-thought step (same shape as a grounding query).
Tokens step_prompt(const CoTStep& step);

// "<think> finding : ... ; </think> <answer> [ x1 , y1 , x2 , y2 ] </answer>"
Tokens render_grounding_response(const CoTStep& step, const BBox& box);

// "<bos> <image> report"
Tokens report_prompt();

}  // namespace groundrl

#endif  // GROUNDRL_SYNTHWORLD_H_
