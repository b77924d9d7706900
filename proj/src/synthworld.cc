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

#include "groundrl/synthworld.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <string>

#include "groundrl/errors.h"
#include "groundrl/rng.h"

namespace groundrl {
namespace {

constexpr int kBaseSize = 64;

// Region layout on the 64x64 reference canvas, ordered as kRegionTokens.
constexpr std::array<BBox, kNumRegions> kBaseLayout = {{
    {4, 8, 28, 52},    // right lung
    {36, 8, 60, 52},   // left lung
    {4, 8, 60, 52},    // whole lung
    {4, 8, 28, 20},    // right apical zone
    {36, 8, 60, 20},   // left apical zone
    {20, 24, 28, 38},  // right hilar structures
    {36, 24, 44, 38},  // left hilar structures
    {24, 32, 44, 52},  // cardiac silhouette
    {26, 8, 38, 44},   // mediastinum
    {29, 4, 35, 20},   // trachea
    {29, 8, 35, 56},   // spine
    {8, 52, 56, 62},   // abdomen
}};

constexpr double kMinAreaFraction = 0.1;
constexpr double kMaxAreaFraction = 0.6;
constexpr int kPlacementAttempts = 64;
constexpr int kCaseRestarts = 2000;

bool overlaps(const BBox& a, const BBox& b) {
  return a.intersection(b).area() > 0;
}

std::optional<BBox> sample_lesion_box(const BBox& region, Rng& rng) {
  const double s =
      rng.uniform(std::sqrt(kMinAreaFraction), std::sqrt(kMaxAreaFraction));
  const int w = std::max(1, static_cast<int>(std::lround(s * region.width())));
  const int h =
      std::max(1, static_cast<int>(std::lround(s * region.height())));
  const double frac = static_cast<double>(w) * h / region.area();
  if (frac < kMinAreaFraction || frac > kMaxAreaFraction) return std::nullopt;
  const int x1 = static_cast<int>(rng.uniform_int(region.x1, region.x2 - w));
  const int y1 = static_cast<int>(rng.uniform_int(region.y1, region.y2 - h));
  return BBox{x1, y1, x1 + w, y1 + h};
}

std::optional<std::vector<Lesion>> try_place(int count, const RegionMap& map,
                                             Rng& rng) {
  std::vector<Lesion> lesions;
  std::vector<int> free_regions(kNumRegions);
  std::iota(free_regions.begin(), free_regions.end(), 0);
  for (int k = 0; k < count; ++k) {
    bool placed = false;
    for (int attempt = 0; attempt < kPlacementAttempts && !placed; ++attempt) {
      const auto slot = static_cast<size_t>(
          rng.uniform_int(0, static_cast<int64_t>(free_regions.size()) - 1));
      const int region = free_regions[slot];
      auto box = sample_lesion_box(map.box(region), rng);
      if (!box) continue;
      const bool clash = std::any_of(
          lesions.begin(), lesions.end(),
          [&](const Lesion& l) { return overlaps(l.box, *box); });
      if (clash) continue;
      Lesion l;
      l.region = region;
      l.box = *box;
      l.disease = static_cast<int>(rng.uniform_int(1, kNumDiseases - 1));
      l.severity = static_cast<Severity>(rng.uniform_int(0, kNumSeverities - 1));
      l.phrase = static_cast<int>(rng.uniform_int(
          0, static_cast<int64_t>(finding_phrases(l.disease).size()) - 1));
      lesions.push_back(l);
      free_regions.erase(free_regions.begin() + static_cast<long>(slot));
      placed = true;
    }
    if (!placed) return std::nullopt;
  }
  return lesions;
}

void append(Tokens& out, std::initializer_list<std::string_view> words) {
  for (auto w : words) out.emplace_back(w);
}

}  // namespace

RegionMap build_region_map(const Canvas& canvas) {
  if (canvas.height < kBaseSize || canvas.width < kBaseSize) {
    throw DimensionError("canvas must be at least 64x64, got " +
                         std::to_string(canvas.height) + "x" +
                         std::to_string(canvas.width));
  }
  RegionMap map;
  map.canvas = canvas;
  auto sx = [&](int v) { return v * canvas.width / kBaseSize; };
  auto sy = [&](int v) { return v * canvas.height / kBaseSize; };
  for (int r = 0; r < kNumRegions; ++r) {
    const BBox& b = kBaseLayout[r];
    map.boxes[r] = {sx(b.x1), sy(b.y1), sx(b.x2), sy(b.y2)};
  }
  return map;
}

void validate(const WorldConfig& config) {
  build_region_map(config.canvas);
  if (config.min_lesions < 0 || config.max_lesions < config.min_lesions) {
    throw ConfigError("lesion count range must satisfy 0 <= min <= max");
  }
  if (config.max_lesions > kNumRegions) {
    throw ConfigError("at most one lesion per region: max_lesions <= 12, got " +
                      std::to_string(config.max_lesions));
  }
  if (!(config.comparison_probability >= 0.0 &&
        config.comparison_probability <= 1.0)) {
    throw ConfigError("comparison_probability must lie in [0, 1]");
  }
}

int lesion_intensity(int disease, Severity severity) {
  return 160 + 6 * (disease - 1) + 2 * static_cast<int>(severity);
}

GroundTruthCase sample_case(uint64_t seed, const WorldConfig& config) {
  validate(config);
  const RegionMap map = build_region_map(config.canvas);
  Rng rng(derive_seed({seed, 0x5ca1ab1e}));

  GroundTruthCase c;
  c.seed = seed;
  const int count =
      static_cast<int>(rng.uniform_int(config.min_lesions, config.max_lesions));
  std::optional<std::vector<Lesion>> lesions;
  for (int restart = 0; restart < kCaseRestarts && !lesions; ++restart) {
    lesions = try_place(count, map, rng);
  }
  if (!lesions) {
    throw ConfigError("could not place " + std::to_string(count) +
                      " non-overlapping lesions");
  }
  c.lesions = std::move(*lesions);
  std::sort(c.lesions.begin(), c.lesions.end(),
            [](const Lesion& a, const Lesion& b) { return a.region < b.region; });

  c.image.height = config.canvas.height;
  c.image.width = config.canvas.width;
  c.image.pixels.assign(
      static_cast<size_t>(config.canvas.height) * config.canvas.width, 0);
  for (const Lesion& l : c.lesions) {
    const int v = lesion_intensity(l.disease, l.severity);
    for (int y = l.box.y1; y < l.box.y2; ++y) {
      for (int x = l.box.x1; x < l.box.x2; ++x) {
        c.image.pixels[static_cast<size_t>(y) * c.image.width + x] = v;
      }
    }
  }

  std::set<int> compared;
  for (const Lesion& l : c.lesions) {
    const bool emit = rng.bernoulli(config.comparison_probability);
    const Change change = rng.bernoulli(0.5) ? Change::kWorsened
                                             : Change::kImproved;
    if (emit && compared.insert(l.disease).second) {
      c.comparisons.push_back({l.disease, change});
    }
  }

  c.report = render_report(c.lesions, c.comparisons);
  c.cot = decompose_to_cot(c);
  return c;
}

Tokens render_finding_sentence(const Lesion& lesion) {
  Tokens out;
  out.emplace_back(kSeverityTokens[static_cast<int>(lesion.severity)]);
  const auto& phrase = finding_phrases(lesion.disease)[lesion.phrase];
  out.insert(out.end(), phrase.begin(), phrase.end());
  append(out, {"in", "the", kRegionTokens[lesion.region], "."});
  return out;
}

Tokens render_report(const std::vector<Lesion>& lesions,
                     const std::vector<Comparison>& comparisons) {
  Tokens out;
  if (lesions.empty()) {
    out = no_finding_phrase();
    out.emplace_back(".");
  }
  for (const Lesion& l : lesions) {
    Tokens s = render_finding_sentence(l);
    out.insert(out.end(), s.begin(), s.end());
  }
  for (const Comparison& cmp : comparisons) {
    append(out, {kDiseaseTokens[cmp.disease],
                 cmp.change == Change::kImproved ? "improved" : "worsened",
                 "since", "prior", "."});
  }
  return out;
}

namespace {

std::optional<int> phrase_disease(const Tokens& phrase) {
  for (int d = 0; d < kNumDiseases; ++d) {
    for (const auto& p : finding_phrases(d)) {
      if (p == phrase) return d;
    }
  }
  return std::nullopt;
}

}  // namespace

CoTChain decompose_to_cot(const GroundTruthCase& c) {
  CoTChain chain;
  Tokens sentence;
  for (const auto& t : c.report) {
    if (t != ".") {
      sentence.push_back(t);
      continue;
    }
    if (sentence == no_finding_phrase()) {
      chain.steps.push_back({sentence, kNoFinding, kWholeLung});
    } else if (sentence.size() >= 2 && sentence.back() == "prior") {
      // comparison sentence; not a finding
    } else {
      const size_t n = sentence.size();
      if (n < 5 || !severity_from_token(sentence.front()) ||
          sentence[n - 3] != "in" || sentence[n - 2] != "the") {
        throw Error("malformed report sentence: " + join_tokens(sentence));
      }
      Tokens phrase(sentence.begin() + 1, sentence.end() - 3);
      auto disease = phrase_disease(phrase);
      auto region = region_index(sentence.back());
      if (!disease || !region) {
        throw Error("unknown finding in report: " + join_tokens(sentence));
      }
      chain.steps.push_back({std::move(phrase), *disease, *region});
    }
    sentence.clear();
  }
  chain.serialized = serialize_cot(chain.steps);
  return chain;
}

Tokens serialize_cot(const std::vector<CoTStep>& steps) {
  Tokens out;
  for (const CoTStep& s : steps) {
    append(out, {"finding", ":"});
    out.insert(out.end(), s.finding.begin(), s.finding.end());
    append(out, {";", "disease", ":", kDiseaseTokens[s.disease], ";", "region",
                 ":", kRegionTokens[s.region], ";"});
  }
  out.emplace_back(tok::kEos);
  return out;
}

Tokens step_prompt(const CoTStep& step) {
  Tokens p;
  append(p, {tok::kBos, tok::kImage, "locate"});
  p.insert(p.end(), step.finding.begin(), step.finding.end());
  return p;
}

GroundingQuery render_grounding_query(const GroundTruthCase& c,
                                      size_t lesion_index) {
  if (lesion_index >= c.lesions.size()) {
    throw IndexError("lesion index " + std::to_string(lesion_index) +
                     " out of range for case with " +
                     std::to_string(c.lesions.size()) + " lesions");
  }
  const Lesion& l = c.lesions[lesion_index];
  CoTStep step{finding_phrases(l.disease)[l.phrase], l.disease, l.region};
  return {step_prompt(step), l.box};
}

Tokens render_grounding_response(const CoTStep& step, const BBox& box) {
  Tokens out;
  out.emplace_back(tok::kThinkOpen);
  Tokens chain = serialize_cot({step});
  out.insert(out.end(), chain.begin(), chain.end() - 1);  // drop <eos>
  append(out, {tok::kThinkClose, tok::kAnswerOpen, tok::kLBracket});
  const int coords[4] = {box.x1, box.y1, box.x2, box.y2};
  for (int i = 0; i < 4; ++i) {
    if (i) out.emplace_back(tok::kComma);
    out.push_back(std::to_string(coords[i]));
  }
  append(out, {tok::kRBracket, tok::kAnswerClose});
  return out;
}

Tokens report_prompt() {
  Tokens p;
  append(p, {tok::kBos, tok::kImage, "report"});
  return p;
}

}  // namespace groundrl
