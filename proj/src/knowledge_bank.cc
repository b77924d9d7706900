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

#include "groundrl/knowledge_bank.h"

#include <cassert>

namespace groundrl {
namespace {

using Phrase = std::vector<std::string>;

const std::array<std::vector<Phrase>, kNumDiseases>& phrase_table() {
  static const std::array<std::vector<Phrase>, kNumDiseases> table = {{
      {{"no", "acute", "findings"}},
      {{"enlarged_cardiomediastinum"}, {"widened", "mediastinal", "contour"}},
      {{"cardiomegaly"}, {"enlarged", "heart", "size"}},
      {{"lung_lesion"}, {"pulmonary", "nodule"}},
      {{"lung_opacity"}, {"patchy", "opacity"}},
      {{"edema"}, {"vascular", "congestion"}},
      {{"consolidation"}, {"airspace", "consolidation"}},
      {{"pneumonia"}, {"infectious", "process"}},
      {{"lungs", "are", "low", "in", "volume"},
       {"atelectasis"},
       {"volume", "loss"}},
      {{"pneumothorax"}, {"pleural", "air"}},
      {{"pleural_effusion"}, {"blunted", "costophrenic", "angle"}},
      {{"pleural_other"}, {"pleural", "thickening"}},
      {{"fracture"}, {"rib", "fracture"}},
      {{"support_devices"}, {"catheter", "tip"}},
  }};
  return table;
}

constexpr std::string_view kTemplateWords[] = {
    // prompts
    "locate", "report",
    // chain-of-thought template
    "finding", "disease", "region", ":", ";",
    // report template
    "in", "the", ".", "improved", "worsened", "since", "prior",
    // phrase words
    "no", "acute", "findings", "widened", "mediastinal", "contour", "enlarged",
    "heart", "size", "pulmonary", "nodule", "patchy", "opacity", "vascular",
    "congestion", "airspace", "infectious", "process", "lungs", "are", "low",
    "volume", "loss", "pleural", "air", "blunted", "costophrenic", "angle",
    "thickening", "rib", "catheter", "tip"};

}  // namespace

std::span<const std::vector<std::string>> finding_phrases(int disease) {
  assert(disease >= 0 && disease < kNumDiseases);
  return phrase_table()[disease];
}

const std::vector<std::string>& no_finding_phrase() {
  return phrase_table()[kNoFinding].front();
}

std::optional<int> disease_index(std::string_view token) {
  for (int i = 0; i < kNumDiseases; ++i) {
    if (kDiseaseTokens[i] == token) return i;
  }
  return std::nullopt;
}

std::optional<int> region_index(std::string_view token) {
  for (int i = 0; i < kNumRegions; ++i) {
    if (kRegionTokens[i] == token) return i;
  }
  return std::nullopt;
}

std::optional<Severity> severity_from_token(std::string_view token) {
  for (int i = 0; i < kNumSeverities; ++i) {
    if (kSeverityTokens[i] == token) return static_cast<Severity>(i);
  }
  return std::nullopt;
}

std::span<const std::string_view> template_words() { return kTemplateWords; }

}  // namespace groundrl
