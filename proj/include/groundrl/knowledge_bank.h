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

#ifndef GROUNDRL_KNOWLEDGE_BANK_H_
#define GROUNDRL_KNOWLEDGE_BANK_H_

#include <array>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace groundrl {

// Disease labels in the fixed reporting order (No Finding first, Support
// Devices last). Index 0 is the normal-study label.
inline constexpr int kNumDiseases = 14;
inline constexpr std::array<std::string_view, kNumDiseases> kDiseaseTokens = {
    "no_finding",      "enlarged_cardiomediastinum",
    "cardiomegaly",    "lung_lesion",
    "lung_opacity",    "edema",
    "consolidation",   "pneumonia",
    "atelectasis",     "pneumothorax",
    "pleural_effusion", "pleural_other",
    "fracture",        "support_devices"};
inline constexpr std::array<std::string_view, kNumDiseases> kDiseaseNames = {
    "No Finding",      "Enlarged Cardiomediastinum",
    "Cardiomegaly",    "Lung Lesion",
    "Lung Opacity",    "Edema",
    "Consolidation",   "Pneumonia",
    "Atelectasis",     "Pneumothorax",
    "Pleural Effusion", "Pleural Other",
    "Fracture",        "Support Devices"};
inline constexpr int kNoFinding = 0;

inline constexpr int kNumRegions = 12;
inline constexpr std::array<std::string_view, kNumRegions> kRegionTokens = {
    "right_lung",
    "left_lung",
    "whole_lung",
    "right_apical_zone",
    "left_apical_zone",
    "right_hilar_structures",
    "left_hilar_structures",
    "cardiac_silhouette",
    "mediastinum",
    "trachea",
    "spine",
    "abdomen"};
inline constexpr int kWholeLung = 2;

enum class Severity { kMild = 0, kModerate = 1, kSevere = 2 };
inline constexpr int kNumSeverities = 3;
inline constexpr std::array<std::string_view, kNumSeverities> kSeverityTokens =
    {"mild", "moderate", "severe"};

// Finding phrases (as token lists) for each disease. Every non-normal disease
// has its bare label token as one of its phrases. Phrases are unique across
// diseases.
std::span<const std::vector<std::string>> finding_phrases(int disease);

// The one phrase of the normal study.
const std::vector<std::string>& no_finding_phrase();

std::optional<int> disease_index(std::string_view token);
std::optional<int> region_index(std::string_view token);
std::optional<Severity> severity_from_token(std::string_view token);

// Words that appear only inside finding phrases, report templates or prompts.
std::span<const std::string_view> template_words();

}  // namespace groundrl

#endif  // GROUNDRL_KNOWLEDGE_BANK_H_
