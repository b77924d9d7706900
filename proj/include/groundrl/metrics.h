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

#ifndef GROUNDRL_METRICS_H_
#define GROUNDRL_METRICS_H_

#include <array>
#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "groundrl/knowledge_bank.h"
#include "groundrl/synthworld.h"
#include "groundrl/tokens.h"

namespace groundrl {

// ---------------------------------------------------------------------------
// Text generation metrics. All corpus functions throw Error when the two
// corpora differ in length.

// Corpus BLEU-1..max_n without smoothing. Element n-1 holds BLEU-n.
std::vector<double> bleu(std::span<const Tokens> candidates,
                         std::span<const Tokens> references, int max_n = 4);

size_t lcs_length(std::span<const std::string> a,
                  std::span<const std::string> b);

struct RougeL {
  double f1 = 0.0;
  double precision = 0.0;
  double recall = 0.0;
};

RougeL rouge_l_sentence(std::span<const std::string> candidate,
                        std::span<const std::string> reference);
// Mean of the sentence-level scores.
RougeL rouge_l(std::span<const Tokens> candidates,
               std::span<const Tokens> references);

struct MeteorParams {
  double alpha = 0.9;
  double beta = 3.0;
  double gamma = 0.5;
};

struct Alignment {
  size_t matches = 0;
  size_t chunks = 0;
};

// Exact-match alignment with the most matches, then the fewest chunks.
// The chunk search is exhaustive up to `node_budget` search nodes.
Alignment align_exact(std::span<const std::string> candidate,
                      std::span<const std::string> reference,
                      size_t node_budget = 200000);

double meteor_sentence(std::span<const std::string> candidate,
                       std::span<const std::string> reference,
                       const MeteorParams& params = {});
// Mean of the sentence-level scores.
double meteor_exact(std::span<const Tokens> candidates,
                    std::span<const Tokens> references,
                    const MeteorParams& params = {});

// ---------------------------------------------------------------------------
// Clinical labels

// One flag per disease, in kDiseaseTokens order.
using LabelVector = std::array<bool, kNumDiseases>;

// A disease is positive when one of its phrases occurs in a sentence with no
// preceding "no" in that sentence. No Finding is positive iff nothing else is.
LabelVector extract_labels(std::span<const std::string> report);

LabelVector labels_of(const std::vector<Lesion>& lesions);

struct CategoryMetrics {
  size_t tp = 0, fp = 0, fn = 0, tn = 0;
  double accuracy = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

CategoryMetrics confusion_metrics(size_t tp, size_t fp, size_t fn, size_t tn);

struct ClassificationReport {
  std::array<CategoryMetrics, kNumDiseases> categories;
  double macro_accuracy = 0.0;
  double macro_precision = 0.0;
  double macro_recall = 0.0;
  double macro_f1 = 0.0;
};

ClassificationReport classification_metrics(std::span<const LabelVector> pred,
                                            std::span<const LabelVector> gt);

// ---------------------------------------------------------------------------
// Structured comparison

struct StructuredFinding {
  int disease = 1;
  int region = -1;    // -1 when the sentence names no region
  int severity = -1;  // -1 when the sentence names no severity
};

struct StructuredReport {
  std::vector<StructuredFinding> findings;
  std::vector<Comparison> comparisons;
};

StructuredReport structure_of(const GroundTruthCase& c);
// Reads findings and comparisons back out of report text.
StructuredReport parse_report_structure(std::span<const std::string> report);

struct CriteriaCounts {
  size_t false_finding = 0;
  size_t missing_finding = 0;
  size_t wrong_location = 0;
  size_t wrong_severity = 0;
  size_t spurious_comparison = 0;
  size_t omitted_comparison = 0;
  size_t matched_findings = 0;

  CriteriaCounts& operator+=(const CriteriaCounts& o);
  size_t errors() const;
  friend bool operator==(const CriteriaCounts&, const CriteriaCounts&) = default;
};

// Greedy matching by disease: each reference finding, in order, takes the
// first unmatched candidate finding with the same disease.
CriteriaCounts green_criteria(const StructuredReport& candidate,
                              const StructuredReport& reference);

// ---------------------------------------------------------------------------
// Significance

enum class WilcoxonMethod { kAuto, kExact, kNormal };

struct WilcoxonResult {
  double p_value = 1.0;
  double w_plus = 0.0;  // rank sum of positive differences a - b
  size_t n = 0;         // nonzero differences
  bool exact = false;
};

// One-tailed signed-rank test of the alternative a < b. Throws
// UndefinedTestError when fewer than 5 differences are nonzero, Error on a
// length mismatch.
WilcoxonResult wilcoxon_one_tailed(std::span<const double> a,
                                   std::span<const double> b,
                                   WilcoxonMethod method = WilcoxonMethod::kAuto);

// ---------------------------------------------------------------------------
// Evaluation report

inline constexpr int kEvalReportSchemaVersion = 1;

struct GroundingSummary {
  size_t queries = 0;
  double mean_iou_reward = 0.0;
  double format_hit_rate = 0.0;
  double mean_total_reward = 0.0;
};

struct SignificanceEntry {
  std::string metric;
  std::optional<WilcoxonResult> result;  // empty when the test is undefined
  std::string note;
};

struct EvalReport {
  std::string split;
  size_t cases = 0;
  std::vector<double> bleu;  // BLEU-1..4
  RougeL rouge;
  double meteor = 0.0;
  ClassificationReport classification;
  CriteriaCounts criteria;
  GroundingSummary grounding;
  std::string compared_to;
  std::vector<SignificanceEntry> significance;
};

nlohmann::ordered_json to_json(const EvalReport& report);
std::string to_csv(const EvalReport& report);

}  // namespace groundrl

#endif  // GROUNDRL_METRICS_H_
