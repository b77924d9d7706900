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

#include <algorithm>
#include <cmath>
#include <set>
#include <string>
#include <vector>

#include "groundrl/errors.h"
#include "groundrl/metrics.h"
#include "groundrl/rng.h"
#include "groundrl/synthworld.h"
#include "groundrl/tokens.h"
#include "gtest/gtest.h"
#include "oracles.h"

namespace groundrl {
namespace {

Tokens T(std::string_view s) { return split_tokens(s); }

std::vector<std::string> random_words(Rng& rng, size_t max_len, int alphabet) {
  std::vector<std::string> out(rng.uniform_int(0, max_len));
  for (auto& w : out) w = std::string(1, static_cast<char>('a' + rng.uniform_int(0, alphabet - 1)));
  return out;
}

// ---------------------------------------------------------------------------
// BLEU

TEST(BleuTest, HandCountedExample) {
  const std::vector<Tokens> c = {T("a b x d")}, r = {T("a b c d")};
  const auto b = bleu(c, r);
  EXPECT_NEAR(b[0], 0.75, 1e-12);
  EXPECT_NEAR(b[1], 0.5, 1e-12);
  EXPECT_EQ(b[2], 0.0);  // no trigram matches, no smoothing
}

TEST(BleuTest, IdenticalAndDisjoint) {
  const std::vector<Tokens> r = {T("mild edema in the right_lung ."),
                                 T("no acute findings .")};
  for (double v : bleu(r, r)) EXPECT_NEAR(v, 1.0, 1e-12);
  const std::vector<Tokens> c = {T("x y z"), T("q")};
  EXPECT_EQ(bleu(c, r)[0], 0.0);
}

TEST(BleuTest, BrevityPenalty) {
  const std::vector<Tokens> c = {T("a b")}, r = {T("a b c d")};
  EXPECT_NEAR(bleu(c, r, 1)[0], std::exp(1.0 - 4.0 / 2.0), 1e-12);
}

TEST(BleuTest, PairOrderInvariantAndBounded) {
  Rng rng(8);
  std::vector<Tokens> c, r;
  for (int i = 0; i < 30; ++i) {
    c.push_back(random_words(rng, 8, 4));
    r.push_back(random_words(rng, 8, 4));
  }
  const auto before = bleu(c, r);
  std::vector<size_t> perm(c.size());
  for (size_t i = 0; i < perm.size(); ++i) perm[i] = (i * 7) % perm.size();
  std::vector<Tokens> c2, r2;
  for (size_t i : perm) {
    c2.push_back(c[i]);
    r2.push_back(r[i]);
  }
  const auto after = bleu(c2, r2);
  for (size_t n = 0; n < 4; ++n) {
    EXPECT_NEAR(before[n], after[n], 1e-12);
    EXPECT_GE(before[n], 0.0);
    EXPECT_LE(before[n], 1.0);
  }
}

TEST(BleuTest, LengthMismatchThrows) {
  const std::vector<Tokens> c = {T("a")}, r = {T("a"), T("b")};
  EXPECT_THROW(bleu(c, r), Error);
  EXPECT_THROW(rouge_l(c, r), Error);
  EXPECT_THROW(meteor_exact(c, r), Error);
}

// ---------------------------------------------------------------------------
// ROUGE-L

TEST(RougeTest, Examples) {
  EXPECT_EQ(lcs_length(T("a b c d"), T("a c b d")), 3u);
  EXPECT_NEAR(rouge_l_sentence(T("a b c"), T("a b c")).f1, 1.0, 1e-15);
  EXPECT_EQ(rouge_l_sentence(T("a b"), T("c d")).f1, 0.0);
  const RougeL r = rouge_l_sentence(T("a b c d"), T("a c b d e"));
  EXPECT_NEAR(r.precision, 0.75, 1e-15);
  EXPECT_NEAR(r.recall, 0.6, 1e-15);
  EXPECT_NEAR(r.f1, 2 * 0.75 * 0.6 / 1.35, 1e-15);
}

TEST(RougeTest, LcsMatchesSubsequenceEnumeration) {
  Rng rng(9);
  for (int i = 0; i < 1000; ++i) {
    const auto a = random_words(rng, 10, 4);
    const auto b = random_words(rng, 10, 4);
    ASSERT_EQ(lcs_length(a, b), oracle::lcs_brute(a, b));
  }
}

// ---------------------------------------------------------------------------
// METEOR

TEST(MeteorTest, Examples) {
  const auto c = T("mild edema in the right_lung");
  EXPECT_NEAR(meteor_sentence(c, c), 1.0 - 0.5 * std::pow(1.0 / 5.0, 3), 1e-12);
  EXPECT_EQ(meteor_sentence(T("a b"), T("c d")), 0.0);
  const Alignment al = align_exact(T("b a"), T("a b"));
  EXPECT_EQ(al.matches, 2u);
  EXPECT_EQ(al.chunks, 2u);
  EXPECT_NEAR(meteor_sentence(T("b a"), T("a b")), 0.5, 1e-12);
}

TEST(MeteorTest, AlignmentMatchesExhaustiveSearch) {
  Rng rng(10);
  for (int i = 0; i < 3000; ++i) {
    const auto c = random_words(rng, 6, 3);
    const auto r = random_words(rng, 6, 3);
    const Alignment got = align_exact(c, r);
    const oracle::Align want = oracle::align_brute(c, r);
    ASSERT_EQ(got.matches, want.matches);
    if (want.matches > 0) {
      ASSERT_EQ(got.chunks, want.chunks) << join_tokens(c) << " | " << join_tokens(r);
    }
    EXPECT_NEAR(meteor_sentence(c, r),
                oracle::meteor_from_alignment(want, c.size(), r.size()), 1e-12);
  }
}

TEST(MeteorTest, CorpusIsSentenceMean) {
  const std::vector<Tokens> c = {T("a b"), T("b a")}, r = {T("a b"), T("a b")};
  EXPECT_NEAR(meteor_exact(c, r),
              0.5 * (meteor_sentence(c[0], r[0]) + meteor_sentence(c[1], r[1])),
              1e-15);
}

// ---------------------------------------------------------------------------
// Labels

TEST(LabelsTest, Examples) {
  const LabelVector normal = extract_labels(T("no acute findings ."));
  for (int d = 0; d < kNumDiseases; ++d) EXPECT_EQ(normal[d], d == kNoFinding);
  const LabelVector cm =
      extract_labels(T("mild cardiomegaly in the cardiac_silhouette ."));
  EXPECT_TRUE(cm[2]);
  EXPECT_FALSE(cm[kNoFinding]);
  const LabelVector neg = extract_labels(T("no edema . mild fracture in the spine ."));
  EXPECT_FALSE(neg[5]);
  EXPECT_TRUE(neg[12]);
}

TEST(LabelsTest, RoundTripOverGeneratedCases) {
  WorldConfig cfg;
  cfg.max_lesions = 4;
  cfg.comparison_probability = 0.5;
  for (uint64_t seed = 0; seed < 1000; ++seed) {
    const GroundTruthCase c = sample_case(seed, cfg);
    ASSERT_EQ(extract_labels(c.report), labels_of(c.lesions)) << seed;
  }
}

TEST(ClassificationTest, ConfusionArithmetic) {
  const CategoryMetrics m = confusion_metrics(3, 1, 2, 4);
  EXPECT_NEAR(m.precision, 0.75, 1e-15);
  EXPECT_NEAR(m.recall, 0.6, 1e-15);
  EXPECT_NEAR(m.f1, 2.0 / 3.0, 1e-15);
  EXPECT_NEAR(m.accuracy, 0.7, 1e-15);
  const CategoryMetrics z = confusion_metrics(0, 0, 0, 5);
  EXPECT_EQ(z.precision, 0.0);
  EXPECT_EQ(z.recall, 0.0);
  EXPECT_EQ(z.f1, 0.0);
}

TEST(ClassificationTest, PerfectAndAllNegative) {
  std::vector<LabelVector> gt;
  for (uint64_t s = 0; s < 50; ++s) gt.push_back(labels_of(sample_case(s).lesions));
  const ClassificationReport same = classification_metrics(gt, gt);
  for (const auto& c : same.categories) EXPECT_EQ(c.accuracy, 1.0);
  const std::vector<LabelVector> none(gt.size(), LabelVector{});
  const ClassificationReport neg = classification_metrics(none, gt);
  for (int d = 0; d < kNumDiseases; ++d) {
    EXPECT_EQ(neg.categories[d].recall, 0.0);
    EXPECT_EQ(neg.categories[d].tp, 0u);
  }
}

// ---------------------------------------------------------------------------
// Structured comparison

StructuredReport make(const std::vector<oracle::Finding>& f,
                      const std::set<std::pair<int, int>>& cmp) {
  StructuredReport r;
  for (const auto& x : f) r.findings.push_back({x.disease, x.region, x.severity});
  for (auto [d, ch] : cmp) r.comparisons.push_back({d, static_cast<Change>(ch)});
  return r;
}

TEST(CriteriaTest, Examples) {
  const StructuredReport ref = make({{2, 7, 0}, {5, 0, 1}}, {{5, 1}});
  EXPECT_EQ(green_criteria(ref, ref).errors(), 0u);
  EXPECT_EQ(green_criteria(ref, ref).matched_findings, 2u);
  const StructuredReport extra = make({{2, 7, 0}, {5, 0, 1}, {9, 3, 2}}, {{5, 1}});
  EXPECT_EQ(green_criteria(extra, ref).false_finding, 1u);
  const StructuredReport moved = make({{2, 8, 2}, {5, 0, 1}}, {{5, 1}});
  const CriteriaCounts m = green_criteria(moved, ref);
  EXPECT_EQ(m.wrong_location, 1u);
  EXPECT_EQ(m.wrong_severity, 1u);
}

TEST(CriteriaTest, MatchesOracleOnRandomStructures) {
  Rng rng(12);
  for (int i = 0; i < 5000; ++i) {
    auto findings = [&] {
      std::vector<oracle::Finding> f(rng.uniform_int(0, 4));
      for (auto& x : f) {
        x = {static_cast<int>(rng.uniform_int(1, 4)),
             static_cast<int>(rng.uniform_int(0, 2)),
             static_cast<int>(rng.uniform_int(0, 2))};
      }
      return f;
    };
    auto comparisons = [&] {
      std::set<std::pair<int, int>> s;
      for (int k = rng.uniform_int(0, 3); k > 0; --k) {
        s.insert({static_cast<int>(rng.uniform_int(1, 4)),
                  static_cast<int>(rng.uniform_int(0, 1))});
      }
      return s;
    };
    const auto cf = findings(), rf = findings();
    const auto cc = comparisons(), rc = comparisons();
    const CriteriaCounts got = green_criteria(make(cf, cc), make(rf, rc));
    const oracle::Counts want = oracle::criteria(cf, rf, cc, rc);
    ASSERT_EQ(got.matched_findings, want.matched);
    ASSERT_EQ(got.matched_findings, oracle::max_matching_brute(cf, rf));
    ASSERT_EQ(got.false_finding, want.false_finding);
    ASSERT_EQ(got.missing_finding, want.missing_finding);
    ASSERT_EQ(got.wrong_location, want.wrong_location);
    ASSERT_EQ(got.wrong_severity, want.wrong_severity);
    ASSERT_EQ(got.spurious_comparison, want.spurious_comparison);
    ASSERT_EQ(got.omitted_comparison, want.omitted_comparison);
    EXPECT_EQ(got.matched_findings + got.missing_finding, rf.size());
    EXPECT_EQ(got.matched_findings + got.false_finding, cf.size());
  }
}

TEST(CriteriaTest, ParsedReportsMatchGroundTruthStructure) {
  WorldConfig cfg;
  cfg.max_lesions = 4;
  cfg.comparison_probability = 0.5;
  for (uint64_t seed = 0; seed < 500; ++seed) {
    const GroundTruthCase c = sample_case(seed, cfg);
    const CriteriaCounts k =
        green_criteria(parse_report_structure(c.report), structure_of(c));
    ASSERT_EQ(k.errors(), 0u) << seed;
    ASSERT_EQ(k.matched_findings, c.lesions.size());
  }
}

// ---------------------------------------------------------------------------
// Wilcoxon

TEST(WilcoxonTest, StrictlyLowerSixPairs) {
  const std::vector<double> a = {1, 2, 3, 4, 5, 6}, b = {2, 4, 6, 8, 10, 12};
  const WilcoxonResult r = wilcoxon_one_tailed(a, b);
  EXPECT_TRUE(r.exact);
  EXPECT_EQ(r.w_plus, 0.0);
  EXPECT_NEAR(r.p_value, 1.0 / 64.0, 1e-15);
}

TEST(WilcoxonTest, UndefinedCases) {
  const std::vector<double> a = {1, 2, 3, 4, 5, 6};
  EXPECT_THROW(wilcoxon_one_tailed(a, a), UndefinedTestError);
  const std::vector<double> b = {1, 2, 3, 4, 5.5, 6.5};
  EXPECT_THROW(wilcoxon_one_tailed(a, b), UndefinedTestError);
  const std::vector<double> c = {1, 2};
  EXPECT_THROW(wilcoxon_one_tailed(a, c), Error);
}

std::vector<double> random_sample(Rng& rng, size_t n, bool ties) {
  std::vector<double> v(n);
  for (auto& x : v) {
    x = ties ? static_cast<double>(rng.uniform_int(0, 4)) : rng.uniform(0, 1);
  }
  return v;
}

TEST(WilcoxonTest, ExactMatchesEnumeration) {
  Rng rng(13);
  for (int i = 0; i < 300; ++i) {
    const size_t n = rng.uniform_int(5, 12);
    const bool ties = i % 2 == 0;
    const auto a = random_sample(rng, n, ties);
    const auto b = random_sample(rng, n, ties);
    size_t nonzero = 0;
    for (size_t k = 0; k < n; ++k) nonzero += a[k] != b[k];
    if (nonzero < 5) continue;
    const WilcoxonResult r = wilcoxon_one_tailed(a, b, WilcoxonMethod::kExact);
    EXPECT_NEAR(r.p_value, oracle::signed_rank_enumerated(a, b).le, 1e-12);
  }
}

TEST(WilcoxonTest, SwappedTailsOverlapOnOneAtom) {
  Rng rng(14);
  for (int i = 0; i < 200; ++i) {
    const size_t n = rng.uniform_int(5, 10);
    const auto a = random_sample(rng, n, false);
    const auto b = random_sample(rng, n, false);
    const double p1 = wilcoxon_one_tailed(a, b).p_value;
    const double p2 = wilcoxon_one_tailed(b, a).p_value;
    EXPECT_GE(p1 + p2, 1.0 - 1e-12);
    EXPECT_NEAR(p1 + p2, 1.0 + oracle::signed_rank_enumerated(a, b).eq, 1e-12);
  }
}

TEST(WilcoxonTest, NormalApproximationAgreesForModerateN) {
  Rng rng(15);
  for (int i = 0; i < 200; ++i) {
    const size_t n = rng.uniform_int(10, 20);
    auto a = random_sample(rng, n, false);
    const auto b = random_sample(rng, n, false);
    for (auto& x : a) x -= 0.2;
    const double pe = wilcoxon_one_tailed(a, b, WilcoxonMethod::kExact).p_value;
    const double pn = wilcoxon_one_tailed(a, b, WilcoxonMethod::kNormal).p_value;
    EXPECT_LT(std::fabs(pe - pn), 0.02) << n;
  }
}

TEST(WilcoxonTest, LargeSamplesUseNormalApproximation) {
  Rng rng(16);
  const auto a = random_sample(rng, 40, false);
  const auto b = random_sample(rng, 40, false);
  const WilcoxonResult r = wilcoxon_one_tailed(a, b);
  EXPECT_FALSE(r.exact);
  EXPECT_GT(r.p_value, 0.0);
  EXPECT_LE(r.p_value, 1.0);
}

// ---------------------------------------------------------------------------

TEST(EvalReportTest, JsonAndCsvLayout) {
  EvalReport r;
  r.split = "test";
  r.cases = 3;
  r.bleu = {0.5, 0.4, 0.3, 0.2};
  const auto j = to_json(r);
  EXPECT_EQ(j["schema_version"], kEvalReportSchemaVersion);
  EXPECT_EQ(j["nlg"]["bleu_4"], 0.2);
  EXPECT_EQ(j["classification"]["categories"].size(), 14u);
  EXPECT_FALSE(j.contains("comparison"));
  const std::string csv = to_csv(r);
  EXPECT_EQ(csv.substr(0, csv.find('\n')),
            "schema_version,kind,name,accuracy,precision,recall,f1,value");
  EXPECT_NE(csv.find("Pleural Effusion"), std::string::npos);
}

}  // namespace
}  // namespace groundrl
