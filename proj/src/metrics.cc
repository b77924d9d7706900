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

#include "groundrl/metrics.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <sstream>
#include <unordered_map>

#include "groundrl/errors.h"

namespace groundrl {
namespace {

void check_aligned(size_t a, size_t b, const char* what) {
  if (a != b) {
    throw Error(std::string(what) + ": corpora differ in length (" +
                std::to_string(a) + " vs " + std::to_string(b) + ")");
  }
}

using NgramCounts = std::unordered_map<std::string, size_t>;

NgramCounts ngram_counts(std::span<const std::string> s, int n) {
  NgramCounts out;
  if (static_cast<int>(s.size()) < n) return out;
  for (size_t i = 0; i + n <= s.size(); ++i) {
    std::string key;
    for (int k = 0; k < n; ++k) {
      key += s[i + k];
      key += '\x1f';
    }
    ++out[key];
  }
  return out;
}

std::vector<Tokens> split_sentences(std::span<const std::string> report) {
  std::vector<Tokens> out;
  Tokens cur;
  for (const auto& t : report) {
    if (t == ".") {
      out.push_back(std::move(cur));
      cur.clear();
    } else {
      cur.push_back(t);
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

// Earliest un-negated occurrence of any phrase of `disease` in `s`.
std::optional<size_t> find_phrase(const Tokens& s, int disease) {
  std::optional<size_t> best;
  for (const auto& p : finding_phrases(disease)) {
    if (p.size() > s.size()) continue;
    for (size_t i = 0; i + p.size() <= s.size(); ++i) {
      if (!std::equal(p.begin(), p.end(), s.begin() + i)) continue;
      const bool negated =
          std::find(s.begin(), s.begin() + i, "no") != s.begin() + i;
      if (!negated && (!best || i < *best)) best = i;
    }
  }
  return best;
}

bool is_comparison(const Tokens& s) {
  return s.size() >= 2 && s[s.size() - 2] == "since" && s.back() == "prior";
}

}  // namespace

// ---------------------------------------------------------------------------
// BLEU

std::vector<double> bleu(std::span<const Tokens> candidates,
                         std::span<const Tokens> references, int max_n) {
  check_aligned(candidates.size(), references.size(), "bleu");
  if (candidates.empty()) throw Error("bleu: empty corpus");
  if (max_n < 1) throw Error("bleu: max_n must be >= 1");
  std::vector<size_t> matched(max_n, 0), total(max_n, 0);
  size_t c_len = 0, r_len = 0;
  for (size_t i = 0; i < candidates.size(); ++i) {
    c_len += candidates[i].size();
    r_len += references[i].size();
    for (int n = 1; n <= max_n; ++n) {
      const NgramCounts c = ngram_counts(candidates[i], n);
      const NgramCounts r = ngram_counts(references[i], n);
      for (const auto& [g, k] : c) {
        total[n - 1] += k;
        auto it = r.find(g);
        if (it != r.end()) matched[n - 1] += std::min(k, it->second);
      }
    }
  }
  std::vector<double> out(max_n, 0.0);
  if (c_len == 0) return out;
  const double bp =
      c_len > r_len ? 1.0
                    : std::exp(1.0 - static_cast<double>(r_len) / c_len);
  double log_sum = 0.0;
  for (int n = 1; n <= max_n; ++n) {
    if (matched[n - 1] == 0) break;  // this and every higher order is 0
    log_sum += std::log(static_cast<double>(matched[n - 1]) / total[n - 1]);
    out[n - 1] = bp * std::exp(log_sum / n);
  }
  return out;
}

// ---------------------------------------------------------------------------
// ROUGE-L

size_t lcs_length(std::span<const std::string> a,
                  std::span<const std::string> b) {
  std::vector<size_t> prev(b.size() + 1, 0), cur(b.size() + 1, 0);
  for (size_t i = 1; i <= a.size(); ++i) {
    for (size_t j = 1; j <= b.size(); ++j) {
      cur[j] = a[i - 1] == b[j - 1] ? prev[j - 1] + 1
                                    : std::max(prev[j], cur[j - 1]);
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

RougeL rouge_l_sentence(std::span<const std::string> candidate,
                        std::span<const std::string> reference) {
  RougeL r;
  if (candidate.empty() && reference.empty()) return {1.0, 1.0, 1.0};
  if (candidate.empty() || reference.empty()) return r;
  const double l = static_cast<double>(lcs_length(candidate, reference));
  if (l == 0.0) return r;
  r.precision = l / candidate.size();
  r.recall = l / reference.size();
  r.f1 = 2.0 * r.precision * r.recall / (r.precision + r.recall);
  return r;
}

RougeL rouge_l(std::span<const Tokens> candidates,
               std::span<const Tokens> references) {
  check_aligned(candidates.size(), references.size(), "rouge_l");
  RougeL mean;
  if (candidates.empty()) return mean;
  for (size_t i = 0; i < candidates.size(); ++i) {
    const RougeL s = rouge_l_sentence(candidates[i], references[i]);
    mean.f1 += s.f1;
    mean.precision += s.precision;
    mean.recall += s.recall;
  }
  const double n = static_cast<double>(candidates.size());
  mean.f1 /= n;
  mean.precision /= n;
  mean.recall /= n;
  return mean;
}

// ---------------------------------------------------------------------------
// METEOR

namespace {

struct AlignSearch {
  std::vector<int> cand;  // word ids
  std::vector<int> ref;
  std::vector<int> skips_left;
  std::vector<bool> used;
  size_t budget = 0;
  size_t nodes = 0;
  size_t best = std::numeric_limits<size_t>::max();

  void run(size_t i, long prev, size_t chunks) {
    if (chunks >= best) return;
    if (i == cand.size()) {
      best = chunks;
      return;
    }
    if (++nodes > budget && best != std::numeric_limits<size_t>::max()) return;
    const int w = cand[i];
    // Continue the current chunk first, then any other free position.
    if (prev >= 0 && static_cast<size_t>(prev + 1) < ref.size() &&
        !used[prev + 1] && ref[prev + 1] == w) {
      used[prev + 1] = true;
      run(i + 1, prev + 1, chunks);
      used[prev + 1] = false;
    }
    for (size_t j = 0; j < ref.size(); ++j) {
      if (used[j] || ref[j] != w) continue;
      if (prev >= 0 && j == static_cast<size_t>(prev + 1)) continue;
      used[j] = true;
      run(i + 1, static_cast<long>(j), chunks + 1);
      used[j] = false;
    }
    if (skips_left[w] > 0) {
      --skips_left[w];
      run(i + 1, -1, chunks);
      ++skips_left[w];
    }
  }
};

}  // namespace

Alignment align_exact(std::span<const std::string> candidate,
                      std::span<const std::string> reference,
                      size_t node_budget) {
  std::unordered_map<std::string, int> ids;
  auto id = [&](const std::string& s) {
    return ids.emplace(s, static_cast<int>(ids.size())).first->second;
  };
  AlignSearch s;
  for (const auto& t : candidate) s.cand.push_back(id(t));
  for (const auto& t : reference) s.ref.push_back(id(t));
  std::vector<int> cc(ids.size(), 0), rc(ids.size(), 0);
  for (int w : s.cand) ++cc[w];
  for (int w : s.ref) ++rc[w];
  Alignment a;
  s.skips_left.resize(ids.size());
  for (size_t w = 0; w < ids.size(); ++w) {
    const int m = std::min(cc[w], rc[w]);
    a.matches += static_cast<size_t>(m);
    s.skips_left[w] = cc[w] - m;
  }
  if (a.matches == 0) return a;
  s.used.assign(s.ref.size(), false);
  s.budget = node_budget;
  s.run(0, -1, 0);
  a.chunks = s.best;
  return a;
}

double meteor_sentence(std::span<const std::string> candidate,
                       std::span<const std::string> reference,
                       const MeteorParams& p) {
  const Alignment a = align_exact(candidate, reference);
  if (a.matches == 0) return 0.0;
  const double m = static_cast<double>(a.matches);
  const double precision = m / candidate.size();
  const double recall = m / reference.size();
  const double fmean =
      precision * recall / (p.alpha * precision + (1.0 - p.alpha) * recall);
  const double penalty = p.gamma * std::pow(a.chunks / m, p.beta);
  return fmean * (1.0 - penalty);
}

double meteor_exact(std::span<const Tokens> candidates,
                    std::span<const Tokens> references,
                    const MeteorParams& params) {
  check_aligned(candidates.size(), references.size(), "meteor_exact");
  if (candidates.empty()) return 0.0;
  double s = 0.0;
  for (size_t i = 0; i < candidates.size(); ++i) {
    s += meteor_sentence(candidates[i], references[i], params);
  }
  return s / static_cast<double>(candidates.size());
}

// ---------------------------------------------------------------------------
// Labels

LabelVector extract_labels(std::span<const std::string> report) {
  LabelVector v{};
  for (const Tokens& s : split_sentences(report)) {
    for (int d = 1; d < kNumDiseases; ++d) {
      if (!v[d] && find_phrase(s, d)) v[d] = true;
    }
  }
  v[kNoFinding] = std::none_of(v.begin() + 1, v.end(), [](bool b) { return b; });
  return v;
}

LabelVector labels_of(const std::vector<Lesion>& lesions) {
  LabelVector v{};
  for (const Lesion& l : lesions) v[l.disease] = true;
  v[kNoFinding] = lesions.empty();
  return v;
}

CategoryMetrics confusion_metrics(size_t tp, size_t fp, size_t fn, size_t tn) {
  CategoryMetrics m{tp, fp, fn, tn};
  const size_t total = tp + fp + fn + tn;
  if (total > 0) m.accuracy = static_cast<double>(tp + tn) / total;
  if (tp + fp > 0) m.precision = static_cast<double>(tp) / (tp + fp);
  if (tp + fn > 0) m.recall = static_cast<double>(tp) / (tp + fn);
  if (m.precision + m.recall > 0.0) {
    m.f1 = 2.0 * m.precision * m.recall / (m.precision + m.recall);
  }
  return m;
}

ClassificationReport classification_metrics(std::span<const LabelVector> pred,
                                            std::span<const LabelVector> gt) {
  check_aligned(pred.size(), gt.size(), "classification_metrics");
  ClassificationReport r;
  for (int d = 0; d < kNumDiseases; ++d) {
    size_t tp = 0, fp = 0, fn = 0, tn = 0;
    for (size_t i = 0; i < pred.size(); ++i) {
      const bool p = pred[i][d], g = gt[i][d];
      tp += p && g;
      fp += p && !g;
      fn += !p && g;
      tn += !p && !g;
    }
    r.categories[d] = confusion_metrics(tp, fp, fn, tn);
    r.macro_accuracy += r.categories[d].accuracy / kNumDiseases;
    r.macro_precision += r.categories[d].precision / kNumDiseases;
    r.macro_recall += r.categories[d].recall / kNumDiseases;
    r.macro_f1 += r.categories[d].f1 / kNumDiseases;
  }
  return r;
}

// ---------------------------------------------------------------------------
// Structured comparison

StructuredReport structure_of(const GroundTruthCase& c) {
  StructuredReport s;
  for (const Lesion& l : c.lesions) {
    s.findings.push_back({l.disease, l.region, static_cast<int>(l.severity)});
  }
  s.comparisons = c.comparisons;
  return s;
}

StructuredReport parse_report_structure(std::span<const std::string> report) {
  StructuredReport out;
  for (const Tokens& s : split_sentences(report)) {
    if (is_comparison(s)) {
      std::optional<int> disease;
      std::optional<Change> change;
      for (const auto& t : s) {
        if (!disease) {
          const auto d = disease_index(t);
          if (d && *d != kNoFinding) disease = d;
        }
        if (!change && t == "improved") change = Change::kImproved;
        if (!change && t == "worsened") change = Change::kWorsened;
      }
      if (disease && change) out.comparisons.push_back({*disease, *change});
      continue;
    }
    std::optional<size_t> best_pos;
    int disease = -1;
    for (int d = 1; d < kNumDiseases; ++d) {
      const auto pos = find_phrase(s, d);
      if (pos && (!best_pos || *pos < *best_pos)) {
        best_pos = pos;
        disease = d;
      }
    }
    if (disease < 0) continue;
    StructuredFinding f;
    f.disease = disease;
    for (const auto& t : s) {
      if (f.severity < 0) {
        if (const auto sev = severity_from_token(t)) {
          f.severity = static_cast<int>(*sev);
        }
      }
      if (const auto r = region_index(t)) f.region = *r;
    }
    out.findings.push_back(f);
  }
  return out;
}

CriteriaCounts& CriteriaCounts::operator+=(const CriteriaCounts& o) {
  false_finding += o.false_finding;
  missing_finding += o.missing_finding;
  wrong_location += o.wrong_location;
  wrong_severity += o.wrong_severity;
  spurious_comparison += o.spurious_comparison;
  omitted_comparison += o.omitted_comparison;
  matched_findings += o.matched_findings;
  return *this;
}

size_t CriteriaCounts::errors() const {
  return false_finding + missing_finding + wrong_location + wrong_severity +
         spurious_comparison + omitted_comparison;
}

CriteriaCounts green_criteria(const StructuredReport& candidate,
                              const StructuredReport& reference) {
  CriteriaCounts c;
  std::vector<bool> taken(candidate.findings.size(), false);
  for (const auto& r : reference.findings) {
    bool found = false;
    for (size_t j = 0; j < candidate.findings.size(); ++j) {
      const auto& f = candidate.findings[j];
      if (taken[j] || f.disease != r.disease) continue;
      taken[j] = true;
      found = true;
      ++c.matched_findings;
      if (f.region != r.region) ++c.wrong_location;
      if (f.severity != r.severity) ++c.wrong_severity;
      break;
    }
    if (!found) ++c.missing_finding;
  }
  c.false_finding = static_cast<size_t>(
      std::count(taken.begin(), taken.end(), false));
  auto as_set = [](const std::vector<Comparison>& v) {
    std::set<std::pair<int, int>> s;
    for (const auto& x : v) s.insert({x.disease, static_cast<int>(x.change)});
    return s;
  };
  const auto cs = as_set(candidate.comparisons);
  const auto rs = as_set(reference.comparisons);
  for (const auto& x : cs) c.spurious_comparison += !rs.count(x);
  for (const auto& x : rs) c.omitted_comparison += !cs.count(x);
  return c;
}

// ---------------------------------------------------------------------------
// Wilcoxon signed-rank

WilcoxonResult wilcoxon_one_tailed(std::span<const double> a,
                                   std::span<const double> b,
                                   WilcoxonMethod method) {
  check_aligned(a.size(), b.size(), "wilcoxon_one_tailed");
  std::vector<double> d;
  for (size_t i = 0; i < a.size(); ++i) {
    const double x = a[i] - b[i];
    if (!std::isfinite(x)) throw Error("wilcoxon_one_tailed: non-finite sample");
    if (x != 0.0) d.push_back(x);
  }
  const size_t n = d.size();
  if (n == 0) throw UndefinedTestError("all paired differences are zero");
  if (n < 5) {
    throw UndefinedTestError("need at least 5 nonzero differences, got " +
                             std::to_string(n));
  }
  std::vector<size_t> order(n);
  for (size_t i = 0; i < n; ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](size_t x, size_t y) {
    return std::fabs(d[x]) < std::fabs(d[y]);
  });
  // Doubled average ranks stay integral.
  std::vector<long> rank2(n);
  double tie_term = 0.0;
  for (size_t i = 0; i < n;) {
    size_t j = i;
    while (j + 1 < n && std::fabs(d[order[j + 1]]) == std::fabs(d[order[i]])) ++j;
    const long r2 = static_cast<long>(i + 1 + j + 1);
    for (size_t k = i; k <= j; ++k) rank2[order[k]] = r2;
    const double t = static_cast<double>(j - i + 1);
    tie_term += t * t * t - t;
    i = j + 1;
  }
  long w2 = 0;
  for (size_t i = 0; i < n; ++i) {
    if (d[i] > 0.0) w2 += rank2[i];
  }
  WilcoxonResult res;
  res.n = n;
  res.w_plus = w2 / 2.0;
  const bool exact = method == WilcoxonMethod::kExact ||
                     (method == WilcoxonMethod::kAuto && n <= 20);
  res.exact = exact;
  if (exact) {
    if (n > 30) throw Error("exact Wilcoxon limited to n <= 30");
    long total2 = 0;
    for (long r : rank2) total2 += r;
    std::vector<double> ways(static_cast<size_t>(total2) + 1, 0.0);
    ways[0] = 1.0;
    long reach = 0;
    for (long r : rank2) {
      reach += r;
      for (long s = reach; s >= r; --s) ways[s] += ways[s - r];
    }
    double le = 0.0;
    for (long s = 0; s <= w2; ++s) le += ways[s];
    res.p_value = le / std::ldexp(1.0, static_cast<int>(n));
  } else {
    const double nn = static_cast<double>(n);
    const double mean = nn * (nn + 1.0) / 4.0;
    const double var =
        nn * (nn + 1.0) * (2.0 * nn + 1.0) / 24.0 - tie_term / 48.0;
    const double z = (res.w_plus + 0.5 - mean) / std::sqrt(var);
    res.p_value = std::min(1.0, 0.5 * std::erfc(-z / std::sqrt(2.0)));
  }
  return res;
}

// ---------------------------------------------------------------------------
// Serialization

nlohmann::ordered_json to_json(const EvalReport& r) {
  using J = nlohmann::ordered_json;
  J j;
  j["schema_version"] = kEvalReportSchemaVersion;
  j["split"] = r.split;
  j["cases"] = r.cases;
  J nlg;
  for (size_t n = 0; n < r.bleu.size(); ++n) {
    nlg["bleu_" + std::to_string(n + 1)] = r.bleu[n];
  }
  nlg["rouge_l"] = r.rouge.f1;
  nlg["rouge_l_precision"] = r.rouge.precision;
  nlg["rouge_l_recall"] = r.rouge.recall;
  nlg["meteor"] = r.meteor;
  j["nlg"] = nlg;
  J cats = J::array();
  for (int d = 0; d < kNumDiseases; ++d) {
    const auto& m = r.classification.categories[d];
    cats.push_back({{"name", kDiseaseNames[d]},
                    {"accuracy", m.accuracy},
                    {"precision", m.precision},
                    {"recall", m.recall},
                    {"f1", m.f1},
                    {"tp", m.tp},
                    {"fp", m.fp},
                    {"fn", m.fn},
                    {"tn", m.tn}});
  }
  j["classification"] = {
      {"categories", cats},
      {"macro",
       {{"accuracy", r.classification.macro_accuracy},
        {"precision", r.classification.macro_precision},
        {"recall", r.classification.macro_recall},
        {"f1", r.classification.macro_f1}}}};
  const auto& c = r.criteria;
  j["criteria"] = {{"false_finding", c.false_finding},
                   {"missing_finding", c.missing_finding},
                   {"wrong_location", c.wrong_location},
                   {"wrong_severity", c.wrong_severity},
                   {"spurious_comparison", c.spurious_comparison},
                   {"omitted_comparison", c.omitted_comparison},
                   {"matched_findings", c.matched_findings}};
  j["grounding"] = {{"queries", r.grounding.queries},
                    {"mean_iou_reward", r.grounding.mean_iou_reward},
                    {"format_hit_rate", r.grounding.format_hit_rate},
                    {"mean_total_reward", r.grounding.mean_total_reward}};
  if (!r.compared_to.empty()) {
    J sig = J::array();
    for (const auto& e : r.significance) {
      J x;
      x["metric"] = e.metric;
      if (e.result) {
        x["p_value"] = e.result->p_value;
        x["w_plus"] = e.result->w_plus;
        x["n"] = e.result->n;
        x["exact"] = e.result->exact;
      } else {
        x["p_value"] = nullptr;
      }
      if (!e.note.empty()) x["note"] = e.note;
      sig.push_back(std::move(x));
    }
    j["comparison"] = {{"against", r.compared_to},
                       {"alternative", "against < this"},
                       {"tests", sig}};
  }
  return j;
}

std::string to_csv(const EvalReport& r) {
  std::ostringstream os;
  os.precision(17);
  os << "schema_version,kind,name,accuracy,precision,recall,f1,value\n";
  const int v = kEvalReportSchemaVersion;
  for (int d = 0; d < kNumDiseases; ++d) {
    const auto& m = r.classification.categories[d];
    os << v << ",category," << kDiseaseNames[d] << ',' << m.accuracy << ','
       << m.precision << ',' << m.recall << ',' << m.f1 << ",\n";
  }
  const auto& cl = r.classification;
  os << v << ",category,Macro," << cl.macro_accuracy << ','
     << cl.macro_precision << ',' << cl.macro_recall << ',' << cl.macro_f1
     << ",\n";
  auto summary = [&](const std::string& name, double value) {
    os << v << ",summary," << name << ",,,,," << value << '\n';
  };
  for (size_t n = 0; n < r.bleu.size(); ++n) {
    summary("bleu_" + std::to_string(n + 1), r.bleu[n]);
  }
  summary("rouge_l", r.rouge.f1);
  summary("rouge_l_recall", r.rouge.recall);
  summary("meteor", r.meteor);
  summary("false_finding", static_cast<double>(r.criteria.false_finding));
  summary("missing_finding", static_cast<double>(r.criteria.missing_finding));
  summary("wrong_location", static_cast<double>(r.criteria.wrong_location));
  summary("wrong_severity", static_cast<double>(r.criteria.wrong_severity));
  summary("spurious_comparison",
          static_cast<double>(r.criteria.spurious_comparison));
  summary("omitted_comparison",
          static_cast<double>(r.criteria.omitted_comparison));
  summary("matched_findings", static_cast<double>(r.criteria.matched_findings));
  summary("grounding_queries", static_cast<double>(r.grounding.queries));
  summary("mean_iou_reward", r.grounding.mean_iou_reward);
  summary("format_hit_rate", r.grounding.format_hit_rate);
  summary("mean_total_reward", r.grounding.mean_total_reward);
  for (const auto& e : r.significance) {
    summary("wilcoxon_p_" + e.metric,
            e.result ? e.result->p_value
                     : std::numeric_limits<double>::quiet_NaN());
  }
  return os.str();
}

}  // namespace groundrl
