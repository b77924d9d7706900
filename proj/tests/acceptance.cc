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

// Acceptance checks. Prints one PASS or FAIL line per criterion and exits
// nonzero if any fails. Pass criterion numbers as arguments to run a subset.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "gradcheck.h"
#include "groundrl/bbox.h"
#include "groundrl/checkpoint.h"
#include "groundrl/dataset_io.h"
#include "groundrl/metrics.h"
#include "groundrl/pipeline.h"
#include "groundrl/response_parser.h"
#include "groundrl/rewards.h"
#include "groundrl/synthworld.h"
#include "oracles.h"

namespace groundrl {
namespace {

namespace fs = std::filesystem;
using Json = nlohmann::ordered_json;
using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t) {
  return std::chrono::duration<double>(Clock::now() - t).count();
}

std::string fmt(const char* f, double a = 0, double b = 0, double c = 0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c);
  return buf;
}

struct Verdict {
  bool pass = false;
  std::string detail;
};

// ---------------------------------------------------------------------------
// Shared pieces

Tokens random_response(Rng& rng, const Vocabulary& vocab) {
  static const std::vector<std::string> grammar = {
      "<think>", "</think>", "<answer>", "</answer>", "[", ",", "]",
      "<eos>",   "<pad>",    "<bos>",    "7",         "63", "012", "30"};
  Tokens t;
  if (rng.bernoulli(0.3)) {
    auto n = [&] { return std::to_string(rng.uniform_int(0, 70)); };
    t = split_tokens("<think> finding ; </think> <answer> [ " + n() + " , " +
                     n() + " , " + n() + " , " + n() + " ] </answer>");
    if (rng.bernoulli(0.5)) {
      const size_t at = rng.uniform_int(0, t.size() - 1);
      t[at] = vocab.token(static_cast<TokenId>(rng.uniform_int(0, vocab.size() - 1)));
    }
    return t;
  }
  const int len = static_cast<int>(rng.uniform_int(0, 32));
  for (int i = 0; i < len; ++i) {
    if (rng.bernoulli(0.6)) {
      t.push_back(grammar[rng.uniform_int(0, grammar.size() - 1)]);
    } else {
      t.push_back(vocab.token(static_cast<TokenId>(rng.uniform_int(0, vocab.size() - 1))));
    }
  }
  return t;
}

RunConfig reference_config() {
  std::ifstream in(GROUNDRL_REFERENCE_CONFIG);
  Json j = default_config_json();
  merge_config(j, Json::parse(in));
  return run_config_from_json(j);
}

fs::path work_root() {
  static const fs::path p = [] {
    const fs::path r = fs::temp_directory_path() / "groundrl_acceptance";
    fs::remove_all(r);
    fs::create_directories(r);
    return r;
  }();
  return p;
}

struct Run {
  RunPaths paths;
  EvalReport report;
  double seconds = 0;
};

// Reference runs are shared between criteria and built on first use.
const Run& reference_run(const std::string& preset) {
  static std::map<std::string, Run> runs;
  auto it = runs.find(preset);
  if (it != runs.end()) return it->second;
  RunConfig c = reference_config();
  c.ablation = apply_ablation(c.ablation, preset);
  Run r;
  r.paths = RunPaths{work_root() / preset};
  fs::create_directories(r.paths.root);
  const auto t0 = Clock::now();
  r.report = cmd_run({c, r.paths, nullptr});
  r.seconds = seconds_since(t0);
  return runs.emplace(preset, std::move(r)).first->second;
}

PolicyParams load_base(const RunConfig& c, const fs::path& p) {
  return *load_checkpoint(p, policy_config(c), Vocabulary::standard().hash()).base;
}

// ---------------------------------------------------------------------------
// Criteria

Verdict criterion1() {
  const IouFraction f = iou_exact({0, 0, 2, 2}, {1, 1, 3, 3});
  const double v = iou({0, 0, 2, 2}, {1, 1, 3, 3});
  bool ok = f.numerator == 1 && f.denominator == 7 && std::fabs(v - 1.0 / 7.0) <= 1e-12;
  const Vocabulary& vocab = Vocabulary::standard();
  Rng rng(11);
  const auto t0 = Clock::now();
  int bad = 0, parsed_ok = 0;
  for (int i = 0; i < 10000; ++i) {
    const ParsedResponse p = parse_response(random_response(rng, vocab));
    parsed_ok += p.format_ok;
    const int x = static_cast<int>(rng.uniform_int(0, 60));
    const int y = static_cast<int>(rng.uniform_int(0, 60));
    const BBox gt{x, y, x + 1 + static_cast<int>(rng.uniform_int(0, 3)),
                  y + 1 + static_cast<int>(rng.uniform_int(0, 3))};
    const RewardBreakdown r = total_reward(p, gt);
    bad += r.total != r.r_iou + r.r_format;
  }
  const double secs = seconds_since(t0);
  ok = ok && bad == 0 && secs < 1.0;
  return {ok, fmt("iou = 1/7, %g sum mismatches over 10000 (%g well-formed), %.3f s",
                  bad, parsed_ok, secs)};
}

Verdict criterion2() {
  Rng rng(12);
  double worst_mean = 0, worst_std = 0;
  int checked = 0;
  while (checked < 1000) {
    const int n = static_cast<int>(rng.uniform_int(2, 16));
    std::vector<double> r(n);
    for (double& x : r) x = rng.bernoulli(0.5) ? rng.uniform(0, 2) : rng.uniform_int(0, 2);
    double m = 0, s = 0;
    for (double x : r) m += x / n;
    for (double x : r) s += (x - m) * (x - m) / n;
    if (std::sqrt(s) < 1e-3) continue;
    const GroupAdvantages g = group_advantages(r);
    double am = 0, as = 0;
    for (double a : g.advantages) am += a / n;
    for (double a : g.advantages) as += (a - am) * (a - am) / n;
    worst_mean = std::max(worst_mean, std::fabs(am));
    worst_std = std::max(worst_std, std::fabs(std::sqrt(as) - 1.0));
    ++checked;
  }
  int differ = 0;
  for (uint64_t seed = 0; seed < 10; ++seed) {
    const gradcheck::Fixture f = gradcheck::make_fixture(500 + seed);
    RolloutGroup a = f.group, b = f.group;
    std::vector<double> r = f.group.advantages.rewards, s = r;
    const double shift = 0.25 * static_cast<double>(seed + 1);
    for (double& x : s) x += shift;
    reassign_rewards(a, r, kDefaultAdvantageEpsilon);
    reassign_rewards(b, s, kDefaultAdvantageEpsilon);
    differ += grpo_step(f.policy, f.reference, a, f.task, RLConfig{}) !=
              grpo_step(f.policy, f.reference, b, f.task, RLConfig{});
  }
  return {worst_mean < 1e-9 && worst_std < 1e-9 && differ == 0,
          fmt("max |mean| %.2e, max |std-1| %.2e, %g of 10 shifted steps differ",
              worst_mean, worst_std, differ)};
}

Verdict criterion3() {
  const auto t0 = Clock::now();
  double sft = 0, pg = 0, kl = 0;
  for (uint64_t seed = 0; seed < 20; ++seed) {
    sft = std::max(sft, gradcheck::sft_error(seed));
    pg = std::max(pg, gradcheck::policy_gradient_error(seed));
    kl = std::max(kl, gradcheck::kl_error(seed));
  }
  const double secs = seconds_since(t0);
  const bool ok = sft < 1e-4 && pg < 1e-4 && kl < 1e-4 && secs < 30;
  return {ok, fmt("max rel err sft %.2e, pg %.2e, kl %.2e", sft, pg, kl) +
                  fmt(", %.1f s", secs)};
}

Verdict criterion4() {
  const Vocabulary& vocab = Vocabulary::standard();
  Rng rng(14);
  int disagree = 0, accepted = 0;
  for (int i = 0; i < 100000; ++i) {
    const Tokens t = random_response(rng, vocab);
    const ParsedResponse got = parse_response(t);
    const oracle::Parse want = oracle::parse(t);
    bool same = got.format_ok == want.ok;
    if (same && want.ok) {
      same = *got.answer_box == BBox{want.x1, want.y1, want.x2, want.y2} &&
             got.think_length() == want.think_tokens;
    }
    disagree += !same;
    accepted += want.ok;
  }
  return {disagree == 0, fmt("%g disagreements over 100000 (%g accepted)",
                             disagree, accepted)};
}

Verdict criterion5() {
  const RunConfig c = reference_config();
  const Run& run = reference_run("full");
  const Dataset d = load_dataset(run.paths, c.world.canvas);
  const auto tasks = grounding_tasks(d, Split::kTest, c);
  const int len = c.rl.max_response_len;
  const GroundingSummary pre = summarize(evaluate_grounding(
      load_base(c, run.paths.checkpoint(Phase::kThetaPrime)), tasks, d, len));
  const GroundingSummary post = summarize(evaluate_grounding(
      load_base(c, run.paths.checkpoint(Phase::kThetaDoublePrime)), tasks, d, len));
  const double gain = post.mean_iou_reward - pre.mean_iou_reward;
  const bool ok = gain >= 0.20 && post.format_hit_rate >= 0.95 && run.seconds < 600;
  return {ok, fmt("IoU %.4f -> %.4f", pre.mean_iou_reward, post.mean_iou_reward) +
                  fmt(" (gain %.4f), format %.3f", gain, post.format_hit_rate) +
                  fmt(", pipeline %.0f s", run.seconds)};
}

std::vector<PerCase> per_case(const RunPaths& p) {
  std::vector<PerCase> out;
  for (const Json& j : read_jsonl(p.eval_cases())) out.push_back(per_case_from_json(j));
  return out;
}

Verdict criterion6() {
  const Run& full = reference_run("full");
  std::map<std::string, const Run*> abl;
  for (const char* p : {"wo-svr", "wo-mcl", "wo-mcl-svr"}) abl[p] = &reference_run(p);
  auto reward = [](const Run& r) { return r.report.grounding.mean_total_reward; };
  auto f1 = [](const Run& r) { return r.report.classification.macro_f1; };
  bool ok = true;
  std::ostringstream d;
  d << "full " << reward(full) << "/" << f1(full);
  for (const auto& [name, r] : abl) {
    d << ", " << name << " " << reward(*r) << "/" << f1(*r);
    ok = ok && reward(full) >= reward(*r) && f1(full) >= f1(*r);
  }
  const Run& none = *abl["wo-mcl-svr"];
  for (const auto& [name, r] : abl) {
    if (r == &none) continue;
    ok = ok && reward(none) < reward(*r) && f1(none) < f1(*r);
  }
  ok = ok && reward(none) < reward(full) && f1(none) < f1(full);
  double p = 1.0;
  size_t n = 0;
  for (const auto& e : compare_runs(per_case(full.paths), per_case(none.paths))) {
    if (e.metric == "total_reward" && e.result) {
      p = e.result->p_value;
      n = e.result->n;
    }
  }
  ok = ok && p < 0.05 && n >= 30;
  d << " (reward/macro-F1); full vs wo-mcl-svr p = " << p << " over " << n;
  return {ok, d.str()};
}

Verdict criterion7() {
  int changed = 0, decode_diff = 0;
  for (uint64_t seed = 1; seed <= 5; ++seed) {
    RunConfig c = run_config_from_json(default_config_json());
    c.seed = seed;
    c.data.cases = 80;
    c.adapter.train.epochs = 1;
    const RunPaths p{work_root() / ("adapter_" + std::to_string(seed))};
    fs::create_directories(p.root);
    cmd_gen_data({c, p, nullptr});
    const Dataset d = load_dataset(p, c.world.canvas);
    PolicyParams base = initial_policy(c);
    base.set_phase(Phase::kThetaDoublePrime);
    const uint64_t h = base.content_hash();
    changed += train_adapter(c, d, base, nullptr).base.content_hash() != h;
    const AdapterParams zero =
        AdapterParams::init(base.config(), c.adapter.rank, adapter_init_seed(c));
    for (const Observation& obs : d.observations) {
      decode_diff += generate_report(base, &zero, obs, c.eval.max_report_len) !=
                     generate_report(base, nullptr, obs, c.eval.max_report_len);
    }
  }
  return {changed == 0 && decode_diff == 0,
          fmt("%g of 5 base hashes changed, %g zero-adapter decodes differ",
              changed, decode_diff)};
}

Verdict criterion8() {
  const auto b = bleu(std::vector<Tokens>{split_tokens("a b x d")},
                      std::vector<Tokens>{split_tokens("a b c d")});
  bool ok = std::fabs(b[0] - 0.75) < 1e-12 && std::fabs(b[1] - 0.5) < 1e-12;
  Rng rng(18);
  int lcs_bad = 0;
  for (int i = 0; i < 1000; ++i) {
    Tokens x, y;
    for (auto n = rng.uniform_int(0, 10); n > 0; --n) x.push_back(std::string(1, 'a' + rng.uniform_int(0, 3)));
    for (auto n = rng.uniform_int(0, 10); n > 0; --n) y.push_back(std::string(1, 'a' + rng.uniform_int(0, 3)));
    lcs_bad += lcs_length(x, y) != oracle::lcs_brute(x, y);
  }
  const std::vector<double> lo = {1, 2, 3, 4, 5, 6}, hi = {2, 4, 6, 8, 10, 12};
  const double p = wilcoxon_one_tailed(lo, hi).p_value;
  WorldConfig wc;
  wc.max_lesions = 4;
  wc.comparison_probability = 0.5;
  int label_bad = 0;
  for (uint64_t s = 0; s < 1000; ++s) {
    const GroundTruthCase gc = sample_case(s, wc);
    label_bad += extract_labels(gc.report) != labels_of(gc.lesions);
  }
  ok = ok && lcs_bad == 0 && std::fabs(p - 1.0 / 64) < 1e-15 && label_bad == 0;
  return {ok, fmt("bleu %.4f/%.4f, p = %.6f", b[0], b[1], p) +
                  fmt(", %g LCS and %g label mismatches", lcs_bad, label_bad)};
}

Verdict criterion9() {
  const Vocabulary& vocab = Vocabulary::standard();
  const PolicyConfig pc = default_policy_config(vocab);
  Rng rng(19);
  double lowest = std::numeric_limits<double>::infinity(), self = 0;
  for (int i = 0; i < 10000; ++i) {
    const PolicyParams a = PolicyParams::init_uniform(pc, 2 * i, 1.0);
    const PolicyParams b = PolicyParams::init_uniform(pc, 2 * i + 1, 1.0);
    const Observation obs = gradcheck::random_obs(rng);
    const TokenIds ctx = gradcheck::random_tokens(rng, 8, vocab);
    lowest = std::min(lowest, exact_kl(a, b, obs, ctx));
    if (i < 1000) self = std::max(self, std::fabs(exact_kl(a, a, obs, ctx)));
  }
  const std::vector<double> p = {0.5, 0.5}, q = {0.9, 0.1};
  const double toy = kl_divergence(p, q);
  const bool ok = lowest >= -1e-12 && self == 0.0 &&
                  std::fabs(toy - 0.5 * std::log(25.0 / 9.0)) < 1e-12;
  return {ok, fmt("min kl %.2e, max self kl %.2e, toy %.12f", lowest, self, toy)};
}

Verdict criterion10() {
  const Run& first = reference_run("full");
  RunConfig c = reference_config();
  c.workers = 1;
  const RunPaths again{work_root() / "full_again"};
  fs::create_directories(again.root);
  cmd_run({c, again, nullptr});
  auto slurp = [](const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
  };
  int files = 0, differ = 0;
  for (const auto& e : fs::recursive_directory_iterator(first.paths.root)) {
    if (!e.is_regular_file()) continue;
    ++files;
    const fs::path rel = fs::relative(e.path(), first.paths.root);
    differ += slurp(e.path()) != slurp(again.root / rel);
  }
  return {differ == 0 && files > 0 && c.workers == reference_config().workers,
          fmt("%g of %g run files differ", differ, files)};
}

}  // namespace
}  // namespace groundrl

int main(int argc, char** argv) {
  using groundrl::Verdict;
  const std::vector<std::function<Verdict()>> criteria = {
      groundrl::criterion1, groundrl::criterion2, groundrl::criterion3,
      groundrl::criterion4, groundrl::criterion5, groundrl::criterion6,
      groundrl::criterion7, groundrl::criterion8, groundrl::criterion9,
      groundrl::criterion10};
  std::set<int> only;
  for (int i = 1; i < argc; ++i) only.insert(std::atoi(argv[i]));
  int failed = 0;
  for (size_t i = 0; i < criteria.size(); ++i) {
    const int n = static_cast<int>(i) + 1;
    if (!only.empty() && !only.count(n)) continue;
    Verdict v;
    try {
      v = criteria[i]();
    } catch (const std::exception& e) {
      v = {false, std::string("exception: ") + e.what()};
    }
    std::cout << (v.pass ? "PASS" : "FAIL") << " criterion " << n << ": "
              << v.detail << std::endl;
    failed += !v.pass;
  }
  return failed == 0 ? 0 : 1;
}
