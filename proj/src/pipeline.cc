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

#include "groundrl/pipeline.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <future>
#include <numeric>
#include <sstream>

#include "groundrl/checkpoint.h"
#include "groundrl/errors.h"
#include "groundrl/rng.h"

namespace groundrl {

namespace fs = std::filesystem;
using J = nlohmann::ordered_json;

// ---------------------------------------------------------------------------
// Configuration

J default_config_json() {
  const RunConfig d;
  return run_config_to_json(d);
}

J run_config_to_json(const RunConfig& c) {
  J j;
  j["seed"] = c.seed;
  j["workers"] = c.workers;
  j["world"] = {{"height", c.world.canvas.height},
                {"width", c.world.canvas.width},
                {"min_lesions", c.world.min_lesions},
                {"max_lesions", c.world.max_lesions},
                {"comparison_probability", c.world.comparison_probability}};
  j["data"] = {{"cases", c.data.cases},
               {"disjoint_pools", c.data.disjoint_pools}};
  j["policy"] = {{"context", c.policy.context},
                 {"embed_dim", c.policy.embed_dim},
                 {"hidden", c.policy.hidden},
                 {"init_scale", c.policy.init_scale}};
  auto supervised = [](const SupervisedConfig& s) {
    return J{{"learning_rate", s.learning_rate},
             {"lr_floor", s.lr_floor},
             {"epochs", s.epochs},
             {"batch_size", s.batch_size},
             {"optimizer", optimizer_name(s.optimizer)},
             {"weight_decay", s.weight_decay}};
  };
  j["mcl"] = supervised(c.mcl);
  j["rl"] = {{"group_size", c.rl.group_size},
             {"kl_beta", c.rl.kl_beta},
             {"learning_rate", c.rl.learning_rate},
             {"epochs", c.rl.epochs},
             {"max_response_len", c.rl.max_response_len},
             {"advantage_epsilon", c.rl.advantage_epsilon},
             {"temperature", c.rl.temperature},
             {"optimizer", optimizer_name(c.rl.optimizer)}};
  J adapter = supervised(c.adapter.train);
  adapter["rank"] = c.adapter.rank;
  j["adapter"] = adapter;
  j["ablation"] = {{"skip_mcl", c.ablation.skip_mcl},
                   {"skip_svr", c.ablation.skip_svr},
                   {"freeze_obs_proj", c.ablation.freeze_obs_proj},
                   {"freeze_ctx_proj", c.ablation.freeze_ctx_proj},
                   {"adapter_on", c.ablation.adapter_on}};
  j["eval"] = {{"max_report_len", c.eval.max_report_len}};
  return j;
}

namespace {

std::string kind_of(const J& v) {
  if (v.is_boolean()) return "boolean";
  if (v.is_number_integer()) return "integer";
  if (v.is_number()) return "number";
  if (v.is_string()) return "string";
  if (v.is_object()) return "object";
  return v.type_name();
}

bool compatible(const J& base, const J& v) {
  if (base.is_object()) return v.is_object();
  if (base.is_boolean()) return v.is_boolean();
  if (base.is_string()) return v.is_string();
  if (base.is_number_integer()) return v.is_number_integer();
  if (base.is_number()) return v.is_number();
  return false;
}

void merge_at(J& base, const J& patch, const std::string& where) {
  if (!patch.is_object()) throw ConfigError(where + ": expected an object");
  for (auto it = patch.begin(); it != patch.end(); ++it) {
    const std::string path = where.empty() ? it.key() : where + "." + it.key();
    if (!base.contains(it.key())) throw ConfigError("unknown config key: " + path);
    J& slot = base[it.key()];
    if (!compatible(slot, it.value())) {
      throw ConfigError("config key " + path + " expects " + kind_of(slot) +
                        ", got " + kind_of(it.value()));
    }
    if (slot.is_object()) {
      merge_at(slot, it.value(), path);
    } else if (slot.is_number_float()) {
      slot = it.value().get<double>();
    } else {
      slot = it.value();
    }
  }
}

SupervisedConfig supervised_from(const J& j) {
  SupervisedConfig s;
  s.learning_rate = j.at("learning_rate").get<double>();
  s.lr_floor = j.at("lr_floor").get<double>();
  s.epochs = j.at("epochs").get<int>();
  s.batch_size = j.at("batch_size").get<int>();
  s.optimizer = optimizer_from_name(j.at("optimizer").get<std::string>());
  s.weight_decay = j.at("weight_decay").get<double>();
  return s;
}

void validate(const SupervisedConfig& s, const char* name) {
  const std::string n(name);
  if (!(s.learning_rate > 0.0)) throw ConfigError(n + ".learning_rate must be > 0");
  if (!(s.lr_floor >= 0.0) || s.lr_floor > s.learning_rate) {
    throw ConfigError(n + ".lr_floor must lie in [0, learning_rate]");
  }
  if (s.epochs < 0) throw ConfigError(n + ".epochs must be >= 0");
  if (s.batch_size < 1) throw ConfigError(n + ".batch_size must be >= 1");
  if (!(s.weight_decay >= 0.0)) throw ConfigError(n + ".weight_decay must be >= 0");
}

}  // namespace

void merge_config(J& base, const J& patch) { merge_at(base, patch, ""); }

void apply_override(J& j, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) {
    throw ConfigError("--set expects path=value, got '" + assignment + "'");
  }
  const std::string path = assignment.substr(0, eq);
  const std::string text = assignment.substr(eq + 1);
  J value = J::parse(text, nullptr, false);
  if (value.is_discarded()) value = text;
  // Build a nested patch from the dotted path.
  J patch = value;
  std::vector<std::string> keys;
  std::stringstream ss(path);
  for (std::string k; std::getline(ss, k, '.');) keys.push_back(k);
  for (auto k = keys.rbegin(); k != keys.rend(); ++k) {
    if (k->empty()) throw ConfigError("empty key in --set path '" + path + "'");
    patch = J{{*k, patch}};
  }
  merge_config(j, patch);
}

RunConfig run_config_from_json(const J& user) {
  J j = default_config_json();
  merge_config(j, user);
  RunConfig c;
  try {
    c.seed = j.at("seed").get<uint64_t>();
    c.workers = j.at("workers").get<int>();
    const J& w = j.at("world");
    c.world.canvas.height = w.at("height").get<int>();
    c.world.canvas.width = w.at("width").get<int>();
    c.world.min_lesions = w.at("min_lesions").get<int>();
    c.world.max_lesions = w.at("max_lesions").get<int>();
    c.world.comparison_probability = w.at("comparison_probability").get<double>();
    c.data.cases = j.at("data").at("cases").get<int>();
    c.data.disjoint_pools = j.at("data").at("disjoint_pools").get<bool>();
    const J& p = j.at("policy");
    c.policy.context = p.at("context").get<int>();
    c.policy.embed_dim = p.at("embed_dim").get<int>();
    c.policy.hidden = p.at("hidden").get<int>();
    c.policy.init_scale = p.at("init_scale").get<double>();
    c.mcl = supervised_from(j.at("mcl"));
    const J& r = j.at("rl");
    c.rl.group_size = r.at("group_size").get<int>();
    c.rl.kl_beta = r.at("kl_beta").get<double>();
    c.rl.learning_rate = r.at("learning_rate").get<double>();
    c.rl.epochs = r.at("epochs").get<int>();
    c.rl.max_response_len = r.at("max_response_len").get<int>();
    c.rl.advantage_epsilon = r.at("advantage_epsilon").get<double>();
    c.rl.temperature = r.at("temperature").get<double>();
    c.rl.optimizer = optimizer_from_name(r.at("optimizer").get<std::string>());
    c.adapter.train = supervised_from(j.at("adapter"));
    c.adapter.rank = j.at("adapter").at("rank").get<int>();
    const J& a = j.at("ablation");
    c.ablation.skip_mcl = a.at("skip_mcl").get<bool>();
    c.ablation.skip_svr = a.at("skip_svr").get<bool>();
    c.ablation.freeze_obs_proj = a.at("freeze_obs_proj").get<bool>();
    c.ablation.freeze_ctx_proj = a.at("freeze_ctx_proj").get<bool>();
    c.ablation.adapter_on = a.at("adapter_on").get<bool>();
    c.eval.max_report_len = j.at("eval").at("max_report_len").get<int>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("bad config value: ") + e.what());
  }
  validate(c.world);
  if (c.world.canvas.height != 64 || c.world.canvas.width != 64) {
    throw ConfigError("the token vocabulary covers a 64x64 canvas only");
  }
  if (c.data.cases < 1) throw ConfigError("data.cases must be >= 1");
  if (c.workers < 1) throw ConfigError("workers must be >= 1");
  if (c.policy.context < 1 || c.policy.embed_dim < 1 || c.policy.hidden < 1) {
    throw ConfigError("policy dimensions must be positive");
  }
  if (!(c.policy.init_scale >= 0.0)) throw ConfigError("policy.init_scale must be >= 0");
  validate(c.mcl, "mcl");
  validate(c.adapter.train, "adapter");
  if (c.adapter.rank < 1) throw ConfigError("adapter.rank must be >= 1");
  if (c.eval.max_report_len < 1) throw ConfigError("eval.max_report_len must be >= 1");
  c.rl.seed = derive_seed({c.seed, 0x5f12});
  c.rl.workers = c.workers;
  validate(c.rl);
  return c;
}

namespace {

struct Preset {
  const char* name;
  void (*apply)(AblationFlags&);
};

const Preset kPresets[] = {
    {"full", [](AblationFlags&) {}},
    {"wo-mcl", [](AblationFlags& f) { f.skip_mcl = true; }},
    {"wo-svr", [](AblationFlags& f) { f.skip_svr = true; }},
    {"wo-mcl-svr",
     [](AblationFlags& f) {
       f.skip_mcl = true;
       f.skip_svr = true;
     }},
    {"tune-vision",
     [](AblationFlags& f) {
       f.freeze_obs_proj = false;
       f.adapter_on = false;
     }},
    {"tune-projector",
     [](AblationFlags& f) {
       f.freeze_ctx_proj = false;
       f.adapter_on = false;
     }},
    {"tune-vision-adapter", [](AblationFlags& f) { f.freeze_obs_proj = false; }},
    {"tune-projector-adapter",
     [](AblationFlags& f) { f.freeze_ctx_proj = false; }},
    {"adapter-only", [](AblationFlags&) {}},
    // Single flags.
    {"skip_mcl", [](AblationFlags& f) { f.skip_mcl = true; }},
    {"skip_svr", [](AblationFlags& f) { f.skip_svr = true; }},
    {"unfreeze_obs_proj", [](AblationFlags& f) { f.freeze_obs_proj = false; }},
    {"unfreeze_ctx_proj", [](AblationFlags& f) { f.freeze_ctx_proj = false; }},
    {"no_adapter", [](AblationFlags& f) { f.adapter_on = false; }},
};

}  // namespace

AblationFlags apply_ablation(AblationFlags flags, const std::string& spec) {
  std::stringstream ss(spec);
  for (std::string item; std::getline(ss, item, ',');) {
    if (item.empty()) continue;
    auto it = std::find_if(std::begin(kPresets), std::end(kPresets),
                           [&](const Preset& p) { return item == p.name; });
    if (it == std::end(kPresets)) {
      std::string known;
      for (const auto& p : kPresets) known += std::string(" ") + p.name;
      throw ConfigError("unknown ablation '" + item + "'; known:" + known);
    }
    it->apply(flags);
  }
  return flags;
}

std::vector<std::string> ablation_presets() {
  std::vector<std::string> out;
  for (const auto& p : kPresets) out.emplace_back(p.name);
  return out;
}

uint64_t case_seed(uint64_t run_seed, size_t index) {
  return derive_seed({run_seed, 0xca5e, static_cast<uint64_t>(index)});
}

uint64_t policy_init_seed(const RunConfig& c) {
  return derive_seed({c.seed, 0x1217});
}

uint64_t adapter_init_seed(const RunConfig& c) {
  return derive_seed({c.seed, 0xada});
}

PolicyConfig policy_config(const RunConfig& c) {
  PolicyConfig p = default_policy_config(Vocabulary::standard());
  p.context = c.policy.context;
  p.embed_dim = c.policy.embed_dim;
  p.hidden = c.policy.hidden;
  return p;
}

PolicyParams initial_policy(const RunConfig& c) {
  PolicyParams p = PolicyParams::init_uniform(
      policy_config(c), policy_init_seed(c), c.policy.init_scale);
  p.set_phase(Phase::kTheta);
  return p;
}

fs::path RunPaths::checkpoint(Phase p) const {
  return root / "checkpoints" / (std::string(phase_name(p)) + ".ckpt");
}

// ---------------------------------------------------------------------------
// Data

const GroundTruthCase& Dataset::case_for(uint64_t seed) const {
  auto it = by_seed.find(seed);
  if (it == by_seed.end()) throw Error("unknown case seed " + std::to_string(seed));
  return cases[it->second];
}

const Observation& Dataset::obs_for(uint64_t seed) const {
  auto it = by_seed.find(seed);
  if (it == by_seed.end()) throw Error("unknown case seed " + std::to_string(seed));
  return observations[it->second];
}

std::vector<GroundTruthCase> generate_cases(const RunConfig& c) {
  const size_t n = static_cast<size_t>(c.data.cases);
  std::vector<GroundTruthCase> out(n);
  const size_t workers = std::min<size_t>(static_cast<size_t>(c.workers), n);
  auto shard = [&](size_t w) {
    for (size_t i = w; i < n; i += workers) {
      out[i] = sample_case(case_seed(c.seed, i), c.world);
    }
  };
  if (workers <= 1) {
    shard(0);
  } else {
    std::vector<std::future<void>> jobs;
    for (size_t w = 0; w < workers; ++w) {
      jobs.push_back(std::async(std::launch::async, shard, w));
    }
    for (auto& j : jobs) j.get();
  }
  return out;
}

std::vector<SupervisedExample> cot_examples(const GroundTruthCase& c,
                                            const RegionMap& regions) {
  std::vector<SupervisedExample> out;
  for (const CoTStep& step : c.cot.steps) {
    SupervisedExample e;
    e.case_seed = c.seed;
    e.prompt = step_prompt(step);
    e.target = render_grounding_response(step, regions.box(step.region));
    e.target.emplace_back(tok::kEos);
    out.push_back(std::move(e));
  }
  return out;
}

std::vector<GroundingExample> grounding_examples(const GroundTruthCase& c) {
  std::vector<GroundingExample> out;
  for (size_t i = 0; i < c.lesions.size(); ++i) {
    const GroundingQuery q = render_grounding_query(c, i);
    out.push_back({c.seed, i, q.prompt, q.gt_box});
  }
  return out;
}

SupervisedExample report_example(const GroundTruthCase& c) {
  SupervisedExample e;
  e.case_seed = c.seed;
  e.prompt = report_prompt();
  e.target = c.report;
  e.target.emplace_back(tok::kEos);
  return e;
}

void write_dataset(const RunPaths& paths,
                   const std::vector<GroundTruthCase>& cases) {
  std::vector<Json> rows_cases, rows_cot, rows_ground, rows_reports;
  for (const auto& c : cases) {
    rows_cases.push_back(case_to_json(c));
    const RegionMap regions =
        build_region_map({c.image.height, c.image.width});
    for (const auto& e : cot_examples(c, regions)) {
      rows_cot.push_back(supervised_to_json(e));
    }
    for (const auto& g : grounding_examples(c)) {
      rows_ground.push_back(grounding_to_json(g));
    }
    rows_reports.push_back(supervised_to_json(report_example(c)));
  }
  fs::create_directories(paths.cases().parent_path());
  write_jsonl(paths.cases(), rows_cases);
  write_jsonl(paths.cot(), rows_cot);
  write_jsonl(paths.grounding(), rows_ground);
  write_jsonl(paths.reports(), rows_reports);
}

Dataset load_dataset(const RunPaths& paths, const Canvas& canvas) {
  for (const auto& p :
       {paths.cases(), paths.cot(), paths.grounding(), paths.reports()}) {
    if (!fs::exists(p)) {
      throw IoError("missing dataset file " + p.string() + " (run gen-data)");
    }
  }
  Dataset d;
  for (const auto& row : read_jsonl(paths.cases())) {
    d.cases.push_back(case_from_json(row));
  }
  for (size_t i = 0; i < d.cases.size(); ++i) {
    d.by_seed[d.cases[i].seed] = i;
    d.observations.push_back(encode_observation(d.cases[i].image, canvas));
  }
  auto known = [&](uint64_t seed, const char* file) {
    if (!d.by_seed.count(seed)) {
      throw Error(std::string(file) + " refers to unknown case " +
                  std::to_string(seed));
    }
  };
  for (const auto& row : read_jsonl(paths.cot())) {
    d.cot.push_back(supervised_from_json(row));
    known(d.cot.back().case_seed, "cot.jsonl");
  }
  for (const auto& row : read_jsonl(paths.grounding())) {
    d.grounding.push_back(grounding_from_json(row));
    known(d.grounding.back().case_seed, "grounding.jsonl");
  }
  for (const auto& row : read_jsonl(paths.reports())) {
    d.reports.push_back(supervised_from_json(row));
    known(d.reports.back().case_seed, "reports.jsonl");
  }
  return d;
}

namespace {

int pool_of(uint64_t case_seed) {
  return static_cast<int>(mix64(case_seed ^ 0x9001) % 2);
}

}  // namespace

bool in_mcl_pool(const RunConfig& c, uint64_t seed) {
  return split_of(seed) == Split::kTrain &&
         (!c.data.disjoint_pools || pool_of(seed) == 0);
}

bool in_svr_pool(const RunConfig& c, uint64_t seed) {
  return split_of(seed) == Split::kTrain &&
         (!c.data.disjoint_pools || pool_of(seed) == 1);
}

std::vector<GroundingTask> grounding_tasks(const Dataset& d, Split split,
                                           const RunConfig& c,
                                           bool svr_pool_only) {
  const Vocabulary& vocab = Vocabulary::standard();
  std::vector<GroundingTask> out;
  for (size_t i = 0; i < d.grounding.size(); ++i) {
    const GroundingExample& g = d.grounding[i];
    if (split_of(g.case_seed) != split) continue;
    if (svr_pool_only && !in_svr_pool(c, g.case_seed)) continue;
    GroundingTask t;
    t.query_id = i;
    t.obs = d.obs_for(g.case_seed);
    t.prompt = vocab.encode(g.prompt);
    t.gt_box = g.gt_box;
    t.canvas = c.world.canvas;
    out.push_back(std::move(t));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Training

namespace {

std::vector<ParamRange> base_ranges(const PolicyParams& p,
                                    const TrainableMask& mask) {
  std::vector<ParamRange> r;
  for (int b = 0; b < kNumBlocks; ++b) {
    const Block blk = static_cast<Block>(b);
    if (mask.trains(blk)) r.emplace_back(p.block_offset(blk), p.block_size(blk));
  }
  return r;
}

bool trains_any(const TrainableMask& m) {
  return m.adapter ||
         std::any_of(m.base.begin(), m.base.end(), [](bool b) { return b; });
}

void write_line(std::ostream* log, const J& j) {
  if (log != nullptr) *log << j.dump() << '\n';
}

std::vector<SequenceExample> sequence_examples(
    const Dataset& d, const std::vector<SupervisedExample>& rows,
    const std::function<bool(uint64_t)>& keep) {
  const Vocabulary& vocab = Vocabulary::standard();
  std::vector<SequenceExample> out;
  for (const auto& r : rows) {
    if (!keep(r.case_seed)) continue;
    out.push_back({&d.obs_for(r.case_seed), vocab.encode(r.prompt),
                   vocab.encode(r.target)});
  }
  return out;
}

std::ofstream open_log(const fs::path& path) {
  fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  return out;
}

}  // namespace

SupervisedLog supervised_train(PolicyParams& params, AdapterParams* adapter,
                               const std::vector<SequenceExample>& examples,
                               const SupervisedConfig& config,
                               const TrainableMask& mask, uint64_t seed,
                               std::ostream* log) {
  SupervisedLog out;
  if (config.epochs == 0 || !trains_any(mask)) return out;
  if (examples.empty()) throw ConfigError("no training examples");
  const AdamWConfig adam{0.9, 0.999, 1e-8, config.weight_decay};
  Optimizer base_opt(config.optimizer, params.values().size(), adam);
  std::optional<Optimizer> adapter_opt;
  if (adapter != nullptr) {
    adapter_opt.emplace(config.optimizer, adapter->values().size(), adam);
  }
  const std::vector<ParamRange> ranges = base_ranges(params, mask);
  const ParamRange adapter_all{0, adapter ? adapter->values().size() : 0};

  const size_t bs = static_cast<size_t>(config.batch_size);
  const size_t per_epoch = (examples.size() + bs - 1) / bs;
  const size_t total = per_epoch * static_cast<size_t>(config.epochs);
  std::vector<size_t> order(examples.size());
  size_t step = 0;
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), size_t{0});
    Rng rng(derive_seed({seed, static_cast<uint64_t>(epoch)}));
    for (size_t i = order.size(); i > 1; --i) {
      const auto j = static_cast<size_t>(rng.uniform_int(0, static_cast<int64_t>(i) - 1));
      std::swap(order[i - 1], order[j]);
    }
    double epoch_loss = 0.0;
    for (size_t b = 0; b < per_epoch; ++b) {
      std::vector<SequenceExample> batch;
      for (size_t k = b * bs; k < std::min(examples.size(), (b + 1) * bs); ++k) {
        batch.push_back(examples[order[k]]);
      }
      const double lr =
          cosine_learning_rate(config.learning_rate, config.lr_floor, step, total);
      LossAndGradient lg = sft_loss_and_grad(params, adapter, batch, mask);
      if (!lg.grad.all_finite()) {
        throw NumericError("non-finite gradient at supervised step " +
                           std::to_string(step));
      }
      if (!ranges.empty()) base_opt.descend(params.values(), lg.grad.base, lr, ranges);
      if (adapter != nullptr && mask.adapter) {
        adapter_opt->descend(adapter->values(), lg.grad.adapter, lr,
                             {&adapter_all, 1});
      }
      out.step_losses.push_back(lg.loss);
      epoch_loss += lg.loss;
      write_line(log, {{"event", "step"}, {"step", step}, {"epoch", epoch},
                       {"lr", lr}, {"loss", lg.loss}});
      ++step;
    }
    out.epoch_mean_losses.push_back(epoch_loss / per_epoch);
    write_line(log, {{"event", "epoch"}, {"epoch", epoch},
                     {"mean_loss", out.epoch_mean_losses.back()}});
  }
  return out;
}

MclResult train_mcl(const RunConfig& c, const Dataset& d,
                    const PolicyParams& theta, std::ostream* log) {
  require_phase(theta, {Phase::kTheta}, "train-mcl");
  MclResult r;
  r.params = theta;
  const auto examples = sequence_examples(
      d, d.cot, [&](uint64_t s) { return in_mcl_pool(c, s); });
  r.log = supervised_train(r.params, nullptr, examples, c.mcl,
                           TrainableMask::base_only(),
                           derive_seed({c.seed, 0x3c1}), log);
  r.params.set_phase(Phase::kThetaPrime);
  return r;
}

TrainableMask adapter_phase_mask(const AblationFlags& f) {
  TrainableMask m;
  m.base.fill(false);
  m.base[static_cast<int>(Block::kObsProjection)] = !f.freeze_obs_proj;
  m.base[static_cast<int>(Block::kCtxProjection)] = !f.freeze_ctx_proj;
  m.adapter = f.adapter_on;
  return m;
}

uint64_t frozen_base_hash(const PolicyParams& p, const TrainableMask& mask) {
  uint64_t h = fnv1a("frozen");
  for (int b = 0; b < kNumBlocks; ++b) {
    const Block blk = static_cast<Block>(b);
    if (mask.trains(blk)) continue;
    const auto v = p.block(blk);
    h = fnv1a(std::string_view(reinterpret_cast<const char*>(v.data()),
                               v.size() * sizeof(double)),
              h);
  }
  return h;
}

AdapterResult train_adapter(const RunConfig& c, const Dataset& d,
                            const PolicyParams& base, std::ostream* log) {
  const auto allowed = adapter_input_phases(c.ablation);
  require_phase(base, allowed, "train-adapter");
  const TrainableMask mask = adapter_phase_mask(c.ablation);
  AdapterResult r;
  r.base = base;
  if (mask.adapter) {
    r.adapter = AdapterParams::init(base.config(), c.adapter.rank,
                                    adapter_init_seed(c));
  }
  AdapterParams* ad = r.adapter ? &*r.adapter : nullptr;
  const uint64_t frozen_before = frozen_base_hash(base, mask);
  const auto train = sequence_examples(d, d.reports, [](uint64_t s) {
    return split_of(s) == Split::kTrain;
  });
  const auto heldout = sequence_examples(d, d.reports, [](uint64_t s) {
    return split_of(s) == Split::kValidation;
  });
  r.log = supervised_train(r.base, ad, train, c.adapter.train, mask,
                           derive_seed({c.seed, 0xad7}), log);
  if (frozen_base_hash(r.base, mask) != frozen_before) {
    throw IntegrityError("frozen base parameters changed during adapter training");
  }
  if (!heldout.empty()) {
    r.heldout_nll_base = sft_loss(base, nullptr, heldout);
    r.heldout_nll_adapted = sft_loss(r.base, ad, heldout);
    write_line(log, {{"event", "heldout"},
                     {"examples", heldout.size()},
                     {"nll_base", r.heldout_nll_base},
                     {"nll_adapted", r.heldout_nll_adapted}});
  }
  if (!(r.base == base)) r.base.set_phase(Phase::kThetaHat);
  if (ad != nullptr) ad->set_base_version(r.base.content_hash());
  write_line(log, {{"event", "integrity"},
                   {"frozen_hash", hex64(frozen_before)},
                   {"base_version", hex64(r.base.content_hash())}});
  return r;
}

std::vector<Phase> svr_input_phases(const AblationFlags& f) {
  if (f.skip_mcl) return {Phase::kTheta};
  return {Phase::kThetaPrime};
}

std::vector<Phase> adapter_input_phases(const AblationFlags& f) {
  if (!f.skip_svr) return {Phase::kThetaDoublePrime};
  if (!f.skip_mcl) return {Phase::kThetaPrime};
  return {Phase::kTheta};
}

Phase grounding_phase(const AblationFlags& f) {
  return adapter_input_phases(f).front();
}

// ---------------------------------------------------------------------------
// Evaluation

std::vector<GroundingOutcome> evaluate_grounding(
    const PolicyParams& policy, const std::vector<GroundingTask>& tasks,
    const Dataset& d, int max_len) {
  const Vocabulary& vocab = Vocabulary::standard();
  std::vector<GroundingOutcome> out;
  for (const GroundingTask& t : tasks) {
    const Rollout r = greedy_decode(policy, nullptr, t.obs, t.prompt, max_len);
    GroundingOutcome o;
    o.query_id = t.query_id;
    o.case_seed = d.grounding.at(t.query_id).case_seed;
    o.response = vocab.decode(r.body());
    o.reward = score_response(r.body(), t, vocab);
    out.push_back(std::move(o));
  }
  return out;
}

GroundingSummary summarize(const std::vector<GroundingOutcome>& outcomes) {
  GroundingSummary s;
  s.queries = outcomes.size();
  if (outcomes.empty()) return s;
  for (const auto& o : outcomes) {
    s.mean_iou_reward += o.reward.r_iou;
    s.format_hit_rate += o.reward.r_format;
    s.mean_total_reward += o.reward.total;
  }
  const double n = static_cast<double>(outcomes.size());
  s.mean_iou_reward /= n;
  s.format_hit_rate /= n;
  s.mean_total_reward /= n;
  return s;
}

Tokens generate_report(const PolicyParams& base, const AdapterParams* adapter,
                       const Observation& obs, int max_len) {
  const Vocabulary& vocab = Vocabulary::standard();
  const Rollout r = greedy_decode(base, adapter, obs,
                                  vocab.encode(report_prompt()), max_len);
  return vocab.decode(r.body());
}

Evaluation score_run(const std::vector<const GroundTruthCase*>& cases,
                     const std::vector<Tokens>& reports,
                     const std::vector<GroundingOutcome>& grounding,
                     const std::string& split) {
  if (cases.size() != reports.size()) {
    throw Error("score_run: one report per case required");
  }
  Evaluation ev;
  EvalReport& r = ev.report;
  r.split = split;
  r.cases = cases.size();
  std::vector<Tokens> refs;
  std::vector<LabelVector> pred, gt;
  for (size_t i = 0; i < cases.size(); ++i) {
    refs.push_back(cases[i]->report);
    pred.push_back(extract_labels(reports[i]));
    gt.push_back(labels_of(cases[i]->lesions));
  }
  if (!cases.empty()) {
    r.bleu = bleu(reports, refs, 4);
    r.rouge = rouge_l(reports, refs);
    r.meteor = meteor_exact(reports, refs);
  } else {
    r.bleu.assign(4, 0.0);
  }
  r.classification = classification_metrics(pred, gt);
  r.grounding = summarize(grounding);

  std::map<uint64_t, std::vector<const GroundingOutcome*>> by_case;
  for (const auto& o : grounding) by_case[o.case_seed].push_back(&o);
  for (size_t i = 0; i < cases.size(); ++i) {
    PerCase p;
    p.case_seed = cases[i]->seed;
    p.report = reports[i];
    p.rouge_l = rouge_l_sentence(reports[i], refs[i]).f1;
    p.meteor = meteor_sentence(reports[i], refs[i]);
    size_t agree = 0;
    for (int k = 0; k < kNumDiseases; ++k) agree += pred[i][k] == gt[i][k];
    p.label_accuracy = static_cast<double>(agree) / kNumDiseases;
    const CriteriaCounts cc = green_criteria(
        parse_report_structure(reports[i]), structure_of(*cases[i]));
    r.criteria += cc;
    p.criteria_errors = cc.errors();
    auto it = by_case.find(p.case_seed);
    if (it != by_case.end()) {
      double total = 0.0, iou = 0.0;
      for (const auto* o : it->second) {
        total += o->reward.total;
        iou += o->reward.r_iou;
      }
      p.total_reward = total / it->second.size();
      p.iou_reward = iou / it->second.size();
    }
    ev.cases.push_back(std::move(p));
  }
  return ev;
}

J per_case_to_json(const PerCase& p) {
  J j;
  j["case_seed"] = p.case_seed;
  j["report"] = join_tokens(p.report);
  j["total_reward"] = p.total_reward ? J(*p.total_reward) : J(nullptr);
  j["iou_reward"] = p.iou_reward ? J(*p.iou_reward) : J(nullptr);
  j["rouge_l"] = p.rouge_l;
  j["meteor"] = p.meteor;
  j["label_accuracy"] = p.label_accuracy;
  j["criteria_errors"] = p.criteria_errors;
  return j;
}

PerCase per_case_from_json(const J& j) {
  try {
    PerCase p;
    p.case_seed = j.at("case_seed").get<uint64_t>();
    p.report = split_tokens(j.at("report").get<std::string>());
    if (!j.at("total_reward").is_null()) p.total_reward = j["total_reward"].get<double>();
    if (!j.at("iou_reward").is_null()) p.iou_reward = j["iou_reward"].get<double>();
    p.rouge_l = j.at("rouge_l").get<double>();
    p.meteor = j.at("meteor").get<double>();
    p.label_accuracy = j.at("label_accuracy").get<double>();
    p.criteria_errors = j.at("criteria_errors").get<size_t>();
    return p;
  } catch (const nlohmann::json::exception& e) {
    throw Error(std::string("bad per-case record: ") + e.what());
  }
}

std::vector<SignificanceEntry> compare_runs(const std::vector<PerCase>& mine,
                                            const std::vector<PerCase>& other) {
  std::map<uint64_t, const PerCase*> theirs;
  for (const auto& p : other) theirs[p.case_seed] = &p;
  if (theirs.size() != mine.size()) {
    throw Error("compared runs evaluate different case sets");
  }
  using Getter = std::optional<double> (*)(const PerCase&);
  const std::pair<const char*, Getter> metrics[] = {
      {"total_reward", [](const PerCase& p) { return p.total_reward; }},
      {"iou_reward", [](const PerCase& p) { return p.iou_reward; }},
      {"rouge_l", [](const PerCase& p) -> std::optional<double> { return p.rouge_l; }},
      {"meteor", [](const PerCase& p) -> std::optional<double> { return p.meteor; }},
      {"label_accuracy",
       [](const PerCase& p) -> std::optional<double> { return p.label_accuracy; }},
  };
  std::vector<SignificanceEntry> out;
  for (const auto& [name, get] : metrics) {
    std::vector<double> a, b;  // a: other run, b: this run
    for (const auto& p : mine) {
      auto it = theirs.find(p.case_seed);
      if (it == theirs.end()) throw Error("compared runs evaluate different case sets");
      const auto x = get(*it->second), y = get(p);
      if (x && y) {
        a.push_back(*x);
        b.push_back(*y);
      }
    }
    SignificanceEntry e;
    e.metric = name;
    try {
      e.result = wilcoxon_one_tailed(a, b);
      e.note = std::to_string(a.size()) + " paired cases";
    } catch (const UndefinedTestError& err) {
      e.note = err.what();
    }
    out.push_back(std::move(e));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Commands

namespace {

void say(const CommandContext& ctx, const std::string& msg) {
  if (ctx.out != nullptr) *ctx.out << msg << '\n';
}

void write_text(const fs::path& path, const std::string& text) {
  fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
  if (!out) throw IoError("write failed: " + path.string());
}

void save_config(const CommandContext& ctx) {
  write_text(ctx.paths.config(), run_config_to_json(ctx.config).dump(2) + "\n");
}

Checkpoint load(const CommandContext& ctx, const fs::path& path) {
  if (!fs::exists(path)) {
    throw IoError("missing checkpoint " + path.string());
  }
  return load_checkpoint(path, policy_config(ctx.config),
                         Vocabulary::standard().hash());
}

PolicyParams load_base(const CommandContext& ctx, const fs::path& path) {
  Checkpoint ck = load(ctx, path);
  if (!ck.base) throw CheckpointError(path.string() + " has no base parameters");
  return std::move(*ck.base);
}

void save_base(const fs::path& path, const PolicyParams& p) {
  fs::create_directories(path.parent_path());
  save_checkpoint(path, &p, nullptr, Vocabulary::standard().hash());
}

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(4);
  os << std::fixed << v;
  return os.str();
}

}  // namespace

void cmd_gen_data(const CommandContext& ctx) {
  save_config(ctx);
  const auto cases = generate_cases(ctx.config);
  write_dataset(ctx.paths, cases);
  size_t findings = 0, queries = 0;
  for (const auto& c : cases) {
    findings += c.cot.steps.size();
    queries += c.lesions.size();
  }
  say(ctx, "gen-data: " + std::to_string(cases.size()) + " cases, " +
               std::to_string(findings) + " chain-of-thought steps, " +
               std::to_string(queries) + " grounding queries");
}

void cmd_train_mcl(const CommandContext& ctx) {
  if (ctx.config.ablation.skip_mcl) {
    throw ConfigError("train-mcl is disabled by the skip_mcl ablation");
  }
  save_config(ctx);
  const Dataset d = load_dataset(ctx.paths, ctx.config.world.canvas);
  const PolicyParams theta = initial_policy(ctx.config);
  save_base(ctx.paths.checkpoint(Phase::kTheta), theta);
  std::ofstream log = open_log(ctx.paths.mcl_log());
  const MclResult r = train_mcl(ctx.config, d, theta, &log);
  save_base(ctx.paths.checkpoint(Phase::kThetaPrime), r.params);
  std::string msg = "train-mcl: " + std::to_string(r.log.step_losses.size()) + " steps";
  if (!r.log.step_losses.empty()) {
    msg += ", loss " + fmt(r.log.step_losses.front()) + " -> " +
           fmt(r.log.epoch_mean_losses.back()) + " (last epoch mean)";
  }
  say(ctx, msg);
}

void cmd_train_svr(const CommandContext& ctx,
                   const std::optional<fs::path>& input) {
  const RunConfig& c = ctx.config;
  if (c.ablation.skip_svr) {
    throw ConfigError("train-svr is disabled by the skip_svr ablation");
  }
  save_config(ctx);
  const Dataset d = load_dataset(ctx.paths, c.world.canvas);
  PolicyParams start;
  if (input) {
    start = load_base(ctx, *input);
  } else if (c.ablation.skip_mcl) {
    start = initial_policy(c);
    save_base(ctx.paths.checkpoint(Phase::kTheta), start);
  } else {
    start = load_base(ctx, ctx.paths.checkpoint(Phase::kThetaPrime));
  }
  const auto allowed = svr_input_phases(c.ablation);
  require_phase(start, allowed, "train-svr");
  const auto tasks = grounding_tasks(d, Split::kTrain, c, true);
  std::ofstream log = open_log(ctx.paths.svr_log());
  SvrOptions opts;
  opts.allow_untrained = c.ablation.skip_mcl;
  opts.log = &log;
  const SvrResult r = svr_train(start, tasks, c.rl, opts);
  save_base(ctx.paths.checkpoint(Phase::kThetaDoublePrime), r.params);
  std::string msg = "train-svr: " + std::to_string(tasks.size()) +
                    " queries x " + std::to_string(c.rl.epochs) + " epochs";
  if (!r.epochs.empty()) {
    msg += ", mean IoU reward " + fmt(r.epochs.front().mean_iou_reward) +
           " -> " + fmt(r.epochs.back().mean_iou_reward) + ", format rate " +
           fmt(r.epochs.front().format_hit_rate) + " -> " +
           fmt(r.epochs.back().format_hit_rate);
  }
  say(ctx, msg);
}

void cmd_train_adapter(const CommandContext& ctx,
                       const std::optional<fs::path>& input) {
  const RunConfig& c = ctx.config;
  save_config(ctx);
  const Dataset d = load_dataset(ctx.paths, c.world.canvas);
  const fs::path in = input ? *input
                            : ctx.paths.checkpoint(grounding_phase(c.ablation));
  const PolicyParams base = load_base(ctx, in);
  const uint64_t before = base.content_hash();
  std::ofstream log = open_log(ctx.paths.adapter_log());
  const AdapterResult r = train_adapter(c, d, base, &log);
  const TrainableMask mask = adapter_phase_mask(c.ablation);
  const bool base_frozen =
      !mask.trains(Block::kObsProjection) && !mask.trains(Block::kCtxProjection);
  if (base_frozen && r.base.content_hash() != before) {
    throw IntegrityError("base parameter hash changed during adapter training");
  }
  const fs::path out = ctx.paths.checkpoint(Phase::kThetaHat);
  fs::create_directories(out.parent_path());
  save_checkpoint(out, &r.base, r.adapter ? &*r.adapter : nullptr,
                  Vocabulary::standard().hash());
  say(ctx, "train-adapter: held-out report NLL " + fmt(r.heldout_nll_base) +
               " (base) -> " + fmt(r.heldout_nll_adapted) + " (adapted), base " +
               hex64(before) + (base_frozen ? " unchanged" : " partially trained"));
}

EvalReport cmd_evaluate(const CommandContext& ctx,
                        const std::optional<fs::path>& compare, bool oracle) {
  const RunConfig& c = ctx.config;
  const Dataset d = load_dataset(ctx.paths, c.world.canvas);
  std::vector<const GroundTruthCase*> cases;
  for (const auto& gc : d.cases) {
    if (split_of(gc.seed) == Split::kTest) cases.push_back(&gc);
  }
  const auto tasks = grounding_tasks(d, Split::kTest, c);
  std::vector<Tokens> reports;
  std::vector<GroundingOutcome> grounding;
  if (oracle) {
    for (const auto* gc : cases) reports.push_back(gc->report);
    for (const auto& t : tasks) {
      const GroundingExample& g = d.grounding.at(t.query_id);
      const GroundTruthCase& gc = d.case_for(g.case_seed);
      const Tokens resp = render_grounding_response(
          gc.cot.steps.at(g.lesion_index), g.gt_box);
      const auto body = Vocabulary::standard().encode(resp);
      grounding.push_back({t.query_id, g.case_seed, resp,
                           score_response(body, t, Vocabulary::standard())});
    }
  } else {
    const PolicyParams ground =
        load_base(ctx, ctx.paths.checkpoint(grounding_phase(c.ablation)));
    Checkpoint hat = load(ctx, ctx.paths.checkpoint(Phase::kThetaHat));
    if (!hat.base) throw CheckpointError("adapter checkpoint has no base");
    const AdapterParams* ad = hat.adapter ? &*hat.adapter : nullptr;
    for (const auto* gc : cases) {
      reports.push_back(generate_report(*hat.base, ad, d.obs_for(gc->seed),
                                        c.eval.max_report_len));
    }
    grounding = evaluate_grounding(ground, tasks, d, c.rl.max_response_len);
  }
  Evaluation ev = score_run(cases, reports, grounding, "test");
  if (compare) {
    const RunPaths other{*compare};
    std::vector<PerCase> theirs;
    for (const auto& row : read_jsonl(other.eval_cases())) {
      theirs.push_back(per_case_from_json(row));
    }
    ev.report.compared_to = compare->filename().string();
    if (ev.report.compared_to.empty()) ev.report.compared_to = compare->string();
    ev.report.significance = compare_runs(ev.cases, theirs);
  }
  std::vector<Json> rows;
  for (const auto& p : ev.cases) rows.push_back(per_case_to_json(p));
  fs::create_directories(ctx.paths.eval_json().parent_path());
  write_jsonl(ctx.paths.eval_cases(), rows);
  write_text(ctx.paths.eval_json(), to_json(ev.report).dump(2) + "\n");
  write_text(ctx.paths.eval_csv(), to_csv(ev.report));
  const auto& r = ev.report;
  say(ctx, "evaluate: " + std::to_string(r.cases) + " test cases, BLEU-4 " +
               fmt(r.bleu.at(3)) + ", ROUGE-L " + fmt(r.rouge.f1) +
               ", METEOR " + fmt(r.meteor) + ", macro-F1 " +
               fmt(r.classification.macro_f1) + ", grounding reward " +
               fmt(r.grounding.mean_total_reward) + " (IoU " +
               fmt(r.grounding.mean_iou_reward) + ", format " +
               fmt(r.grounding.format_hit_rate) + ")");
  for (const auto& e : r.significance) {
    say(ctx, "  wilcoxon " + e.metric + ": " +
                 (e.result ? "p=" + std::to_string(e.result->p_value) : e.note));
  }
  return r;
}

EvalReport cmd_run(const CommandContext& ctx) {
  cmd_gen_data(ctx);
  if (!ctx.config.ablation.skip_mcl) cmd_train_mcl(ctx);
  if (!ctx.config.ablation.skip_svr) cmd_train_svr(ctx);
  if (ctx.config.ablation.skip_mcl && ctx.config.ablation.skip_svr) {
    save_base(ctx.paths.checkpoint(Phase::kTheta), initial_policy(ctx.config));
  }
  cmd_train_adapter(ctx);
  return cmd_evaluate(ctx, std::nullopt);
}

}  // namespace groundrl
