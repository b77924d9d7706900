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

// Command-line driver for data generation, training, evaluation and
// inference.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "groundrl/checkpoint.h"
#include "groundrl/errors.h"
#include "groundrl/pipeline.h"

namespace fs = std::filesystem;
using namespace groundrl;

namespace {

enum ExitCode { kOk = 0, kFailure = 1, kConfig = 2, kGate = 3, kIo = 4 };

struct CommonOptions {
  std::string out;
  std::string config;
  std::vector<std::string> sets;
  std::string ablate;
  std::optional<uint64_t> seed;
  std::optional<int> workers;
};

void add_common(CLI::App* cmd, CommonOptions& o) {
  cmd->add_option("--out", o.out, "Run directory")->required();
  cmd->add_option("--config", o.config, "JSON config file");
  cmd->add_option("--set", o.sets, "Override a config field (path=value)");
  cmd->add_option("--ablate", o.ablate,
                  "Ablation preset or flag list (comma separated)");
  cmd->add_option("--seed", o.seed, "Global seed");
  cmd->add_option("--workers", o.workers, "Worker threads");
}

Json read_json_file(const fs::path& p) {
  std::ifstream in(p);
  if (!in) throw IoError("cannot read " + p.string());
  Json j = Json::parse(in, nullptr, false);
  if (j.is_discarded()) throw ConfigError(p.string() + " is not valid JSON");
  return j;
}

// defaults <- config file (or the run's saved config) <- --set <- flags
CommandContext resolve(const CommonOptions& o) {
  CommandContext ctx;
  ctx.paths.root = o.out;
  Json j = default_config_json();
  if (!o.config.empty()) {
    merge_config(j, read_json_file(o.config));
  } else if (fs::exists(ctx.paths.config())) {
    merge_config(j, read_json_file(ctx.paths.config()));
  }
  for (const auto& s : o.sets) apply_override(j, s);
  if (o.seed) j["seed"] = *o.seed;
  if (o.workers) j["workers"] = *o.workers;
  RunConfig c = run_config_from_json(j);
  if (!o.ablate.empty()) c.ablation = apply_ablation(c.ablation, o.ablate);
  ctx.config = c;
  ctx.out = &std::cout;
  return ctx;
}

int infer(const CommonOptions& o, const std::string& checkpoint,
          std::optional<uint64_t> case_seed, const std::string& image_file,
          const std::string& phrase) {
  CommandContext ctx = resolve(o);
  const RunConfig& c = ctx.config;
  const Vocabulary& vocab = Vocabulary::standard();
  SynthImage image;
  const GroundTruthCase* known = nullptr;
  Dataset d;
  if (case_seed) {
    d = load_dataset(ctx.paths, c.world.canvas);
    known = &d.case_for(*case_seed);
    image = known->image;
  } else if (!image_file.empty()) {
    const Json j = read_json_file(image_file);
    try {
      image.height = j.at("height").get<int>();
      image.width = j.at("width").get<int>();
      image.pixels = j.at("image").get<std::vector<int>>();
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError(image_file + ": " + e.what());
    }
  } else {
    throw ConfigError("infer needs --case or --image");
  }
  const Observation obs = encode_observation(image, c.world.canvas);
  const bool grounding = !phrase.empty();
  fs::path ckpt = checkpoint;
  if (ckpt.empty()) {
    ckpt = ctx.paths.checkpoint(grounding ? grounding_phase(c.ablation)
                                          : Phase::kThetaHat);
  }
  if (!fs::exists(ckpt)) throw IoError("missing checkpoint " + ckpt.string());
  Checkpoint ck = load_checkpoint(ckpt, policy_config(c), vocab.hash());
  if (!ck.base) throw CheckpointError(ckpt.string() + " has no base parameters");

  if (!grounding) {
    const AdapterParams* ad = ck.adapter ? &*ck.adapter : nullptr;
    const Tokens report = generate_report(*ck.base, ad, obs, c.eval.max_report_len);
    std::cout << "report: " << join_tokens(report) << '\n';
    return kOk;
  }
  Tokens prompt = {std::string(tok::kBos), std::string(tok::kImage), "locate"};
  const Tokens words = split_tokens(phrase);
  prompt.insert(prompt.end(), words.begin(), words.end());
  GroundingTask task;
  task.obs = obs;
  task.prompt = vocab.encode(prompt);
  task.canvas = c.world.canvas;
  std::optional<BBox> gt;
  if (known != nullptr) {
    for (const Lesion& l : known->lesions) {
      if (finding_phrases(l.disease)[l.phrase] == words) gt = l.box;
    }
  }
  const Rollout r =
      greedy_decode(*ck.base, nullptr, obs, task.prompt, c.rl.max_response_len);
  const Tokens text = vocab.decode(r.body());
  const ParsedResponse parsed = parse_response(text);
  std::cout << "response: " << join_tokens(text) << '\n';
  std::cout << "format_reward: " << format_reward(parsed) << '\n';
  if (parsed.answer_box) {
    std::cout << "box: " << *parsed.answer_box << '\n';
  } else {
    std::cout << "box: none\n";
  }
  if (gt) {
    std::cout << "ground_truth: " << *gt << '\n';
    std::cout << "iou: " << iou_reward(parsed, *gt, c.world.canvas) << '\n';
  }
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Grounded report generation: data, training and evaluation"};
  app.require_subcommand(1);

  CommonOptions gen_o, mcl_o, svr_o, ad_o, eval_o, infer_o, run_o;
  int cases = 0;
  auto* gen = app.add_subcommand("gen-data", "Generate the synthetic dataset");
  add_common(gen, gen_o);
  gen->add_option("--cases", cases, "Number of cases");

  auto* mcl = app.add_subcommand("train-mcl", "Chain-of-thought concept learning");
  add_common(mcl, mcl_o);

  std::string svr_from, ad_from;
  auto* svr = app.add_subcommand("train-svr", "Box-rewarded group RL");
  add_common(svr, svr_o);
  svr->add_option("--from", svr_from, "Input checkpoint (default: from the run)");

  auto* ad = app.add_subcommand("train-adapter", "Report adapter on a frozen base");
  add_common(ad, ad_o);
  ad->add_option("--from", ad_from, "Input checkpoint (default: from the run)");

  std::string compare;
  bool oracle = false;
  auto* ev = app.add_subcommand("evaluate", "Score the test split");
  add_common(ev, eval_o);
  ev->add_option("--compare", compare, "Run directory to test against");
  ev->add_flag("--oracle", oracle, "Score ground truth as the model output");

  std::string ckpt, image_file, phrase;
  std::optional<uint64_t> case_id;
  auto* inf = app.add_subcommand("infer", "Decode a report or a grounding");
  add_common(inf, infer_o);
  inf->add_option("--checkpoint", ckpt, "Checkpoint file");
  inf->add_option("--case", case_id, "Case seed from the run's dataset");
  inf->add_option("--image", image_file, "JSON file with height, width, image");
  inf->add_option("--ground", phrase, "Finding phrase to localize");

  auto* run = app.add_subcommand("run", "All enabled phases, then evaluate");
  add_common(run, run_o);
  run->add_option("--cases", cases, "Number of cases");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfig;
  }

  try {
    if (gen->parsed() || run->parsed()) {
      CommonOptions& o = gen->parsed() ? gen_o : run_o;
      if (cases > 0) o.sets.push_back("data.cases=" + std::to_string(cases));
      const CommandContext ctx = resolve(o);
      if (gen->parsed()) {
        cmd_gen_data(ctx);
      } else {
        cmd_run(ctx);
      }
    } else if (mcl->parsed()) {
      cmd_train_mcl(resolve(mcl_o));
    } else if (svr->parsed()) {
      cmd_train_svr(resolve(svr_o), svr_from.empty()
                                        ? std::nullopt
                                        : std::optional<fs::path>(svr_from));
    } else if (ad->parsed()) {
      cmd_train_adapter(resolve(ad_o), ad_from.empty()
                                           ? std::nullopt
                                           : std::optional<fs::path>(ad_from));
    } else if (ev->parsed()) {
      cmd_evaluate(resolve(eval_o),
                   compare.empty() ? std::nullopt
                                   : std::optional<fs::path>(compare),
                   oracle);
    } else if (inf->parsed()) {
      return infer(infer_o, ckpt, case_id, image_file, phrase);
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfig;
  } catch (const VocabularyError& e) {
    std::cerr << "vocabulary error: " << e.what() << '\n';
    return kConfig;
  } catch (const PhaseGateError& e) {
    std::cerr << "phase gate: " << e.what() << '\n';
    return kGate;
  } catch (const IntegrityError& e) {
    std::cerr << "integrity: " << e.what() << '\n';
    return kGate;
  } catch (const IoError& e) {
    std::cerr << "i/o error: " << e.what() << '\n';
    return kIo;
  } catch (const CheckpointError& e) {
    std::cerr << "checkpoint error: " << e.what() << '\n';
    return kIo;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "i/o error: " << e.what() << '\n';
    return kIo;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kFailure;
  }
  return kOk;
}
