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

#include "groundrl/dataset_io.h"

#include <fstream>

#include "groundrl/errors.h"
#include "groundrl/rng.h"

namespace groundrl {
namespace {

template <typename T>
T require(const Json& j, const char* key) {
  if (!j.contains(key)) throw Error(std::string("missing field '") + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(std::string("bad field '") + key + "': " + e.what());
  }
}

int require_index(std::optional<int> v, const std::string& what) {
  if (!v) throw Error("unknown " + what);
  return *v;
}

}  // namespace

Json box_to_json(const BBox& b) { return Json::array({b.x1, b.y1, b.x2, b.y2}); }

BBox box_from_json(const Json& j) {
  if (!j.is_array() || j.size() != 4) throw Error("box must be [x1,y1,x2,y2]");
  return {j[0].get<int>(), j[1].get<int>(), j[2].get<int>(), j[3].get<int>()};
}

Json tokens_to_json(const Tokens& t) { return Json(t); }

Tokens tokens_from_json(const Json& j) {
  if (!j.is_array()) throw Error("token list must be an array");
  return j.get<Tokens>();
}

Json case_to_json(const GroundTruthCase& c) {
  Json j;
  j["seed"] = c.seed;
  j["height"] = c.image.height;
  j["width"] = c.image.width;
  j["image"] = c.image.pixels;
  Json lesions = Json::array();
  for (const Lesion& l : c.lesions) {
    Json lj;
    lj["disease"] = kDiseaseTokens[l.disease];
    lj["region"] = kRegionTokens[l.region];
    lj["severity"] = kSeverityTokens[static_cast<int>(l.severity)];
    lj["phrase"] = l.phrase;
    lj["box"] = box_to_json(l.box);
    lesions.push_back(std::move(lj));
  }
  j["lesions"] = std::move(lesions);
  j["report"] = tokens_to_json(c.report);
  Json cot = Json::array();
  for (const CoTStep& s : c.cot.steps) {
    Json sj;
    sj["finding"] = tokens_to_json(s.finding);
    sj["disease"] = kDiseaseTokens[s.disease];
    sj["region"] = kRegionTokens[s.region];
    cot.push_back(std::move(sj));
  }
  j["cot_version"] = kCotTemplateVersion;
  j["cot"] = std::move(cot);
  Json comps = Json::array();
  for (const Comparison& cmp : c.comparisons) {
    Json cj;
    cj["disease"] = kDiseaseTokens[cmp.disease];
    cj["change"] = cmp.change == Change::kImproved ? "improved" : "worsened";
    comps.push_back(std::move(cj));
  }
  j["comparisons"] = std::move(comps);
  return j;
}

GroundTruthCase case_from_json(const Json& j) {
  GroundTruthCase c;
  c.seed = require<uint64_t>(j, "seed");
  c.image.height = require<int>(j, "height");
  c.image.width = require<int>(j, "width");
  c.image.pixels = require<std::vector<int>>(j, "image");
  if (c.image.pixels.size() !=
      static_cast<size_t>(c.image.height) * c.image.width) {
    throw Error("image size does not match height x width");
  }
  for (const Json& lj : require<Json>(j, "lesions")) {
    Lesion l;
    l.disease = require_index(disease_index(require<std::string>(lj, "disease")),
                              "disease");
    l.region = require_index(region_index(require<std::string>(lj, "region")),
                             "region");
    auto sev = severity_from_token(require<std::string>(lj, "severity"));
    if (!sev) throw Error("unknown severity");
    l.severity = *sev;
    l.phrase = require<int>(lj, "phrase");
    if (l.disease == kNoFinding || l.phrase < 0 ||
        l.phrase >= static_cast<int>(finding_phrases(l.disease).size())) {
      throw Error("invalid lesion disease/phrase");
    }
    l.box = box_from_json(require<Json>(lj, "box"));
    c.lesions.push_back(l);
  }
  c.report = tokens_from_json(require<Json>(j, "report"));
  if (require<int>(j, "cot_version") != kCotTemplateVersion) {
    throw Error("unsupported cot_version");
  }
  for (const Json& sj : require<Json>(j, "cot")) {
    CoTStep s;
    s.finding = tokens_from_json(require<Json>(sj, "finding"));
    s.disease = require_index(
        disease_index(require<std::string>(sj, "disease")), "disease");
    s.region = require_index(region_index(require<std::string>(sj, "region")),
                             "region");
    c.cot.steps.push_back(std::move(s));
  }
  c.cot.serialized = serialize_cot(c.cot.steps);
  for (const Json& cj : require<Json>(j, "comparisons")) {
    Comparison cmp;
    cmp.disease = require_index(
        disease_index(require<std::string>(cj, "disease")), "disease");
    const auto change = require<std::string>(cj, "change");
    if (change != "improved" && change != "worsened") {
      throw Error("unknown change direction: " + change);
    }
    cmp.change = change == "improved" ? Change::kImproved : Change::kWorsened;
    c.comparisons.push_back(cmp);
  }
  return c;
}

void write_jsonl(const std::filesystem::path& path,
                 const std::vector<Json>& rows) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open for writing: " + path.string());
  for (const Json& r : rows) out << r.dump() << '\n';
  if (!out) throw IoError("write failed: " + path.string());
}

std::vector<Json> read_jsonl(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open for reading: " + path.string());
  std::vector<Json> rows;
  std::string line;
  size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      rows.push_back(Json::parse(line));
    } catch (const nlohmann::json::exception& e) {
      throw IoError(path.string() + ":" + std::to_string(lineno) + ": " +
                    e.what());
    }
  }
  return rows;
}

Json supervised_to_json(const SupervisedExample& e) {
  Json j;
  j["case_seed"] = e.case_seed;
  j["prompt"] = tokens_to_json(e.prompt);
  j["target"] = tokens_to_json(e.target);
  return j;
}

SupervisedExample supervised_from_json(const Json& j) {
  return {require<uint64_t>(j, "case_seed"),
          tokens_from_json(require<Json>(j, "prompt")),
          tokens_from_json(require<Json>(j, "target"))};
}

Json grounding_to_json(const GroundingExample& e) {
  Json j;
  j["case_seed"] = e.case_seed;
  j["lesion_index"] = e.lesion_index;
  j["prompt"] = tokens_to_json(e.prompt);
  j["gt_box"] = box_to_json(e.gt_box);
  return j;
}

GroundingExample grounding_from_json(const Json& j) {
  return {require<uint64_t>(j, "case_seed"), require<size_t>(j, "lesion_index"),
          tokens_from_json(require<Json>(j, "prompt")),
          box_from_json(require<Json>(j, "gt_box"))};
}

Split split_of(uint64_t case_seed) {
  const uint64_t bucket = mix64(case_seed ^ 0x51D17ULL) % 10;
  if (bucket < 8) return Split::kTrain;
  return bucket == 8 ? Split::kValidation : Split::kTest;
}

const char* split_name(Split s) {
  switch (s) {
    case Split::kTrain:
      return "train";
    case Split::kValidation:
      return "validation";
    case Split::kTest:
      return "test";
  }
  return "?";
}

}  // namespace groundrl
