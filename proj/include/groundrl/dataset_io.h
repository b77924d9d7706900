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

#ifndef GROUNDRL_DATASET_IO_H_
#define GROUNDRL_DATASET_IO_H_

#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"

#include "groundrl/synthworld.h"
#include "groundrl/vocabulary.h"

namespace groundrl {

using Json = nlohmann::ordered_json;

Json case_to_json(const GroundTruthCase& c);
// Throws Error on schema violations.
GroundTruthCase case_from_json(const Json& j);

Json box_to_json(const BBox& b);
BBox box_from_json(const Json& j);
Json tokens_to_json(const Tokens& t);
Tokens tokens_from_json(const Json& j);

// One compact JSON document per line.
void write_jsonl(const std::filesystem::path& path,
                 const std::vector<Json>& rows);
std::vector<Json> read_jsonl(const std::filesystem::path& path);

// Supervised pair for the sequence-level trainers: prompt tokens condition,
// target tokens (ending in <eos>) are scored.
struct SupervisedExample {
  uint64_t case_seed = 0;
  Tokens prompt;
  Tokens target;
};

struct GroundingExample {
  uint64_t case_seed = 0;
  size_t lesion_index = 0;
  Tokens prompt;
  BBox gt_box;
};

Json supervised_to_json(const SupervisedExample& e);
SupervisedExample supervised_from_json(const Json& j);
Json grounding_to_json(const GroundingExample& e);
GroundingExample grounding_from_json(const Json& j);

enum class Split { kTrain, kValidation, kTest };

// 80/10/10 split keyed on a hash of the case seed.
Split split_of(uint64_t case_seed);
const char* split_name(Split s);

}  // namespace groundrl

#endif  // GROUNDRL_DATASET_IO_H_
