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

#ifndef GROUNDRL_RESPONSE_PARSER_H_
#define GROUNDRL_RESPONSE_PARSER_H_

#include <cstddef>
#include <optional>
#include <span>
#include <string>

#include "groundrl/bbox.h"

namespace groundrl {

// Result of matching a response against
//   <think> T+ </think> <answer> [ int , int , int , int ] </answer>
// where T is any non-structural token. The whole sequence must be consumed.
struct ParsedResponse {
  // Half-open token range of the think content; empty when unmatched.
  size_t think_begin = 0;
  size_t think_end = 0;
  // Canonical (corner-sorted) answer box, present iff format_ok.
  std::optional<BBox> answer_box;
  bool format_ok = false;

  size_t think_length() const { return think_end - think_begin; }
};

// Never throws; malformed input yields format_ok == false and no box.
ParsedResponse parse_response(std::span<const std::string> tokens);

// Integer token: 1 to 6 ASCII digits.
std::optional<int> parse_int_token(std::string_view token);

}  // namespace groundrl

#endif  // GROUNDRL_RESPONSE_PARSER_H_
