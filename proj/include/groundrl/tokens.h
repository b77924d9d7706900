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

#ifndef GROUNDRL_TOKENS_H_
#define GROUNDRL_TOKENS_H_

#include <string>
#include <string_view>
#include <vector>

namespace groundrl {

// Text-level token sequence. The policy works on integer ids; see
// vocabulary.h for the mapping.
using Tokens = std::vector<std::string>;

namespace tok {

inline constexpr std::string_view kPad = "<pad>";
inline constexpr std::string_view kBos = "<bos>";
inline constexpr std::string_view kEos = "<eos>";
inline constexpr std::string_view kThinkOpen = "<think>";
inline constexpr std::string_view kThinkClose = "</think>";
inline constexpr std::string_view kAnswerOpen = "<answer>";
inline constexpr std::string_view kAnswerClose = "</answer>";
inline constexpr std::string_view kLBracket = "[";
inline constexpr std::string_view kComma = ",";
inline constexpr std::string_view kRBracket = "]";
inline constexpr std::string_view kImage = "<image>";

inline bool is_control(std::string_view t) {
  return t == kPad || t == kBos || t == kEos;
}

// Tags that delimit the think/answer frame, plus control tokens. Everything
// else may appear inside a think span.
inline bool is_structural(std::string_view t) {
  return t == kThinkOpen || t == kThinkClose || t == kAnswerOpen ||
         t == kAnswerClose || is_control(t);
}

}  // namespace tok

// Joins tokens with single spaces.
std::string join_tokens(const Tokens& tokens);

// Splits on ASCII whitespace.
Tokens split_tokens(std::string_view text);

}  // namespace groundrl

#endif  // GROUNDRL_TOKENS_H_
