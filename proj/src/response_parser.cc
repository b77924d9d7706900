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

#include "groundrl/response_parser.h"

#include <array>

#include "groundrl/tokens.h"

namespace groundrl {
namespace {

// Token classes seen by the recognizer.
enum Cls : int {
  kThinkOpen,
  kThinkClose,
  kAnswerOpen,
  kAnswerClose,
  kLBracket,
  kComma,
  kRBracket,
  kInt,
  kControl,
  kOther,
  kNumCls
};

Cls classify(std::string_view t) {
  if (t == tok::kThinkOpen) return kThinkOpen;
  if (t == tok::kThinkClose) return kThinkClose;
  if (t == tok::kAnswerOpen) return kAnswerOpen;
  if (t == tok::kAnswerClose) return kAnswerClose;
  if (tok::is_control(t)) return kControl;
  if (t == tok::kLBracket) return kLBracket;
  if (t == tok::kComma) return kComma;
  if (t == tok::kRBracket) return kRBracket;
  if (parse_int_token(t)) return kInt;
  return kOther;
}

// DFA states. kReject is absorbing.
enum State : int {
  kStart,
  kThinkFirst,  // after <think>, need one content token
  kThinkMore,   // inside think with >= 1 token
  kClosedThink,
  kOpenAnswer,
  kBracket,
  kC1,
  kSep1,
  kC2,
  kSep2,
  kC3,
  kSep3,
  kC4,
  kClosedBox,
  kAccept,
  kReject,
  kNumStates
};

using Row = std::array<State, kNumCls>;

constexpr Row reject_row() {
  Row r{};
  for (auto& s : r) s = kReject;
  return r;
}

// Classes allowed as think content: everything but tags and control tokens.
constexpr Row think_row() {
  Row r = reject_row();
  for (Cls c : {kLBracket, kComma, kRBracket, kInt, kOther}) r[c] = kThinkMore;
  return r;
}

constexpr std::array<Row, kNumStates> build_table() {
  std::array<Row, kNumStates> t{};
  for (auto& row : t) row = reject_row();
  t[kStart][kThinkOpen] = kThinkFirst;
  t[kThinkFirst] = think_row();
  t[kThinkMore] = think_row();
  t[kThinkMore][kThinkClose] = kClosedThink;
  t[kClosedThink][kAnswerOpen] = kOpenAnswer;
  t[kOpenAnswer][kLBracket] = kBracket;
  t[kBracket][kInt] = kC1;
  t[kC1][kComma] = kSep1;
  t[kSep1][kInt] = kC2;
  t[kC2][kComma] = kSep2;
  t[kSep2][kInt] = kC3;
  t[kC3][kComma] = kSep3;
  t[kSep3][kInt] = kC4;
  t[kC4][kRBracket] = kClosedBox;
  t[kClosedBox][kAnswerClose] = kAccept;
  return t;
}

constexpr auto kTable = build_table();

}  // namespace

std::optional<int> parse_int_token(std::string_view token) {
  if (token.empty() || token.size() > 6) return std::nullopt;
  int v = 0;
  for (char c : token) {
    if (c < '0' || c > '9') return std::nullopt;
    v = v * 10 + (c - '0');
  }
  return v;
}

ParsedResponse parse_response(std::span<const std::string> tokens) {
  ParsedResponse out;
  State s = kStart;
  size_t think_close = 0;
  std::array<int, 4> coords{};
  int ncoords = 0;
  for (size_t i = 0; i < tokens.size() && s != kReject; ++i) {
    const Cls c = classify(tokens[i]);
    const State next = kTable[s][c];
    if (next == kClosedThink) think_close = i;
    if (c == kInt && next != kReject && next != kThinkMore) {
      coords[ncoords++] = *parse_int_token(tokens[i]);
    }
    s = next;
  }
  if (s != kAccept) return out;
  out.format_ok = true;
  out.think_begin = 1;
  out.think_end = think_close;
  out.answer_box =
      BBox{coords[0], coords[1], coords[2], coords[3]}.canonical();
  return out;
}

}  // namespace groundrl
