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

#include "groundrl/vocabulary.h"

#include "groundrl/errors.h"
#include "groundrl/knowledge_bank.h"
#include "groundrl/rng.h"

namespace groundrl {

const Vocabulary& Vocabulary::standard() {
  static const Vocabulary vocab = [] {
    std::vector<std::string> t;
    for (auto s : {tok::kPad, tok::kBos, tok::kEos, tok::kThinkOpen,
                   tok::kThinkClose, tok::kAnswerOpen, tok::kAnswerClose,
                   tok::kLBracket, tok::kComma, tok::kRBracket, tok::kImage}) {
      t.emplace_back(s);
    }
    for (int v = 0; v <= kMaxCoordinate; ++v) t.push_back(std::to_string(v));
    for (auto s : kDiseaseTokens) t.emplace_back(s);
    for (auto s : kRegionTokens) t.emplace_back(s);
    for (auto s : kSeverityTokens) t.emplace_back(s);
    for (auto s : template_words()) t.emplace_back(s);
    return Vocabulary(std::move(t));
  }();
  return vocab;
}

Vocabulary::Vocabulary(std::vector<std::string> tokens)
    : tokens_(std::move(tokens)) {
  std::string joined;
  for (size_t i = 0; i < tokens_.size(); ++i) {
    auto [it, inserted] =
        index_.emplace(tokens_[i], static_cast<TokenId>(i));
    if (!inserted) throw VocabularyError("duplicate token: " + tokens_[i]);
    joined += tokens_[i];
    joined.push_back('\n');
  }
  hash_ = fnv1a(joined);
  auto find = [&](std::string_view s) {
    auto it = index_.find(std::string(s));
    return it == index_.end() ? TokenId{-1} : it->second;
  };
  pad_ = find(tok::kPad);
  bos_ = find(tok::kBos);
  eos_ = find(tok::kEos);
  coord0_ = find("0");
}

bool Vocabulary::contains(std::string_view token) const {
  return index_.count(std::string(token)) > 0;
}

TokenId Vocabulary::id(std::string_view token) const {
  auto it = index_.find(std::string(token));
  if (it == index_.end()) {
    throw VocabularyError("token not in vocabulary: '" + std::string(token) +
                          "'");
  }
  return it->second;
}

TokenIds Vocabulary::encode(const Tokens& tokens) const {
  TokenIds ids;
  ids.reserve(tokens.size());
  for (const auto& t : tokens) ids.push_back(id(t));
  return ids;
}

Tokens Vocabulary::decode(std::span<const TokenId> ids) const {
  Tokens out;
  out.reserve(ids.size());
  for (TokenId i : ids) {
    if (i < 0 || static_cast<size_t>(i) >= tokens_.size()) {
      throw VocabularyError("token id out of range: " + std::to_string(i));
    }
    out.push_back(tokens_[i]);
  }
  return out;
}

TokenId Vocabulary::coordinate(int value) const {
  if (value < 0 || value > kMaxCoordinate || coord0_ < 0) {
    throw VocabularyError("no token for coordinate " + std::to_string(value));
  }
  return coord0_ + value;
}

}  // namespace groundrl
