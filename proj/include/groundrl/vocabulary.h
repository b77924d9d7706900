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

#ifndef GROUNDRL_VOCABULARY_H_
#define GROUNDRL_VOCABULARY_H_

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "groundrl/tokens.h"

namespace groundrl {

using TokenId = int32_t;
using TokenIds = std::vector<TokenId>;

// Closed token inventory shared by the world generator, the grammars and the
// policy. Token order is fixed; ids are positions.
class Vocabulary {
 public:
  // Largest coordinate with its own token.
  static constexpr int kMaxCoordinate = 63;

  // The standard inventory: control and structural tokens, coordinates
  // 0..63, disease, region and severity labels, template words.
  static const Vocabulary& standard();

  explicit Vocabulary(std::vector<std::string> tokens);

  size_t size() const { return tokens_.size(); }
  const std::string& token(TokenId id) const { return tokens_.at(id); }
  std::span<const std::string> tokens() const { return tokens_; }

  bool contains(std::string_view token) const;
  // Throws VocabularyError for unknown tokens.
  TokenId id(std::string_view token) const;

  TokenIds encode(const Tokens& tokens) const;
  Tokens decode(std::span<const TokenId> ids) const;

  TokenId pad() const { return pad_; }
  TokenId bos() const { return bos_; }
  TokenId eos() const { return eos_; }
  TokenId coordinate(int value) const;

  // FNV-1a over the newline-joined token list.
  uint64_t hash() const { return hash_; }

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, TokenId> index_;
  TokenId pad_ = -1;
  TokenId bos_ = -1;
  TokenId eos_ = -1;
  TokenId coord0_ = -1;
  uint64_t hash_ = 0;
};

}  // namespace groundrl

#endif  // GROUNDRL_VOCABULARY_H_
