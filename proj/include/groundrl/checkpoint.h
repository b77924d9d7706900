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

#ifndef GROUNDRL_CHECKPOINT_H_
#define GROUNDRL_CHECKPOINT_H_

#include <cstdint>
#include <filesystem>
#include <initializer_list>
#include <optional>
#include <span>
#include <string>
#include <string_view>

#include "groundrl/policy.h"

namespace groundrl {

inline constexpr int kCheckpointFormatVersion = 1;

// Text checkpoint: a header (format version, kind, phase, version ids,
// vocabulary hash, shapes) followed by named arrays of shortest round-trip
// decimal doubles. Either part may be absent, but not both.
struct Checkpoint {
  std::optional<PolicyParams> base;
  std::optional<AdapterParams> adapter;
  uint64_t vocab_hash = 0;
};

std::string serialize_checkpoint(const PolicyParams* base,
                                 const AdapterParams* adapter,
                                 uint64_t vocab_hash);

// Throws CheckpointError on a bad format version, a corrupt body or a
// version-id mismatch between header and content.
Checkpoint parse_checkpoint(std::string_view text);

void save_checkpoint(const std::filesystem::path& path,
                     const PolicyParams* base, const AdapterParams* adapter,
                     uint64_t vocab_hash);

// Loads and checks the vocabulary hash and, for base parameters, the shape
// against `expected`. Throws IoError / CheckpointError.
Checkpoint load_checkpoint(const std::filesystem::path& path,
                           const PolicyConfig& expected, uint64_t vocab_hash);

// Throws CheckpointError unless the adapter was trained against exactly
// this base snapshot.
void check_adapter_matches(const PolicyParams& base,
                           const AdapterParams& adapter);

// Throws PhaseGateError unless params.phase() is one of `allowed`.
void require_phase(const PolicyParams& params,
                   std::initializer_list<Phase> allowed,
                   std::string_view consumer);
void require_phase(const PolicyParams& params, std::span<const Phase> allowed,
                   std::string_view consumer);

std::string hex64(uint64_t v);

}  // namespace groundrl

#endif  // GROUNDRL_CHECKPOINT_H_
