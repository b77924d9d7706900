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

#ifndef GROUNDRL_ERRORS_H_
#define GROUNDRL_ERRORS_H_

#include <stdexcept>
#include <string>

namespace groundrl {

// Base of every error raised by the library. The CLI maps subclasses onto
// process exit codes (see tools/groundrl_main.cc).
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

// Canvas or image shape does not meet a precondition.
class DimensionError : public ConfigError {
 public:
  using ConfigError::ConfigError;
};

class IndexError : public Error {
 public:
  using Error::Error;
};

class GroupSizeError : public Error {
 public:
  using Error::Error;
};

class VocabularyError : public Error {
 public:
  using Error::Error;
};

class CheckpointError : public Error {
 public:
  using Error::Error;
};

// A phase consumed a checkpoint carrying the wrong phase tag.
class PhaseGateError : public Error {
 public:
  using Error::Error;
};

// Frozen parameters changed during a phase that must not touch them.
class IntegrityError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

// Raised when a gradient or loss turns NaN/inf mid-training.
class NumericError : public Error {
 public:
  using Error::Error;
};

// Signed-rank test has no non-zero differences (or too few of them).
class UndefinedTestError : public Error {
 public:
  using Error::Error;
};

}  // namespace groundrl

#endif  // GROUNDRL_ERRORS_H_
