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

#ifndef GROUNDRL_OPTIMIZER_H_
#define GROUNDRL_OPTIMIZER_H_

#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace groundrl {

enum class OptimizerKind { kSgd, kAdamW };
OptimizerKind optimizer_from_name(const std::string& name);
const char* optimizer_name(OptimizerKind k);

struct AdamWConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  double weight_decay = 0.01;
};

// Half-period cosine from `initial` down to `floor` over `total_steps`.
double cosine_learning_rate(double initial, double floor, size_t step,
                            size_t total_steps);

// Contiguous parameter range [first, first + second) that may be updated.
using ParamRange = std::pair<size_t, size_t>;

// Descent on a flat parameter vector; only coordinates inside `ranges` move,
// so frozen parameters keep their exact bytes.
class Optimizer {
 public:
  Optimizer(OptimizerKind kind, size_t size, AdamWConfig adam = {});

  // params -= lr * update(grad)
  void descend(std::span<double> params, std::span<const double> grad,
               double lr, std::span<const ParamRange> ranges);

  OptimizerKind kind() const { return kind_; }

 private:
  OptimizerKind kind_;
  AdamWConfig adam_;
  std::vector<double> m_;
  std::vector<double> v_;
  size_t t_ = 0;
};

}  // namespace groundrl

#endif  // GROUNDRL_OPTIMIZER_H_
