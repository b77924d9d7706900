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

#include "groundrl/optimizer.h"

#include <cmath>
#include <numbers>

#include "groundrl/errors.h"

namespace groundrl {

OptimizerKind optimizer_from_name(const std::string& name) {
  if (name == "sgd") return OptimizerKind::kSgd;
  if (name == "adamw") return OptimizerKind::kAdamW;
  throw ConfigError("unknown optimizer '" + name + "' (expected sgd|adamw)");
}

const char* optimizer_name(OptimizerKind k) {
  return k == OptimizerKind::kSgd ? "sgd" : "adamw";
}

double cosine_learning_rate(double initial, double floor, size_t step,
                            size_t total_steps) {
  if (total_steps == 0) return initial;
  const double frac = std::min(1.0, static_cast<double>(step) /
                                        static_cast<double>(total_steps));
  return floor + 0.5 * (initial - floor) *
                     (1.0 + std::cos(std::numbers::pi * frac));
}

Optimizer::Optimizer(OptimizerKind kind, size_t size, AdamWConfig adam)
    : kind_(kind), adam_(adam) {
  if (kind_ == OptimizerKind::kAdamW) {
    m_.assign(size, 0.0);
    v_.assign(size, 0.0);
  }
}

void Optimizer::descend(std::span<double> params, std::span<const double> grad,
                        double lr, std::span<const ParamRange> ranges) {
  if (kind_ == OptimizerKind::kSgd) {
    for (auto [first, n] : ranges) {
      for (size_t i = first; i < first + n; ++i) params[i] -= lr * grad[i];
    }
    return;
  }
  ++t_;
  const double bc1 = 1.0 - std::pow(adam_.beta1, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(adam_.beta2, static_cast<double>(t_));
  for (auto [first, n] : ranges) {
    for (size_t i = first; i < first + n; ++i) {
      m_[i] = adam_.beta1 * m_[i] + (1.0 - adam_.beta1) * grad[i];
      v_[i] = adam_.beta2 * v_[i] + (1.0 - adam_.beta2) * grad[i] * grad[i];
      const double mhat = m_[i] / bc1;
      const double vhat = v_[i] / bc2;
      params[i] -= lr * (mhat / (std::sqrt(vhat) + adam_.epsilon) +
                         adam_.weight_decay * params[i]);
    }
  }
}

}  // namespace groundrl
