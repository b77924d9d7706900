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

#include "groundrl/bbox.h"

#include <numeric>

namespace groundrl {

IouFraction iou_exact(const BBox& a, const BBox& b) {
  const int64_t inter = a.intersection(b).area();
  const int64_t uni = a.area() + b.area() - inter;
  if (uni <= 0 || inter == 0) return {0, 1};
  const int64_t g = std::gcd(inter, uni);
  return {inter / g, uni / g};
}

double iou(const BBox& a, const BBox& b) {
  const int64_t inter = a.intersection(b).area();
  const int64_t uni = a.area() + b.area() - inter;
  if (uni <= 0) return 0.0;
  return static_cast<double>(inter) / static_cast<double>(uni);
}

}  // namespace groundrl
