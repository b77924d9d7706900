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

#ifndef GROUNDRL_BBOX_H_
#define GROUNDRL_BBOX_H_

#include <algorithm>
#include <cstdint>
#include <ostream>

namespace groundrl {

// Image extent in pixels; boxes live in [0, width] x [0, height].
struct Canvas {
  int height = 64;
  int width = 64;

  friend bool operator==(const Canvas&, const Canvas&) = default;
};

// Axis-aligned box in integer pixel coordinates, origin top-left. (x1, y1) is
// the top-left corner and (x2, y2) the exclusive bottom-right corner, so a box
// covers (x2 - x1) * (y2 - y1) unit pixels.
struct BBox {
  int x1 = 0;
  int y1 = 0;
  int x2 = 0;
  int y2 = 0;

  int64_t width() const { return std::max(0, x2 - x1); }
  int64_t height() const { return std::max(0, y2 - y1); }
  int64_t area() const { return width() * height(); }

  bool is_canonical() const { return x1 <= x2 && y1 <= y2; }

  // Sorts corners so that x1 <= x2 and y1 <= y2.
  BBox canonical() const {
    return {std::min(x1, x2), std::min(y1, y2), std::max(x1, x2),
            std::max(y1, y2)};
  }

  BBox clipped(const Canvas& canvas) const {
    auto clamp = [](int v, int hi) { return std::clamp(v, 0, hi); };
    return {clamp(x1, canvas.width), clamp(y1, canvas.height),
            clamp(x2, canvas.width), clamp(y2, canvas.height)};
  }

  bool contains(const BBox& other) const {
    return x1 <= other.x1 && y1 <= other.y1 && other.x2 <= x2 &&
           other.y2 <= y2;
  }

  bool within(const Canvas& canvas) const {
    return 0 <= x1 && x1 < x2 && x2 <= canvas.width && 0 <= y1 && y1 < y2 &&
           y2 <= canvas.height;
  }

  BBox intersection(const BBox& other) const {
    return {std::max(x1, other.x1), std::max(y1, other.y1),
            std::min(x2, other.x2), std::min(y2, other.y2)};
  }

  friend bool operator==(const BBox&, const BBox&) = default;
};

inline std::ostream& operator<<(std::ostream& os, const BBox& b) {
  return os << "[" << b.x1 << "," << b.y1 << "," << b.x2 << "," << b.y2
            << "]";
}

// Exact IoU as a reduced fraction. A zero-area union yields 0/1.
struct IouFraction {
  int64_t numerator = 0;
  int64_t denominator = 1;

  double value() const {
    return static_cast<double>(numerator) / static_cast<double>(denominator);
  }
  friend bool operator==(const IouFraction&, const IouFraction&) = default;
};

IouFraction iou_exact(const BBox& a, const BBox& b);

// |a ∩ b| / |a ∪ b| for canonical boxes; symmetric, in [0, 1].
double iou(const BBox& a, const BBox& b);

}  // namespace groundrl

#endif  // GROUNDRL_BBOX_H_
