/* Copyright 2026 The FPENet Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#ifndef FPENET_CORE_LABEL_MAP_H_
#define FPENET_CORE_LABEL_MAP_H_

#include <cstdint>
#include <vector>

namespace fpenet {

// Per-pixel class indices (n, h, w), row-major.
struct LabelMap {
  int n = 1;
  int h = 0;
  int w = 0;
  std::vector<std::int32_t> labels;

  LabelMap() = default;
  LabelMap(int n_, int h_, int w_, std::int32_t fill = 0)
      : n(n_), h(h_), w(w_),
        labels(static_cast<std::size_t>(n_) * h_ * w_, fill) {}

  std::size_t size() const { return labels.size(); }
  std::int32_t at(int b, int y, int x) const {
    return labels[(static_cast<std::size_t>(b) * h + y) * w + x];
  }
  std::int32_t& at(int b, int y, int x) {
    return labels[(static_cast<std::size_t>(b) * h + y) * w + x];
  }
  bool operator==(const LabelMap&) const = default;
};

}  // namespace fpenet

#endif  // FPENET_CORE_LABEL_MAP_H_
