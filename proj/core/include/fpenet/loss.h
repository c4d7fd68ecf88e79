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

#ifndef FPENET_CORE_LOSS_H_
#define FPENET_CORE_LOSS_H_

#include "fpenet/label_map.h"
#include "fpenet/tape.h"
#include "fpenet/tensor.h"

namespace fpenet {

inline constexpr int kDefaultIgnoreIndex = 255;

template <typename T>
struct CrossEntropyResult {
  T loss = T(0);
  Tensor<T> grad;  // d loss / d logits
  long counted = 0;
};

// Mean softmax cross entropy over pixels whose label is not ignore_index
// (pass a negative value to count every pixel). Zero loss when nothing is
// counted. Throws DataError naming the pixel for labels outside [0, C).
template <typename T>
CrossEntropyResult<T> cross_entropy(const Tensor<T>& logits,
                                    const LabelMap& labels, int ignore_index);

template <typename T>
Var cross_entropy(Tape<T>& tape, Var logits, const LabelMap& labels,
                  int ignore_index);

}  // namespace fpenet

#endif  // FPENET_CORE_LOSS_H_
