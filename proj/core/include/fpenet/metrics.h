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

#ifndef FPENET_CORE_METRICS_H_
#define FPENET_CORE_METRICS_H_

#include <cstdint>
#include <optional>
#include <vector>

#include "fpenet/label_map.h"

namespace fpenet {

// counts[truth][prediction]. Pixels whose truth equals ignore_index are
// skipped.
class ConfusionMatrix {
 public:
  explicit ConfusionMatrix(int num_classes,
                           std::optional<int> ignore_index = std::nullopt);

  int num_classes() const { return num_classes_; }
  std::optional<int> ignore_index() const { return ignore_index_; }

  // DataError when either index is outside [0, C) (and truth is not
  // ignored).
  void add(int truth, int prediction, std::int64_t count = 1);
  void accumulate(const LabelMap& truth, const LabelMap& prediction);
  void merge(const ConfusionMatrix& other);

  std::int64_t count(int truth, int prediction) const {
    return counts_[static_cast<std::size_t>(truth) * num_classes_ +
                   prediction];
  }
  std::int64_t total() const { return total_; }

 private:
  int num_classes_;
  std::optional<int> ignore_index_;
  std::vector<std::int64_t> counts_;
  std::int64_t total_ = 0;
};

struct IouResult {
  // nullopt for classes absent from both truth and prediction.
  std::vector<std::optional<double>> per_class;
  double mean = 0.0;
  double pixel_accuracy = 0.0;
};

// IoU_c = tp / (row_c + col_c - tp); the mean skips undefined classes.
// Throws UndefinedMetricError when nothing was counted.
IouResult miou(const ConfusionMatrix& cm);

}  // namespace fpenet

#endif  // FPENET_CORE_METRICS_H_
