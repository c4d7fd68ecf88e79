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

#include "fpenet/metrics.h"

#include <string>

#include "fpenet/errors.h"

namespace fpenet {

ConfusionMatrix::ConfusionMatrix(int num_classes,
                                 std::optional<int> ignore_index)
    : num_classes_(num_classes), ignore_index_(ignore_index) {
  if (num_classes < 1) {
    throw ConfigError("ConfusionMatrix: need at least one class");
  }
  counts_.assign(static_cast<std::size_t>(num_classes) * num_classes, 0);
}

void ConfusionMatrix::add(int truth, int prediction, std::int64_t count) {
  if (ignore_index_ && truth == *ignore_index_) return;
  if (truth < 0 || truth >= num_classes_) {
    throw DataError("ConfusionMatrix: truth label " + std::to_string(truth) +
                    " outside [0, " + std::to_string(num_classes_) + ")");
  }
  if (prediction < 0 || prediction >= num_classes_) {
    throw DataError("ConfusionMatrix: predicted label " +
                    std::to_string(prediction) + " outside [0, " +
                    std::to_string(num_classes_) + ")");
  }
  counts_[static_cast<std::size_t>(truth) * num_classes_ + prediction] +=
      count;
  total_ += count;
}

void ConfusionMatrix::accumulate(const LabelMap& truth,
                                 const LabelMap& prediction) {
  if (truth.n != prediction.n) {
    throw DimensionError("ConfusionMatrix", "batch", truth.n, prediction.n);
  }
  if (truth.h != prediction.h) {
    throw DimensionError("ConfusionMatrix", "height", truth.h, prediction.h);
  }
  if (truth.w != prediction.w) {
    throw DimensionError("ConfusionMatrix", "width", truth.w, prediction.w);
  }
  for (std::size_t i = 0; i < truth.labels.size(); ++i) {
    add(truth.labels[i], prediction.labels[i]);
  }
}

void ConfusionMatrix::merge(const ConfusionMatrix& other) {
  if (other.num_classes_ != num_classes_) {
    throw DimensionError("ConfusionMatrix::merge", "classes", num_classes_,
                         other.num_classes_);
  }
  for (std::size_t i = 0; i < counts_.size(); ++i) {
    counts_[i] += other.counts_[i];
  }
  total_ += other.total_;
}

IouResult miou(const ConfusionMatrix& cm) {
  if (cm.total() == 0) {
    throw UndefinedMetricError("miou: confusion matrix is empty");
  }
  const int C = cm.num_classes();
  IouResult r;
  r.per_class.resize(C);
  std::int64_t trace = 0;
  double sum = 0.0;
  int defined = 0;
  for (int c = 0; c < C; ++c) {
    std::int64_t row = 0, col = 0;
    for (int k = 0; k < C; ++k) {
      row += cm.count(c, k);
      col += cm.count(k, c);
    }
    const std::int64_t tp = cm.count(c, c);
    trace += tp;
    const std::int64_t denom = row + col - tp;
    if (denom == 0) continue;
    r.per_class[c] = static_cast<double>(tp) / static_cast<double>(denom);
    sum += *r.per_class[c];
    ++defined;
  }
  r.mean = sum / defined;
  r.pixel_accuracy = static_cast<double>(trace) / static_cast<double>(cm.total());
  return r;
}

}  // namespace fpenet
