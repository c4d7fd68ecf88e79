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

// Mini-batch training of a LayerGraph on in-memory samples.
//
// Each epoch uses lr = poly_lr(schedule, epoch) with max_epoch = epochs,
// shuffles the training set, normalizes by the training-set channel means
// (stored in the graph's input.mean), augments, and takes one Adam step
// per batch on the mean cross entropy of the x2-upsampled logits against
// full-resolution labels. The run is a pure function of the graph, data
// and options.

#ifndef FPENET_CORE_TRAINER_H_
#define FPENET_CORE_TRAINER_H_

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "fpenet/augment.h"
#include "fpenet/dataset.h"
#include "fpenet/graph.h"
#include "fpenet/metrics.h"
#include "fpenet/optim.h"

namespace fpenet {

struct TrainOptions {
  int epochs = 30;
  int batch_size = 8;
  double init_lr = 0.0005;
  double power = 0.9;
  AdamConfig adam;
  bool augment = true;
  AugmentationPolicy policy;
  std::uint64_t seed = 0;
};

struct EpochRecord {
  int epoch = 0;  // 1-based
  double lr = 0.0;
  double loss = 0.0;  // mean over the epoch's batches
  double miou = 0.0;  // on the validation set; training set if none
};

// "epoch<TAB>lr<TAB>loss<TAB>miou".
std::string format_epoch(const EpochRecord& r);

struct TrainResult {
  std::vector<EpochRecord> log;
};

using EpochCallback = std::function<void(const EpochRecord&)>;

// Throws NumericalError with epoch and step on a non-finite loss or
// gradient; `g` then holds the parameters from before the failing step.
TrainResult train(LayerGraph& g, const std::vector<Sample>& train_set,
                  const std::vector<Sample>& val_set,
                  const TrainOptions& options,
                  const EpochCallback& on_epoch = nullptr);

// Infer-mode confusion matrix over raw (unnormalized) samples.
ConfusionMatrix evaluate(const LayerGraph& g, const std::vector<Sample>& set,
                         int ignore_index = kDefaultIgnoreIndex);

}  // namespace fpenet

#endif  // FPENET_CORE_TRAINER_H_
