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

#include "fpenet/trainer.h"

#include <cmath>
#include <cstdio>
#include <map>
#include <numeric>

#include "fpenet/errors.h"
#include "fpenet/loss.h"

namespace fpenet {

std::string format_epoch(const EpochRecord& r) {
  char buf[128];
  std::snprintf(buf, sizeof(buf), "%d\t%.6g\t%.6f\t%.4f", r.epoch, r.lr,
                r.loss, r.miou);
  return buf;
}

namespace {

struct Batch {
  Tensor<float> images;
  LabelMap labels;
};

Batch make_batch(const std::vector<const Sample*>& samples) {
  const Shape s = samples.front()->image.shape();
  const int n = static_cast<int>(samples.size());
  Batch b{Tensor<float>(Shape{n, s.c, s.h, s.w}), LabelMap(n, s.h, s.w)};
  const std::size_t img = static_cast<std::size_t>(s.c) * s.h * s.w;
  const std::size_t lab = static_cast<std::size_t>(s.h) * s.w;
  for (int i = 0; i < n; ++i) {
    std::copy(samples[i]->image.ptr(), samples[i]->image.ptr() + img,
              b.images.ptr() + i * img);
    std::copy(samples[i]->labels.labels.begin(),
              samples[i]->labels.labels.end(),
              b.labels.labels.begin() + i * lab);
  }
  return b;
}

void check_samples(const LayerGraph& g, const std::vector<Sample>& set,
                   const char* what) {
  const ModelConfig& cfg = g.config();
  for (std::size_t i = 0; i < set.size(); ++i) {
    const Shape& s = set[i].image.shape();
    if (s.n != 1 || s.c != 3 || s.h != cfg.input_h || s.w != cfg.input_w) {
      throw DataError(std::string(what) + " sample " + std::to_string(i) +
                      " has shape " + s.to_string() + ", graph expects 1x3x" +
                      std::to_string(cfg.input_h) + "x" +
                      std::to_string(cfg.input_w));
    }
  }
}

}  // namespace

ConfusionMatrix evaluate(const LayerGraph& g, const std::vector<Sample>& set,
                         int ignore_index) {
  ConfusionMatrix cm(g.config().num_classes, ignore_index);
  for (const Sample& s : set) {
    cm.accumulate(s.labels, predict(g, normalize(s.image, g.input_mean())));
  }
  return cm;
}

TrainResult train(LayerGraph& g, const std::vector<Sample>& train_set,
                  const std::vector<Sample>& val_set,
                  const TrainOptions& options, const EpochCallback& on_epoch) {
  if (train_set.empty()) throw DataError("train: empty training set");
  if (options.batch_size < 1) throw ConfigError("train: batch_size < 1");
  if (options.epochs < 0) throw ConfigError("train: epochs < 0");
  check_samples(g, train_set, "training");
  check_samples(g, val_set, "validation");

  g.input_mean() = channel_means(train_set);
  std::vector<Sample> normalized;
  normalized.reserve(train_set.size());
  for (const Sample& s : train_set) {
    normalized.push_back({normalize(s.image, g.input_mean()), s.labels});
  }

  TrainResult result;
  if (options.epochs == 0) return result;

  Rng rng(options.seed);
  Adam adam(options.adam);
  PolySchedule schedule{options.init_lr, options.power, options.epochs};
  const int ignore = options.policy.ignore_index;
  std::vector<int> order(normalized.size());
  std::iota(order.begin(), order.end(), 0);

  // Tape leaves are const views of these tensors.
  std::map<const Tensor<float>*, NamedTensor> params;
  for (const auto& p : g.parameters()) params.emplace(p.tensor, p);

  for (int epoch = 0; epoch < options.epochs; ++epoch) {
    const double lr = poly_lr(schedule, epoch);
    shuffle(order, rng);
    double loss_sum = 0.0;
    int steps = 0;
    for (std::size_t start = 0; start < order.size();
         start += options.batch_size) {
      const std::size_t end =
          std::min(order.size(), start + options.batch_size);
      std::vector<Sample> augmented;
      std::vector<const Sample*> picked;
      augmented.reserve(end - start);
      for (std::size_t i = start; i < end; ++i) {
        const Sample& s = normalized[order[i]];
        if (options.augment) {
          augmented.push_back(augment(s, options.policy, rng));
          picked.push_back(&augmented.back());
        } else {
          picked.push_back(&s);
        }
      }
      Batch batch = make_batch(picked);

      Tape<float> tape(BnMode::kTrain);
      Var x = tape.constant(std::move(batch.images));
      Var logits = tape.upsample_bilinear_x2(forward(tape, g, x));
      Var loss = cross_entropy(tape, logits, batch.labels, ignore);
      const double loss_value = tape.value(loss)[0];
      const std::string where = "epoch " + std::to_string(epoch + 1) +
                                ", step " + std::to_string(steps + 1);
      if (!std::isfinite(loss_value)) {
        throw NumericalError("training diverged at " + where +
                             ": non-finite loss");
      }
      Gradients<float> grads = tape.backward(loss);

      std::vector<ParamGrad> pg;
      for (const auto& [tensor, var] : tape.parameters()) {
        const NamedTensor& p = params.at(tensor);
        pg.push_back({p.name, p.tensor, grads.find(var)});
      }
      try {
        adam.step(pg, lr);
      } catch (const NumericalError& e) {
        throw NumericalError("training diverged at " + where + ": " +
                             e.what());
      }
      g.apply_bn_updates(tape.bn_observations());
      loss_sum += loss_value;
      ++steps;
    }

    EpochRecord rec;
    rec.epoch = epoch + 1;
    rec.lr = lr;
    rec.loss = loss_sum / steps;
    const auto& eval_set = val_set.empty() ? train_set : val_set;
    rec.miou = miou(evaluate(g, eval_set, ignore)).mean;
    result.log.push_back(rec);
    if (on_epoch) on_epoch(rec);
  }
  return result;
}

}  // namespace fpenet
