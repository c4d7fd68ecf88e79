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

#include "fpenet/loss.h"

#include <cmath>
#include <memory>

#include "fpenet/errors.h"

namespace fpenet {

template <typename T>
CrossEntropyResult<T> cross_entropy(const Tensor<T>& logits,
                                    const LabelMap& labels, int ignore_index) {
  const Shape& s = logits.shape();
  if (labels.n != s.n) throw DimensionError("cross_entropy labels", "batch", s.n, labels.n);
  if (labels.h != s.h) throw DimensionError("cross_entropy labels", "height", s.h, labels.h);
  if (labels.w != s.w) throw DimensionError("cross_entropy labels", "width", s.w, labels.w);

  CrossEntropyResult<T> r{T(0), Tensor<T>(s), 0};
  const std::size_t plane = s.plane();
  double total = 0.0;
  std::vector<double> prob(s.c);
  for (int n = 0; n < s.n; ++n) {
    for (int y = 0; y < s.h; ++y) {
      for (int x = 0; x < s.w; ++x) {
        const int label = labels.at(n, y, x);
        if (ignore_index >= 0 && label == ignore_index) continue;
        if (label < 0 || label >= s.c) {
          throw DataError("cross_entropy: label " + std::to_string(label) +
                          " at (n=" + std::to_string(n) + ", y=" +
                          std::to_string(y) + ", x=" + std::to_string(x) +
                          ") outside [0, " + std::to_string(s.c) + ")");
        }
        const T* base = logits.ptr() + logits.offset(n, 0, y, x);
        double mx = base[0];
        for (int c = 1; c < s.c; ++c) mx = std::max<double>(mx, base[c * plane]);
        double z = 0.0;
        for (int c = 0; c < s.c; ++c) {
          prob[c] = std::exp(static_cast<double>(base[c * plane]) - mx);
          z += prob[c];
        }
        total += std::log(z) - (static_cast<double>(base[label * plane]) - mx);
        T* g = r.grad.ptr() + r.grad.offset(n, 0, y, x);
        for (int c = 0; c < s.c; ++c) {
          g[c * plane] = static_cast<T>(prob[c] / z - (c == label ? 1.0 : 0.0));
        }
        ++r.counted;
      }
    }
  }
  if (r.counted > 0) {
    r.loss = static_cast<T>(total / r.counted);
    const T inv = static_cast<T>(1.0 / r.counted);
    for (std::size_t i = 0; i < r.grad.size(); ++i) r.grad[i] *= inv;
  }
  return r;
}

template <typename T>
Var cross_entropy(Tape<T>& tape, Var logits, const LabelMap& labels,
                  int ignore_index) {
  auto r = std::make_shared<CrossEntropyResult<T>>(
      cross_entropy(tape.value(logits), labels, ignore_index));
  return tape.record({logits}, Tensor<T>(Shape{}, r->loss),
                     [logits, r](const Tensor<T>& g,
                                 typename Tape<T>::GradSink& sink) {
                       Tensor<T>* s = sink.slot(logits);
                       if (s == nullptr) return;
                       for (std::size_t i = 0; i < s->size(); ++i) {
                         (*s)[i] += g[0] * r->grad[i];
                       }
                     });
}

template CrossEntropyResult<float> cross_entropy(const Tensor<float>&,
                                                 const LabelMap&, int);
template CrossEntropyResult<double> cross_entropy(const Tensor<double>&,
                                                  const LabelMap&, int);
template Var cross_entropy(Tape<float>&, Var, const LabelMap&, int);
template Var cross_entropy(Tape<double>&, Var, const LabelMap&, int);

}  // namespace fpenet
