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

#include "fpenet/optim.h"

#include <cmath>

#include "fpenet/errors.h"

namespace fpenet {

double poly_lr(const PolySchedule& s, int epoch) {
  if (s.max_epoch < 1) throw ConfigError("poly_lr: max_epoch must be >= 1");
  if (epoch < 0 || epoch > s.max_epoch) {
    throw ConfigError("poly_lr: epoch " + std::to_string(epoch) +
                      " outside [0, " + std::to_string(s.max_epoch) + "]");
  }
  const double frac = 1.0 - static_cast<double>(epoch) / s.max_epoch;
  return s.init_lr * std::pow(frac, s.power);
}

void Adam::step(const std::vector<ParamGrad>& params, double lr) {
  for (const ParamGrad& p : params) {
    if (p.grad == nullptr) continue;
    if (p.grad->shape() != p.param->shape()) {
      throw DimensionError("Adam::step " + p.name, "element count",
                           static_cast<long>(p.param->size()),
                           static_cast<long>(p.grad->size()));
    }
    for (std::size_t i = 0; i < p.grad->size(); ++i) {
      if (!std::isfinite((*p.grad)[i])) {
        throw NumericalError("non-finite gradient in '" + p.name +
                             "' at element " + std::to_string(i) +
                             " (step " + std::to_string(step_ + 1) + ")");
      }
    }
  }

  ++step_;
  const double b1 = cfg_.beta1, b2 = cfg_.beta2;
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(step_));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(step_));
  for (const ParamGrad& p : params) {
    auto it = moments_.find(p.name);
    if (it == moments_.end()) {
      it = moments_
               .emplace(p.name, Moments{Tensor<float>(p.param->shape()),
                                        Tensor<float>(p.param->shape())})
               .first;
    }
    Moments& mo = it->second;
    Tensor<float>& w = *p.param;
    for (std::size_t i = 0; i < w.size(); ++i) {
      const double g = (p.grad ? (*p.grad)[i] : 0.0f) +
                       cfg_.weight_decay * static_cast<double>(w[i]);
      const double m = b1 * mo.m[i] + (1.0 - b1) * g;
      const double v = b2 * mo.v[i] + (1.0 - b2) * g * g;
      mo.m[i] = static_cast<float>(m);
      mo.v[i] = static_cast<float>(v);
      const double update = lr * (m / c1) / (std::sqrt(v / c2) + cfg_.eps);
      w[i] = static_cast<float>(w[i] - update);
    }
  }
}

const Tensor<float>* Adam::first_moment(const std::string& name) const {
  auto it = moments_.find(name);
  return it == moments_.end() ? nullptr : &it->second.m;
}

const Tensor<float>* Adam::second_moment(const std::string& name) const {
  auto it = moments_.find(name);
  return it == moments_.end() ? nullptr : &it->second.v;
}

}  // namespace fpenet
