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

// Learning-rate schedule and the Adam optimizer.

#ifndef FPENET_CORE_OPTIM_H_
#define FPENET_CORE_OPTIM_H_

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "fpenet/tensor.h"

namespace fpenet {

struct PolySchedule {
  double init_lr = 0.0005;
  double power = 0.9;
  int max_epoch = 1;
};

// init_lr * (1 - epoch / max_epoch)^power. ConfigError unless
// 0 <= epoch <= max_epoch.
double poly_lr(const PolySchedule& s, int epoch);

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  // Coupled L2: weight_decay * param is added to the gradient.
  double weight_decay = 0.0001;
};

// A parameter with its gradient for one step. A null grad means the
// parameter received no gradient, which is treated as zero.
struct ParamGrad {
  std::string name;
  Tensor<float>* param = nullptr;
  const Tensor<float>* grad = nullptr;
};

class Adam {
 public:
  explicit Adam(AdamConfig cfg = {}) : cfg_(cfg) {}

  const AdamConfig& config() const { return cfg_; }
  std::int64_t steps() const { return step_; }

  // Bias-corrected update of every parameter. Throws NumericalError naming
  // the parameter and step on a non-finite gradient; in that case no
  // parameter is modified.
  void step(const std::vector<ParamGrad>& params, double lr);

  // Moment tensors by parameter name; null before the first step.
  const Tensor<float>* first_moment(const std::string& name) const;
  const Tensor<float>* second_moment(const std::string& name) const;

 private:
  struct Moments {
    Tensor<float> m;
    Tensor<float> v;
  };

  AdamConfig cfg_;
  std::int64_t step_ = 0;
  std::map<std::string, Moments> moments_;
};

}  // namespace fpenet

#endif  // FPENET_CORE_OPTIM_H_
