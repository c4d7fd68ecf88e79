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

// Finite-difference verification of backward rules in double precision.
//
// The checked function's output is reduced to a scalar with fixed random
// weights, L = sum(w * f(inputs)). Each input element is perturbed by
// +-step and the central difference is compared with the tape gradient:
//
//   err = |analytic - numeric| / max(|analytic|, |numeric|, floor)
//
// where floor = kRelativeFloor * (largest |analytic| of that input), so
// entries that are zero up to rounding do not dominate the result.
// Elements whose forward and backward one-sided differences disagree sit
// on a ReLU kink and are skipped.

#ifndef FPENET_CORE_GRADCHECK_H_
#define FPENET_CORE_GRADCHECK_H_

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "fpenet/tape.h"

namespace fpenet {

struct GradcheckOptions {
  double step = 1e-5;
  double tolerance = 1e-5;
  std::uint64_t seed = 0;
};

inline constexpr double kRelativeFloor = 1e-3;

struct GradcheckInput {
  std::string name;
  Tensor<double>* tensor = nullptr;
};

// Records f on the tape; must bind every input with tape.parameter().
using GradcheckFn = std::function<Var(Tape<double>& tape)>;

struct GradcheckResult {
  std::string op;
  Shape shape;           // shape of the first input
  double max_error = 0;  // over all inputs
  std::string worst;     // "input[index]" of the worst element
  std::size_t elements = 0;
  std::size_t kinks = 0;  // skipped; more than 1% fails the check
  bool passed = false;
};

GradcheckResult check_gradients(const std::string& op,
                                const std::vector<GradcheckInput>& inputs,
                                const GradcheckFn& f,
                                const GradcheckOptions& options,
                                BnMode mode = BnMode::kTrain);

// Primitives, the cross-entropy loss and the FPE / MEU composites.
const std::vector<std::string>& gradcheck_op_names();

// ConfigError for unknown names.
GradcheckResult run_gradcheck(const std::string& op,
                              const GradcheckOptions& options);

}  // namespace fpenet

#endif  // FPENET_CORE_GRADCHECK_H_
