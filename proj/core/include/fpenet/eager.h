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

#ifndef FPENET_CORE_EAGER_H_
#define FPENET_CORE_EAGER_H_

#include <vector>

#include "fpenet/ops.h"
#include "fpenet/tape.h"
#include "fpenet/tensor.h"

namespace fpenet {

// Executes the same op surface as Tape without recording anything. Values
// are plain tensors, so intermediate results are released as soon as the
// caller drops them.
template <typename T>
class Eager {
 public:
  using Scalar = T;
  using Value = Tensor<T>;

  explicit Eager(BnMode mode = BnMode::kInfer) : mode_(mode) {}

  BnMode mode() const { return mode_; }

  Tensor<T> constant(Tensor<T> v) const { return v; }
  Tensor<T> input(Tensor<T> v) const { return v; }
  const Tensor<T>& parameter(const Tensor<T>& p) const { return p; }

  Tensor<T> conv2d(const Tensor<T>& x, const Tensor<T>& w,
                   const ConvSpec& spec) const {
    return ops::conv2d<T>(x, w, nullptr, spec);
  }
  Tensor<T> conv2d(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>& b,
                   const ConvSpec& spec) const {
    return ops::conv2d(x, w, &b, spec);
  }
  Tensor<T> batch_norm(const Tensor<T>& x, const Tensor<T>& gamma,
                       const Tensor<T>& beta, const BatchNormState<T>& s);
  Tensor<T> relu(const Tensor<T>& x) const { return ops::relu(x); }
  Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b) const {
    return ops::add(a, b);
  }
  Tensor<T> mul_broadcast(const Tensor<T>& a, const Tensor<T>& b) const {
    return ops::mul_broadcast(a, b);
  }
  Tensor<T> concat_channels(const std::vector<Tensor<T>>& parts) const {
    return ops::concat_channels(parts);
  }
  std::vector<Tensor<T>> split_channels(const Tensor<T>& x, int parts) const {
    return ops::split_channels(x, parts);
  }
  Tensor<T> global_avg_pool(const Tensor<T>& x) const {
    return ops::global_avg_pool(x);
  }
  Tensor<T> channel_mean(const Tensor<T>& x) const {
    return ops::channel_mean(x);
  }
  Tensor<T> upsample_bilinear_x2(const Tensor<T>& x) const {
    return ops::upsample_bilinear_x2(x);
  }

  const Tensor<T>& value(const Tensor<T>& v) const { return v; }

  const std::vector<BnObservation<T>>& bn_observations() const {
    return bn_observations_;
  }

 private:
  BnMode mode_;
  std::vector<BnObservation<T>> bn_observations_;
};

template <typename T>
Tensor<T> Eager<T>::batch_norm(const Tensor<T>& x, const Tensor<T>& gamma,
                               const Tensor<T>& beta,
                               const BatchNormState<T>& s) {
  if (mode_ == BnMode::kInfer) {
    return ops::batch_norm_infer(x, gamma, beta, s.running_mean,
                                 s.running_var, s.eps);
  }
  auto r = ops::batch_norm_train(x, gamma, beta, s.eps);
  BnObservation<T> obs{&s, std::move(r.mean), std::move(r.var)};
  if (r.count > 1) {
    const T unbias = static_cast<T>(r.count) / static_cast<T>(r.count - 1);
    for (std::size_t i = 0; i < obs.var_unbiased.size(); ++i) {
      obs.var_unbiased[i] *= unbias;
    }
  }
  bn_observations_.push_back(std::move(obs));
  return std::move(r.output);
}

}  // namespace fpenet

#endif  // FPENET_CORE_EAGER_H_
