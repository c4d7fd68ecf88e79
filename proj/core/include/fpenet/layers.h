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

// Building blocks shared by the FPE and MEU composites and the network.

#ifndef FPENET_CORE_LAYERS_H_
#define FPENET_CORE_LAYERS_H_

#include <cmath>
#include <functional>
#include <string>

#include "fpenet/ops.h"
#include "fpenet/random.h"
#include "fpenet/tensor.h"

namespace fpenet {

// Zero-mean normal with std = sqrt(2 / fan_in), fan_in = (in/groups)*kh*kw.
template <typename T>
Tensor<T> he_normal(const ConvSpec& spec, Rng& rng) {
  Tensor<T> w(spec.weight_shape());
  const double fan_in = static_cast<double>(spec.in_channels / spec.groups) *
                        spec.kernel_h * spec.kernel_w;
  const double stddev = std::sqrt(2.0 / fan_in);
  for (std::size_t i = 0; i < w.size(); ++i) {
    w[i] = static_cast<T>(normal(rng, 0.0, stddev));
  }
  return w;
}

// Bias-free convolution followed by batch norm.
template <typename T>
struct ConvBn {
  ConvSpec spec;
  Tensor<T> weight;
  BatchNormState<T> bn;

  ConvBn() = default;
  ConvBn(const ConvSpec& s, Rng& rng)
      : spec(s), weight(he_normal<T>(s, rng)), bn(s.out_channels) {}
};

// Convolution with bias and no normalization.
template <typename T>
struct ConvBias {
  ConvSpec spec;
  Tensor<T> weight;
  Tensor<T> bias;

  ConvBias() = default;
  ConvBias(const ConvSpec& s, Rng& rng)
      : spec(s),
        weight(he_normal<T>(s, rng)),
        bias(channel_vector<T>(s.out_channels, T(0))) {}
};

// Visitor over named tensors. `learnable` is false for running statistics.
template <typename T>
using TensorVisitor =
    std::function<void(const std::string& name, Tensor<T>& t, int rank,
                       bool learnable)>;

template <typename T>
void visit(ConvBn<T>& l, const std::string& prefix,
           const TensorVisitor<T>& f) {
  f(prefix + ".weight", l.weight, 4, true);
  f(prefix + ".bn.gamma", l.bn.gamma, 1, true);
  f(prefix + ".bn.beta", l.bn.beta, 1, true);
  f(prefix + ".bn.running_mean", l.bn.running_mean, 1, false);
  f(prefix + ".bn.running_var", l.bn.running_var, 1, false);
}

template <typename T>
void visit(ConvBias<T>& l, const std::string& prefix,
           const TensorVisitor<T>& f) {
  f(prefix + ".weight", l.weight, 4, true);
  f(prefix + ".bias", l.bias, 1, true);
}

template <class Ctx>
typename Ctx::Value conv_bn(Ctx& ctx, const typename Ctx::Value& x,
                            const ConvBn<typename Ctx::Scalar>& l, bool relu) {
  auto y = ctx.conv2d(x, ctx.parameter(l.weight), l.spec);
  y = ctx.batch_norm(y, ctx.parameter(l.bn.gamma), ctx.parameter(l.bn.beta),
                     l.bn);
  if (relu) return ctx.relu(y);
  return y;
}

template <class Ctx>
typename Ctx::Value conv_bias(Ctx& ctx, const typename Ctx::Value& x,
                              const ConvBias<typename Ctx::Scalar>& l) {
  return ctx.conv2d(x, ctx.parameter(l.weight), ctx.parameter(l.bias), l.spec);
}

}  // namespace fpenet

#endif  // FPENET_CORE_LAYERS_H_
