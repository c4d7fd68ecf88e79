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

// Forward and backward kernels for the primitive layers. Every function is
// pure: inputs are read-only and results are returned by value. The
// autograd tape (tape.h) and the eager executor (eager.h) are thin wrappers
// around these.

#ifndef FPENET_CORE_OPS_H_
#define FPENET_CORE_OPS_H_

#include <optional>
#include <vector>

#include "fpenet/tensor.h"

namespace fpenet {

struct ConvSpec {
  int in_channels = 1;
  int out_channels = 1;
  int kernel_h = 1;
  int kernel_w = 1;
  int stride = 1;
  int dilation = 1;
  int padding = 0;
  int groups = 1;
  bool has_bias = false;

  // Throws ConfigError when the spec is inconsistent.
  void validate() const;
  Shape weight_shape() const {
    return Shape{out_channels, in_channels / groups, kernel_h, kernel_w};
  }
  // floor((in + 2p - d(k-1) - 1) / s) + 1; ConfigError if < 1.
  int output_extent(int in, int kernel) const;
  Shape output_shape(const Shape& in) const;

  // 3x3 depthwise conv with padding = dilation.
  static ConvSpec depthwise3x3(int channels, int dilation, int stride);
  static ConvSpec pointwise(int in, int out, bool bias);
};

enum class BnMode { kTrain, kInfer };

// Batch norm parameters and running statistics. Vectors are (1, C, 1, 1).
template <typename T>
struct BatchNormState {
  static constexpr double kDefaultEps = 1e-5;
  static constexpr double kDefaultMomentum = 0.1;

  Tensor<T> gamma;
  Tensor<T> beta;
  Tensor<T> running_mean;
  Tensor<T> running_var;
  T eps = T(kDefaultEps);
  T momentum = T(kDefaultMomentum);

  BatchNormState() = default;
  explicit BatchNormState(int channels)
      : gamma(channel_vector<T>(channels, T(1))),
        beta(channel_vector<T>(channels, T(0))),
        running_mean(channel_vector<T>(channels, T(0))),
        running_var(channel_vector<T>(channels, T(1))) {}

  int channels() const { return gamma.c(); }

  // running <- (1 - momentum) * running + momentum * batch. The variance
  // passed in is the unbiased batch estimate.
  void update_running(const Tensor<T>& batch_mean,
                      const Tensor<T>& batch_var_unbiased);
};

namespace ops {

template <typename T>
Tensor<T> conv2d(const Tensor<T>& x, const Tensor<T>& weight,
                 const Tensor<T>* bias, const ConvSpec& spec);

template <typename T>
struct ConvGrads {
  Tensor<T> input;
  Tensor<T> weight;
  std::optional<Tensor<T>> bias;
};

template <typename T>
ConvGrads<T> conv2d_backward(const Tensor<T>& x, const Tensor<T>& weight,
                             const Tensor<T>& grad_out, const ConvSpec& spec);

// Batch-statistics normalization. `normalized` (x_hat) and `inv_std` are
// what the backward rule needs; mean and var are the per-channel batch
// moments (var is biased, i.e. divided by the count).
template <typename T>
struct BatchNormTrainResult {
  Tensor<T> output;
  Tensor<T> normalized;
  Tensor<T> mean;
  Tensor<T> var;
  Tensor<T> inv_std;
  long count = 0;
};

template <typename T>
BatchNormTrainResult<T> batch_norm_train(const Tensor<T>& x,
                                         const Tensor<T>& gamma,
                                         const Tensor<T>& beta, T eps);

template <typename T>
Tensor<T> batch_norm_infer(const Tensor<T>& x, const Tensor<T>& gamma,
                           const Tensor<T>& beta,
                           const Tensor<T>& running_mean,
                           const Tensor<T>& running_var, T eps);

template <typename T>
struct BatchNormGrads {
  Tensor<T> input;
  Tensor<T> gamma;
  Tensor<T> beta;
};

template <typename T>
BatchNormGrads<T> batch_norm_train_backward(const Tensor<T>& normalized,
                                            const Tensor<T>& inv_std,
                                            const Tensor<T>& gamma,
                                            const Tensor<T>& grad_out);

template <typename T>
BatchNormGrads<T> batch_norm_infer_backward(const Tensor<T>& x,
                                            const Tensor<T>& gamma,
                                            const Tensor<T>& running_mean,
                                            const Tensor<T>& running_var,
                                            T eps, const Tensor<T>& grad_out);

template <typename T>
Tensor<T> relu(const Tensor<T>& x);
template <typename T>
Tensor<T> relu_backward(const Tensor<T>& x, const Tensor<T>& grad_out);

template <typename T>
Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b);

// b is (n,c,1,1) or (n,1,h,w) against a of (n,c,h,w).
template <typename T>
Tensor<T> mul_broadcast(const Tensor<T>& a, const Tensor<T>& b);

template <typename T>
std::pair<Tensor<T>, Tensor<T>> mul_broadcast_backward(
    const Tensor<T>& a, const Tensor<T>& b, const Tensor<T>& grad_out);

template <typename T>
Tensor<T> concat_channels(const std::vector<const Tensor<T>*>& parts);
template <typename T>
Tensor<T> concat_channels(const std::vector<Tensor<T>>& parts);

template <typename T>
std::vector<Tensor<T>> split_channels(const Tensor<T>& x, int parts);

template <typename T>
Tensor<T> global_avg_pool(const Tensor<T>& x);
// Spreads each (n,c) gradient uniformly over the h x w plane.
template <typename T>
Tensor<T> global_avg_pool_backward(const Tensor<T>& grad_out, int h, int w);

template <typename T>
Tensor<T> channel_mean(const Tensor<T>& x);
template <typename T>
Tensor<T> channel_mean_backward(const Tensor<T>& grad_out, int channels);

// Half-pixel aligned x2 bilinear upsampling with border clamping:
// src = (dst + 0.5) / 2 - 0.5.
template <typename T>
Tensor<T> upsample_bilinear_x2(const Tensor<T>& x);
template <typename T>
Tensor<T> upsample_bilinear_x2_backward(const Tensor<T>& grad_out);

}  // namespace ops
}  // namespace fpenet

#endif  // FPENET_CORE_OPS_H_
