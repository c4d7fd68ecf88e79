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

// Mutual embedding upsample module.
//
// High-level features (h x w) and low-level features (2h x 2w) are each
// projected to out_channels by 1x1 conv + BN. A channel gate built from the
// high branch (global average pool, 1x1 conv, ReLU) scales the low branch; a
// spatial gate built from the low branch (channel mean, 1x1 conv, ReLU)
// scales the x2-upsampled high branch. The two are summed.
//
// Gates use ReLU, not sigmoid. Disabled gates pass their input through.

#ifndef FPENET_CORE_MEU_H_
#define FPENET_CORE_MEU_H_

#include <string>

#include "fpenet/layers.h"

namespace fpenet {

struct MeuConfig {
  int high_channels = 64;
  int low_channels = 32;
  int out_channels = 64;
  bool use_channel_attention = true;
  bool use_spatial_attention = true;

  void validate() const;
};

template <typename T>
struct MeuWeights {
  ConvBn<T> high_proj;
  ConvBn<T> low_proj;
  ConvBias<T> channel_gate;  // out -> out, on the pooled vector
  ConvBias<T> spatial_gate;  // 1 -> 1, on the channel-mean map

  MeuWeights() = default;
  MeuWeights(const MeuConfig& cfg, Rng& rng);
};

// Gate weights are only visited when the gate is enabled.
template <typename T>
void visit(MeuWeights<T>& w, const MeuConfig& cfg, const std::string& prefix,
           const TensorVisitor<T>& f) {
  visit(w.high_proj, prefix + ".high", f);
  visit(w.low_proj, prefix + ".low", f);
  if (cfg.use_channel_attention) visit(w.channel_gate, prefix + ".ca", f);
  if (cfg.use_spatial_attention) visit(w.spatial_gate, prefix + ".sa", f);
}

template <class Ctx>
typename Ctx::Value meu_forward(Ctx& ctx, const typename Ctx::Value& high,
                                const typename Ctx::Value& low,
                                const MeuWeights<typename Ctx::Scalar>& w,
                                const MeuConfig& cfg);

}  // namespace fpenet

#endif  // FPENET_CORE_MEU_H_
