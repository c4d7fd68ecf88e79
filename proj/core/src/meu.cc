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

#include "fpenet/meu.h"

#include "fpenet/eager.h"
#include "fpenet/tape.h"

namespace fpenet {

void MeuConfig::validate() const {
  if (high_channels < 1 || low_channels < 1 || out_channels < 1) {
    throw ConfigError("MeuConfig: channel counts must be >= 1");
  }
}

template <typename T>
MeuWeights<T>::MeuWeights(const MeuConfig& cfg, Rng& rng) {
  cfg.validate();
  high_proj = ConvBn<T>(
      ConvSpec::pointwise(cfg.high_channels, cfg.out_channels, false), rng);
  low_proj = ConvBn<T>(
      ConvSpec::pointwise(cfg.low_channels, cfg.out_channels, false), rng);
  channel_gate = ConvBias<T>(
      ConvSpec::pointwise(cfg.out_channels, cfg.out_channels, true), rng);
  spatial_gate = ConvBias<T>(ConvSpec::pointwise(1, 1, true), rng);
}

template <class Ctx>
typename Ctx::Value meu_forward(Ctx& ctx, const typename Ctx::Value& high,
                                const typename Ctx::Value& low,
                                const MeuWeights<typename Ctx::Scalar>& w,
                                const MeuConfig& cfg) {
  using Value = typename Ctx::Value;
  const Shape& hs = ctx.value(high).shape();
  const Shape& ls = ctx.value(low).shape();
  if (hs.c != cfg.high_channels) {
    throw DimensionError("meu_forward high", "channels", cfg.high_channels,
                         hs.c);
  }
  if (ls.c != cfg.low_channels) {
    throw DimensionError("meu_forward low", "channels", cfg.low_channels,
                         ls.c);
  }
  if (ls.n != hs.n) throw DimensionError("meu_forward low", "batch", hs.n, ls.n);
  if (ls.h != 2 * hs.h) {
    throw DimensionError("meu_forward low", "height", 2 * hs.h, ls.h);
  }
  if (ls.w != 2 * hs.w) {
    throw DimensionError("meu_forward low", "width", 2 * hs.w, ls.w);
  }

  Value high_proj = conv_bn(ctx, high, w.high_proj, /*relu=*/false);
  Value low_proj = conv_bn(ctx, low, w.low_proj, /*relu=*/false);

  Value weighted_low = low_proj;
  if (cfg.use_channel_attention) {
    Value gate = ctx.relu(
        conv_bias(ctx, ctx.global_avg_pool(high_proj), w.channel_gate));
    weighted_low = ctx.mul_broadcast(low_proj, gate);
  }

  Value weighted_high = ctx.upsample_bilinear_x2(high_proj);
  if (cfg.use_spatial_attention) {
    Value gate =
        ctx.relu(conv_bias(ctx, ctx.channel_mean(low_proj), w.spatial_gate));
    weighted_high = ctx.mul_broadcast(weighted_high, gate);
  }
  return ctx.add(weighted_low, weighted_high);
}

template struct MeuWeights<float>;
template struct MeuWeights<double>;

template Tensor<float> meu_forward(Eager<float>&, const Tensor<float>&,
                                   const Tensor<float>&,
                                   const MeuWeights<float>&, const MeuConfig&);
template Tensor<double> meu_forward(Eager<double>&, const Tensor<double>&,
                                    const Tensor<double>&,
                                    const MeuWeights<double>&,
                                    const MeuConfig&);
template Var meu_forward(Tape<float>&, const Var&, const Var&,
                         const MeuWeights<float>&, const MeuConfig&);
template Var meu_forward(Tape<double>&, const Var&, const Var&,
                         const MeuWeights<double>&, const MeuConfig&);

}  // namespace fpenet
