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

#include "fpenet/fpe.h"

#include <algorithm>
#include <cassert>

#include "fpenet/eager.h"
#include "fpenet/tape.h"

namespace fpenet {

void FpeConfig::validate() const {
  if (in_channels < 1 || out_channels < 1 || expansion < 1) {
    throw ConfigError("FpeConfig: channel counts and expansion must be >= 1");
  }
  if (branches != 1 && branches != 2 && branches != 4) {
    throw ConfigError("FpeConfig: branches must be 1, 2 or 4, got " +
                      std::to_string(branches));
  }
  if (static_cast<int>(dilations.size()) != branches) {
    throw ConfigError("FpeConfig: need one dilation per branch (" +
                      std::to_string(branches) + "), got " +
                      std::to_string(dilations.size()));
  }
  for (std::size_t i = 0; i < dilations.size(); ++i) {
    if (dilations[i] < 1) {
      throw ConfigError("FpeConfig: dilations must be positive");
    }
    if (i > 0 && dilations[i] <= dilations[i - 1]) {
      throw ConfigError("FpeConfig: dilations must be strictly increasing");
    }
  }
  if (stride != 1 && stride != 2) {
    throw ConfigError("FpeConfig: stride must be 1 or 2");
  }
  if (expanded_channels() % branches != 0) {
    throw ConfigError("FpeConfig: expanded channels (" +
                      std::to_string(expanded_channels()) +
                      ") not divisible by branches (" +
                      std::to_string(branches) + ")");
  }
}

std::vector<int> default_dilations(int branches) {
  static const std::vector<int> kLadder{1, 2, 4, 8};
  if (branches < 1 || branches > 4) {
    throw ConfigError("default_dilations: branches must be in [1, 4]");
  }
  return {kLadder.begin(), kLadder.begin() + branches};
}

template <typename T>
FpeWeights<T>::FpeWeights(const FpeConfig& cfg, Rng& rng) {
  cfg.validate();
  const int e = cfg.expanded_channels();
  const int bc = cfg.branch_channels();
  expand = ConvBn<T>(ConvSpec::pointwise(cfg.in_channels, e, false), rng);
  branches.reserve(cfg.branches);
  for (int i = 0; i < cfg.branches; ++i) {
    branches.emplace_back(
        ConvSpec::depthwise3x3(bc, cfg.dilations[i], cfg.stride), rng);
  }
  project = ConvBn<T>(ConvSpec::pointwise(e, cfg.out_channels, false), rng);
}

template <class Ctx>
typename Ctx::Value fpe_forward(Ctx& ctx, const typename Ctx::Value& x,
                                const FpeWeights<typename Ctx::Scalar>& w,
                                const FpeConfig& cfg) {
  using Value = typename Ctx::Value;
  if (ctx.value(x).c() != cfg.in_channels) {
    throw DimensionError("fpe_forward", "channels", cfg.in_channels,
                         ctx.value(x).c());
  }
  Value expanded = conv_bn(ctx, x, w.expand, /*relu=*/true);
  std::vector<Value> subsets = ctx.split_channels(expanded, cfg.branches);
  std::vector<Value> outs;
  outs.reserve(cfg.branches);
  for (int i = 0; i < cfg.branches; ++i) {
    if (cfg.cascade_active() && i > 0) {
      Value in = ctx.add(subsets[i], outs.back());
      outs.push_back(conv_bn(ctx, in, w.branches[i], true));
    } else {
      outs.push_back(conv_bn(ctx, subsets[i], w.branches[i], true));
    }
    assert(ctx.value(outs.back()).shape() == ctx.value(outs.front()).shape());
  }
  Value merged = cfg.branches == 1 ? outs.front() : ctx.concat_channels(outs);
  Value y = conv_bn(ctx, merged, w.project, /*relu=*/false);
  if (cfg.has_residual()) return ctx.add(y, x);
  return y;
}

std::vector<BranchReceptiveField> fpe_receptive_fields(const FpeConfig& cfg) {
  std::vector<BranchReceptiveField> out;
  for (std::size_t i = 0; i < cfg.dilations.size(); ++i) {
    out.push_back({static_cast<int>(i), 2 * cfg.dilations[i] + 1});
  }
  return out;
}

int fpe_max_receptive_field(const FpeConfig& cfg) {
  int best = 1;
  for (const auto& b : fpe_receptive_fields(cfg)) {
    best = std::max(best, b.receptive_field);
  }
  return best;
}

template struct FpeWeights<float>;
template struct FpeWeights<double>;

template Tensor<float> fpe_forward(Eager<float>&, const Tensor<float>&,
                                   const FpeWeights<float>&, const FpeConfig&);
template Tensor<double> fpe_forward(Eager<double>&, const Tensor<double>&,
                                    const FpeWeights<double>&,
                                    const FpeConfig&);
template Var fpe_forward(Tape<float>&, const Var&, const FpeWeights<float>&,
                         const FpeConfig&);
template Var fpe_forward(Tape<double>&, const Var&, const FpeWeights<double>&,
                         const FpeConfig&);

}  // namespace fpenet
