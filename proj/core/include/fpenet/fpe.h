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

// Feature pyramid encoding block.
//
//   x -> 1x1 expand (xk) + BN + ReLU -> split into b subsets F_1..F_b
//     -> D_i: 3x3 depthwise conv, dilation d_i, padding d_i, + BN + ReLU
//        input of D_i is F_i + out(D_{i-1}) when the cascade is active
//     -> concat -> 1x1 linear projection + BN -> (+ x when residual)
//
// The cascade runs only at stride 1: a strided D_{i-1} output cannot be
// added to the full-resolution F_i.

#ifndef FPENET_CORE_FPE_H_
#define FPENET_CORE_FPE_H_

#include <string>
#include <vector>

#include "fpenet/layers.h"

namespace fpenet {

struct FpeConfig {
  int in_channels = 16;
  int out_channels = 16;
  int expansion = 4;
  int branches = 4;
  std::vector<int> dilations{1, 2, 4, 8};
  int stride = 1;
  bool inter_branch_add = true;

  void validate() const;
  int expanded_channels() const { return in_channels * expansion; }
  int branch_channels() const { return expanded_channels() / branches; }
  bool has_residual() const {
    return stride == 1 && in_channels == out_channels;
  }
  bool cascade_active() const { return inter_branch_add && stride == 1; }
};

// Default dilation ladder for a branch count: prefix of 1, 2, 4, 8.
std::vector<int> default_dilations(int branches);

template <typename T>
struct FpeWeights {
  ConvBn<T> expand;
  std::vector<ConvBn<T>> branches;
  ConvBn<T> project;

  FpeWeights() = default;
  FpeWeights(const FpeConfig& cfg, Rng& rng);
};

template <typename T>
void visit(FpeWeights<T>& w, const std::string& prefix,
           const TensorVisitor<T>& f) {
  visit(w.expand, prefix + ".expand", f);
  for (std::size_t i = 0; i < w.branches.size(); ++i) {
    visit(w.branches[i], prefix + ".branch" + std::to_string(i), f);
  }
  visit(w.project, prefix + ".project", f);
}

// Ctx is Eager<T> or Tape<T>.
template <class Ctx>
typename Ctx::Value fpe_forward(Ctx& ctx, const typename Ctx::Value& x,
                                const FpeWeights<typename Ctx::Scalar>& w,
                                const FpeConfig& cfg);

struct BranchReceptiveField {
  int branch = 0;
  int receptive_field = 0;
};

// Single-conv receptive field 2*d_i + 1 of each branch.
std::vector<BranchReceptiveField> fpe_receptive_fields(const FpeConfig& cfg);
int fpe_max_receptive_field(const FpeConfig& cfg);

}  // namespace fpenet

#endif  // FPENET_CORE_FPE_H_
