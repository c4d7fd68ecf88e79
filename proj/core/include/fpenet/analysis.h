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

// Static cost model computed from a ModelConfig alone, without building
// the network.
//
// Convention: one MAC is one multiply-accumulate of a convolution. BN,
// ReLU, additions, gate products, pooling and upsampling are tallied
// separately as elementwise ops (one per output element). Parameters are
// learnable tensors only; BN running statistics are excluded.

#ifndef FPENET_CORE_ANALYSIS_H_
#define FPENET_CORE_ANALYSIS_H_

#include <cstdint>
#include <string>
#include <vector>

#include "fpenet/config.h"
#include "fpenet/ops.h"

namespace fpenet {

std::int64_t conv_params(const ConvSpec& spec);
// out_h * out_w * out_c * (in / groups) * kh * kw.
std::int64_t conv_macs(const ConvSpec& spec, int out_h, int out_w);

struct CostRow {
  std::string name;
  std::string op;
  Shape shape;  // output, batch 1
  std::int64_t params = 0;
  std::int64_t macs = 0;
  std::int64_t elementwise = 0;
  int receptive_field = 1;
  int jump = 1;
};

struct CostReport {
  int input_h = 0;
  int input_w = 0;
  std::vector<CostRow> rows;
  std::int64_t total_params = 0;
  std::int64_t total_macs = 0;
  std::int64_t total_elementwise = 0;
  std::string convention;
};

// Full report at (h, w). Throws ConfigError for invalid configs or sizes
// not divisible by 8.
CostReport analyze(const ModelConfig& cfg, int h, int w);
// Report at the config's own input size.
CostReport count_params(const ModelConfig& cfg);
CostReport count_macs(const ModelConfig& cfg, int h, int w);

// Aligned columns, totals in MACs and 2 x MACs.
std::string format_report_text(const CostReport& r);
// One "name<TAB>shape<TAB>params<TAB>macs<TAB>rf" line per row, then a
// "total" line and an "elementwise" line.
std::string format_report_machine(const CostReport& r);

struct RfRow {
  std::string name;
  int receptive_field = 1;
  int jump = 1;
};

// Cumulative receptive field after each encoder layer, using the widest
// branch of every FPE block. rf' = rf + (d(k-1)) * jump, jump' = jump * s.
std::vector<RfRow> receptive_field_table(const ModelConfig& cfg);

struct ShapeRow {
  std::string name;
  std::string op;
  int channels = 0;
  int h = 0;
  int w = 0;
};

// Six rows: stage1, stage2, stage3, decoder2, decoder1, final.
std::vector<ShapeRow> shape_table(const ModelConfig& cfg, int h, int w);
std::string format_shape_table(const std::vector<ShapeRow>& rows);

// MACs of a 3x3 standard conv divided by 3x3 depthwise + 1x1 pointwise,
// at c_in = c_out = channels and any spatial size, as a reduced fraction.
struct Fraction {
  std::int64_t num = 0;
  std::int64_t den = 1;
  double value() const { return static_cast<double>(num) / den; }
  bool operator==(const Fraction&) const = default;
};
Fraction separable_cost_ratio(int channels);

}  // namespace fpenet

#endif  // FPENET_CORE_ANALYSIS_H_
