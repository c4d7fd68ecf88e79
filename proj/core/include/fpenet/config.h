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

// Network hyperparameters and their text format.
//
// One `key=value` per line; `#` starts a comment; blank lines are ignored.
//
//   p, q          blocks after the downsampling block of stages 2 and 3
//   classes       number of output classes
//   branches      1, 2 or 4
//   dilations     comma list, one rate per branch (default 1,2,4,8 prefix)
//   channels      comma triple for stages 1..3 (default 16,32,64)
//   input         HxW, both divisible by 8
//   add, longskip, ca, sa   on|off
//   decoder       meu|bilinear
//
// Unknown keys are rejected.

#ifndef FPENET_CORE_CONFIG_H_
#define FPENET_CORE_CONFIG_H_

#include <array>
#include <string>
#include <string_view>
#include <vector>

namespace fpenet {

enum class DecoderKind { kMeu, kBilinear };

struct ModelConfig {
  int num_classes = 19;
  int p = 3;
  int q = 9;
  int branches = 4;
  std::vector<int> dilations{1, 2, 4, 8};
  std::array<int, 3> stage_channels{16, 32, 64};
  int expansion = 4;
  bool inter_branch_add = true;
  bool long_skip = true;
  bool meu_channel_attention = true;
  bool meu_spatial_attention = true;
  DecoderKind decoder = DecoderKind::kMeu;
  int input_h = 1024;
  int input_w = 512;

  // Throws ConfigError naming the violated rule.
  void validate() const;
  bool operator==(const ModelConfig&) const = default;
};

ModelConfig parse_config(std::string_view text);
ModelConfig load_config_file(const std::string& path);
std::string format_config(const ModelConfig& cfg);

// Parses "HxW" (e.g. "1024x512").
std::pair<int, int> parse_size(std::string_view text);

}  // namespace fpenet

#endif  // FPENET_CORE_CONFIG_H_
