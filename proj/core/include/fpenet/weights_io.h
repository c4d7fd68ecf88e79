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

// Binary weight files.
//
//   "FPEW" | u32 version (1) | u32 tensor count
//   per tensor: u16 name length | name | u8 rank | u32 dims[rank] |
//               f32 data (little endian)
//   u64 checksum: sum of all preceding bytes mod 2^64
//
// Tensors appear in LayerGraph::all_tensors() order. Loading matches by
// name and requires the file to hold exactly the graph's tensor set.

#ifndef FPENET_CORE_WEIGHTS_IO_H_
#define FPENET_CORE_WEIGHTS_IO_H_

#include <cstdint>
#include <string>
#include <string_view>

#include "fpenet/graph.h"

namespace fpenet {

inline constexpr char kWeightMagic[4] = {'F', 'P', 'E', 'W'};
inline constexpr std::uint32_t kWeightVersion = 1;

std::string serialize_weights(const LayerGraph& g);

// Validates everything before touching `g`; on any WeightFormatError the
// graph is left unmodified.
void deserialize_weights(LayerGraph& g, std::string_view bytes);

void save_weights(const LayerGraph& g, const std::string& path);
void load_weights(LayerGraph& g, const std::string& path);

}  // namespace fpenet

#endif  // FPENET_CORE_WEIGHTS_IO_H_
