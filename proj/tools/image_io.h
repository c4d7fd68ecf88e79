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

// Binary PPM (P6) / PGM (P5) encoding and helpers for the command line.

#ifndef FPENET_TOOLS_IMAGE_IO_H_
#define FPENET_TOOLS_IMAGE_IO_H_

#include <array>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "fpenet/label_map.h"
#include "fpenet/tensor.h"

namespace fpenet::tools {

struct RgbImage {
  int h = 0;
  int w = 0;
  std::vector<std::uint8_t> rgb;  // interleaved, row-major
};

// P6 with maxval <= 255; '#' comments allowed in the header. DataError on
// malformed input.
RgbImage decode_ppm(std::string_view bytes);
std::string encode_ppm(const RgbImage& img, const std::string& comment = "");
// Labels of batch item 0; DataError if a label exceeds maxval.
std::string encode_pgm(const LabelMap& labels, int maxval,
                       const std::string& comment = "");

// (1, 3, h, w) in [0, 1].
Tensor<float> to_tensor(const RgbImage& img);
RgbImage from_tensor(const Tensor<float>& t);

// Mirror padding (edge pixel not repeated) on the bottom and right.
Tensor<float> pad_reflect(const Tensor<float>& t, int h, int w);
LabelMap crop(const LabelMap& m, int h, int w);

using Palette = std::vector<std::array<std::uint8_t, 3>>;

// Text lines "class r g b"; '#' comments. Classes must be 0..n-1 with no
// gaps.
Palette parse_palette(std::string_view text);
RgbImage colorize(const LabelMap& labels, const Palette& palette);

}  // namespace fpenet::tools

#endif  // FPENET_TOOLS_IMAGE_IO_H_
