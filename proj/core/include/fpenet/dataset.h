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

// Image/label samples and the synthetic segmentation dataset.

#ifndef FPENET_CORE_DATASET_H_
#define FPENET_CORE_DATASET_H_

#include <array>
#include <cstdint>
#include <vector>

#include "fpenet/label_map.h"
#include "fpenet/tensor.h"

namespace fpenet {

// image: (1, 3, h, w); labels: (1, h, w).
struct Sample {
  Tensor<float> image;
  LabelMap labels;
};

// Mean RGB color used for a class in the toy data.
std::array<float, 3> toy_class_color(int cls);

// Textured class-0 background with 1..min(3, C-1) rectangles and discs of
// distinct classes painted over it. Pixel colors follow the class color
// plus texture and noise; raw values lie in [0, 1]. Labels are the exact
// shape masks. Deterministic per seed. ConfigError unless C >= 2 and
// h, w are divisible by 8.
std::vector<Sample> make_toy_dataset(std::uint64_t seed, int n_images, int h,
                                     int w, int num_classes);

// Per-channel mean over all images, as (1, 3, 1, 1).
Tensor<float> channel_means(const std::vector<Sample>& samples);

// image - mean, broadcast over channels.
Tensor<float> normalize(const Tensor<float>& image, const Tensor<float>& mean);

}  // namespace fpenet

#endif  // FPENET_CORE_DATASET_H_
