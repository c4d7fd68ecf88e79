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

// Geometric training augmentation: horizontal flip, then rotation and
// scaling about the image center c = ((w-1)/2, (h-1)/2). Output keeps the
// input size. Images are resampled bilinearly, labels by nearest neighbor;
// pixels mapping outside the source get the fill values.

#ifndef FPENET_CORE_AUGMENT_H_
#define FPENET_CORE_AUGMENT_H_

#include <utility>

#include "fpenet/dataset.h"
#include "fpenet/loss.h"
#include "fpenet/random.h"

namespace fpenet {

struct AugmentationPolicy {
  double flip_prob = 0.5;
  double max_rotation_deg = 10.0;
  double min_scale = 0.5;
  double max_scale = 1.75;
  int ignore_index = kDefaultIgnoreIndex;
};

struct AugmentParams {
  bool flip = false;
  double rotation_deg = 0.0;
  double scale = 1.0;
};

// Draws flip, rotation and scale, in that order.
AugmentParams draw_augmentation(const AugmentationPolicy& policy, Rng& rng);

// Where source pixel (x, y) lands in the output.
std::pair<double, double> augment_forward_point(double x, double y, int h,
                                                int w, const AugmentParams& p);

// `image` is expected to be normalized, so the default image fill of 0 is
// the channel mean.
Sample apply_augmentation(const Sample& in, const AugmentParams& p,
                          int label_fill, float image_fill = 0.0f);

Sample augment(const Sample& in, const AugmentationPolicy& policy, Rng& rng);

}  // namespace fpenet

#endif  // FPENET_CORE_AUGMENT_H_
