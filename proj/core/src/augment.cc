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

#include "fpenet/augment.h"

#include <algorithm>
#include <cmath>

namespace fpenet {

namespace {

constexpr double kPi = 3.141592653589793;

}  // namespace

AugmentParams draw_augmentation(const AugmentationPolicy& policy, Rng& rng) {
  AugmentParams p;
  p.flip = uniform01(rng) < policy.flip_prob;
  p.rotation_deg =
      uniform(rng, -policy.max_rotation_deg, policy.max_rotation_deg);
  p.scale = uniform(rng, policy.min_scale, policy.max_scale);
  return p;
}

std::pair<double, double> augment_forward_point(double x, double y, int h,
                                                int w,
                                                const AugmentParams& p) {
  const double cx = (w - 1) / 2.0, cy = (h - 1) / 2.0;
  if (p.flip) x = (w - 1) - x;
  const double t = p.rotation_deg * kPi / 180.0;
  const double u = x - cx, v = y - cy;
  return {cx + p.scale * (std::cos(t) * u - std::sin(t) * v),
          cy + p.scale * (std::sin(t) * u + std::cos(t) * v)};
}

Sample apply_augmentation(const Sample& in, const AugmentParams& p,
                          int label_fill, float image_fill) {
  const int h = in.image.h(), w = in.image.w(), C = in.image.c();
  Sample out{Tensor<float>(in.image.shape()), LabelMap(1, h, w)};
  const double cx = (w - 1) / 2.0, cy = (h - 1) / 2.0;
  const double t = p.rotation_deg * kPi / 180.0;
  const double ct = std::cos(t), st = std::sin(t);
  const double inv = 1.0 / p.scale;

  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const double u = x - cx, v = y - cy;
      double sx = cx + (ct * u + st * v) * inv;
      const double sy = cy + (-st * u + ct * v) * inv;
      if (p.flip) sx = (w - 1) - sx;
      const long nx = std::lround(sx), ny = std::lround(sy);
      if (nx < 0 || nx >= w || ny < 0 || ny >= h) {
        out.labels.at(0, y, x) = label_fill;
        for (int c = 0; c < C; ++c) out.image.at(0, c, y, x) = image_fill;
        continue;
      }
      out.labels.at(0, y, x) = in.labels.at(0, static_cast<int>(ny),
                                            static_cast<int>(nx));
      const double qx = std::clamp(sx, 0.0, w - 1.0);
      const double qy = std::clamp(sy, 0.0, h - 1.0);
      const int x0 = static_cast<int>(qx), y0 = static_cast<int>(qy);
      const int x1 = std::min(x0 + 1, w - 1), y1 = std::min(y0 + 1, h - 1);
      const float fx = static_cast<float>(qx - x0);
      const float fy = static_cast<float>(qy - y0);
      for (int c = 0; c < C; ++c) {
        const float a = in.image.at(0, c, y0, x0), b = in.image.at(0, c, y0, x1);
        const float d = in.image.at(0, c, y1, x0), e = in.image.at(0, c, y1, x1);
        const float top = a + (b - a) * fx;
        const float bottom = d + (e - d) * fx;
        out.image.at(0, c, y, x) = top + (bottom - top) * fy;
      }
    }
  }
  return out;
}

Sample augment(const Sample& in, const AugmentationPolicy& policy, Rng& rng) {
  return apply_augmentation(in, draw_augmentation(policy, rng),
                            policy.ignore_index);
}

}  // namespace fpenet
