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

#include <algorithm>
#include <cmath>

#include "fpenet/dataset.h"
#include "fpenet/errors.h"
#include "fpenet/random.h"

namespace fpenet {

namespace {

constexpr double kNoise = 0.12;
constexpr double kTexture = 0.08;
constexpr double kColorJitter = 0.06;

struct Paint {
  bool disc = false;
  int cls = 1;
  double cy = 0, cx = 0;
  double ry = 0, rx = 0;  // half extents; ry == rx for discs
  std::array<double, 3> color{};

  bool covers(int y, int x) const {
    const double dy = y + 0.5 - cy, dx = x + 0.5 - cx;
    if (disc) return dy * dy + dx * dx <= ry * ry;
    return std::abs(dy) <= ry && std::abs(dx) <= rx;
  }
};

}  // namespace

std::array<float, 3> toy_class_color(int cls) {
  static const std::array<std::array<float, 3>, 8> kPalette{{
      {0.45f, 0.45f, 0.45f},
      {0.85f, 0.25f, 0.20f},
      {0.20f, 0.70f, 0.30f},
      {0.20f, 0.30f, 0.85f},
      {0.85f, 0.80f, 0.20f},
      {0.70f, 0.25f, 0.75f},
      {0.20f, 0.75f, 0.80f},
      {0.95f, 0.55f, 0.15f},
  }};
  if (cls >= 0 && cls < static_cast<int>(kPalette.size())) return kPalette[cls];
  // Beyond the palette: a fixed scramble of the class index.
  const unsigned h = static_cast<unsigned>(cls) * 2654435761u;
  return {0.15f + 0.7f * ((h >> 8) & 255) / 255.0f,
          0.15f + 0.7f * ((h >> 16) & 255) / 255.0f,
          0.15f + 0.7f * ((h >> 24) & 255) / 255.0f};
}

std::vector<Sample> make_toy_dataset(std::uint64_t seed, int n_images, int h,
                                     int w, int num_classes) {
  if (num_classes < 2) throw ConfigError("toy dataset: need at least 2 classes");
  if (h < 8 || w < 8 || h % 8 != 0 || w % 8 != 0) {
    throw ConfigError("toy dataset: size must be divisible by 8, got " +
                      std::to_string(h) + "x" + std::to_string(w));
  }
  Rng rng(seed);
  std::vector<Sample> out;
  out.reserve(n_images);
  const double side = std::min(h, w);
  for (int i = 0; i < n_images; ++i) {
    std::vector<int> classes;
    for (int c = 1; c < num_classes; ++c) classes.push_back(c);
    shuffle(classes, rng);
    const int count = uniform_int(rng, 1, std::min(3, num_classes - 1));

    std::vector<Paint> paints;
    for (int k = 0; k < count; ++k) {
      Paint p;
      p.cls = classes[k];
      p.disc = uniform01(rng) < 0.5;
      p.cy = uniform(rng, 0.15, 0.85) * h;
      p.cx = uniform(rng, 0.15, 0.85) * w;
      if (p.disc) {
        p.ry = p.rx = uniform(rng, 0.12, 0.25) * side;
      } else {
        p.ry = uniform(rng, 0.08, 0.25) * side;
        p.rx = uniform(rng, 0.08, 0.25) * side;
      }
      const auto base = toy_class_color(p.cls);
      for (int ch = 0; ch < 3; ++ch) {
        p.color[ch] = base[ch] + uniform(rng, -kColorJitter, kColorJitter);
      }
      paints.push_back(p);
    }

    const auto bg = toy_class_color(0);
    std::array<double, 3> fy{}, fx{}, phase{};
    for (int ch = 0; ch < 3; ++ch) {
      fy[ch] = uniform(rng, 0.1, 0.6);
      fx[ch] = uniform(rng, 0.1, 0.6);
      phase[ch] = uniform(rng, 0.0, 6.283185307179586);
    }

    Sample s{Tensor<float>(Shape{1, 3, h, w}), LabelMap(1, h, w)};
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        const Paint* top = nullptr;
        for (const Paint& p : paints) {
          if (p.covers(y, x)) top = &p;
        }
        s.labels.at(0, y, x) = top ? top->cls : 0;
        for (int ch = 0; ch < 3; ++ch) {
          double v = top ? top->color[ch]
                         : bg[ch] + kTexture * std::sin(fy[ch] * y +
                                                        fx[ch] * x + phase[ch]);
          v += uniform(rng, -kNoise, kNoise);
          s.image.at(0, ch, y, x) = static_cast<float>(std::clamp(v, 0.0, 1.0));
        }
      }
    }
    out.push_back(std::move(s));
  }
  return out;
}

Tensor<float> channel_means(const std::vector<Sample>& samples) {
  Tensor<float> mean(Shape{1, 3, 1, 1});
  if (samples.empty()) return mean;
  for (int ch = 0; ch < 3; ++ch) {
    double sum = 0.0;
    std::size_t count = 0;
    for (const Sample& s : samples) {
      const float* p = s.image.plane(0, ch);
      for (std::size_t i = 0; i < s.image.shape().plane(); ++i) sum += p[i];
      count += s.image.shape().plane();
    }
    mean[ch] = static_cast<float>(sum / count);
  }
  return mean;
}

Tensor<float> normalize(const Tensor<float>& image, const Tensor<float>& mean) {
  if (mean.size() != static_cast<std::size_t>(image.c())) {
    throw DimensionError("normalize", "channels", image.c(),
                         static_cast<long>(mean.size()));
  }
  Tensor<float> out(image.shape());
  const std::size_t plane = image.shape().plane();
  for (int n = 0; n < image.n(); ++n) {
    for (int c = 0; c < image.c(); ++c) {
      const float* src = image.plane(n, c);
      float* dst = out.plane(n, c);
      for (std::size_t i = 0; i < plane; ++i) dst[i] = src[i] - mean[c];
    }
  }
  return out;
}

}  // namespace fpenet
