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

#include "image_io.h"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <map>
#include <sstream>

#include "fpenet/errors.h"

namespace fpenet::tools {

namespace {

class HeaderReader {
 public:
  explicit HeaderReader(std::string_view b) : b_(b) {}

  int number(const char* what) {
    skip_space_and_comments();
    std::size_t start = pos_;
    while (pos_ < b_.size() && std::isdigit(static_cast<unsigned char>(b_[pos_]))) {
      ++pos_;
    }
    if (start == pos_ || pos_ - start > 9) {
      throw DataError(std::string("PPM header: bad ") + what);
    }
    return std::stoi(std::string(b_.substr(start, pos_ - start)));
  }
  // Exactly one whitespace byte separates the header from the raster.
  std::size_t raster_start() {
    if (pos_ >= b_.size() || !std::isspace(static_cast<unsigned char>(b_[pos_]))) {
      throw DataError("PPM header: missing separator before raster");
    }
    return pos_ + 1;
  }

 private:
  void skip_space_and_comments() {
    while (pos_ < b_.size()) {
      if (std::isspace(static_cast<unsigned char>(b_[pos_]))) {
        ++pos_;
      } else if (b_[pos_] == '#') {
        while (pos_ < b_.size() && b_[pos_] != '\n') ++pos_;
      } else {
        break;
      }
    }
  }

  std::string_view b_;
  std::size_t pos_ = 2;
};

std::string header(const char* magic, int w, int h, int maxval,
                   const std::string& comment) {
  std::string s = magic;
  s += "\n";
  if (!comment.empty()) s += "# " + comment + "\n";
  s += std::to_string(w) + " " + std::to_string(h) + "\n" +
       std::to_string(maxval) + "\n";
  return s;
}

int reflect(int i, int n) {
  if (n == 1) return 0;
  const int period = 2 * (n - 1);
  i %= period;
  if (i < 0) i += period;
  return i < n ? i : period - i;
}

}  // namespace

RgbImage decode_ppm(std::string_view bytes) {
  if (bytes.size() < 2 || bytes[0] != 'P' || bytes[1] != '6') {
    throw DataError("not a binary PPM (expected P6)");
  }
  HeaderReader r(bytes);
  RgbImage img;
  img.w = r.number("width");
  img.h = r.number("height");
  const int maxval = r.number("maxval");
  if (img.w < 1 || img.h < 1) throw DataError("PPM: empty image");
  if (maxval < 1 || maxval > 255) {
    throw DataError("PPM: maxval " + std::to_string(maxval) +
                    " unsupported (1..255)");
  }
  const std::size_t start = r.raster_start();
  const std::size_t n = static_cast<std::size_t>(img.w) * img.h * 3;
  if (bytes.size() - start < n) throw DataError("PPM: truncated raster");
  img.rgb.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const int v = static_cast<unsigned char>(bytes[start + i]);
    img.rgb[i] = static_cast<std::uint8_t>(
        maxval == 255 ? v : std::lround(255.0 * std::min(v, maxval) / maxval));
  }
  return img;
}

std::string encode_ppm(const RgbImage& img, const std::string& comment) {
  std::string s = header("P6", img.w, img.h, 255, comment);
  s.append(img.rgb.begin(), img.rgb.end());
  return s;
}

std::string encode_pgm(const LabelMap& labels, int maxval,
                       const std::string& comment) {
  if (maxval < 1 || maxval > 255) {
    throw DataError("PGM: maxval must be in 1..255");
  }
  std::string s = header("P5", labels.w, labels.h, maxval, comment);
  for (int y = 0; y < labels.h; ++y) {
    for (int x = 0; x < labels.w; ++x) {
      const int v = labels.at(0, y, x);
      if (v < 0 || v > maxval) {
        throw DataError("PGM: label " + std::to_string(v) +
                        " exceeds maxval " + std::to_string(maxval));
      }
      s.push_back(static_cast<char>(v));
    }
  }
  return s;
}

Tensor<float> to_tensor(const RgbImage& img) {
  Tensor<float> t(Shape{1, 3, img.h, img.w});
  for (int y = 0; y < img.h; ++y) {
    for (int x = 0; x < img.w; ++x) {
      for (int c = 0; c < 3; ++c) {
        t.at(0, c, y, x) =
            img.rgb[(static_cast<std::size_t>(y) * img.w + x) * 3 + c] / 255.0f;
      }
    }
  }
  return t;
}

RgbImage from_tensor(const Tensor<float>& t) {
  RgbImage img{t.h(), t.w(), {}};
  img.rgb.resize(static_cast<std::size_t>(t.h()) * t.w() * 3);
  for (int y = 0; y < t.h(); ++y) {
    for (int x = 0; x < t.w(); ++x) {
      for (int c = 0; c < 3; ++c) {
        const float v = std::clamp(t.at(0, c, y, x), 0.0f, 1.0f);
        img.rgb[(static_cast<std::size_t>(y) * t.w() + x) * 3 + c] =
            static_cast<std::uint8_t>(std::lround(v * 255.0f));
      }
    }
  }
  return img;
}

Tensor<float> pad_reflect(const Tensor<float>& t, int h, int w) {
  if (h < t.h() || w < t.w()) {
    throw ConfigError("pad_reflect: target smaller than the image");
  }
  Tensor<float> out(Shape{t.n(), t.c(), h, w});
  for (int n = 0; n < t.n(); ++n) {
    for (int c = 0; c < t.c(); ++c) {
      for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
          out.at(n, c, y, x) = t.at(n, c, reflect(y, t.h()), reflect(x, t.w()));
        }
      }
    }
  }
  return out;
}

LabelMap crop(const LabelMap& m, int h, int w) {
  LabelMap out(m.n, h, w);
  for (int n = 0; n < m.n; ++n) {
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) out.at(n, y, x) = m.at(n, y, x);
    }
  }
  return out;
}

Palette parse_palette(std::string_view text) {
  std::map<int, std::array<std::uint8_t, 3>> entries;
  std::istringstream in{std::string(text)};
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    line = line.substr(0, line.find('#'));
    std::istringstream ls(line);
    int cls, r, g, b;
    if (!(ls >> cls)) continue;
    std::string rest;
    if (!(ls >> r >> g >> b) || (ls >> rest) || cls < 0 || r < 0 || r > 255 ||
        g < 0 || g > 255 || b < 0 || b > 255) {
      throw ConfigError("palette line " + std::to_string(lineno) +
                        ": expected 'class r g b' with values in 0..255");
    }
    if (!entries.emplace(cls, std::array<std::uint8_t, 3>{
                                  static_cast<std::uint8_t>(r),
                                  static_cast<std::uint8_t>(g),
                                  static_cast<std::uint8_t>(b)})
             .second) {
      throw ConfigError("palette line " + std::to_string(lineno) +
                        ": class " + std::to_string(cls) + " repeated");
    }
  }
  Palette p;
  for (const auto& [cls, rgb] : entries) {
    if (cls != static_cast<int>(p.size())) {
      throw ConfigError("palette: class " + std::to_string(p.size()) +
                        " missing");
    }
    p.push_back(rgb);
  }
  if (p.empty()) throw ConfigError("palette: no entries");
  return p;
}

RgbImage colorize(const LabelMap& labels, const Palette& palette) {
  RgbImage img{labels.h, labels.w, {}};
  img.rgb.reserve(static_cast<std::size_t>(labels.h) * labels.w * 3);
  for (int y = 0; y < labels.h; ++y) {
    for (int x = 0; x < labels.w; ++x) {
      const int v = labels.at(0, y, x);
      if (v < 0 || v >= static_cast<int>(palette.size())) {
        throw ConfigError("palette has no color for class " +
                          std::to_string(v));
      }
      img.rgb.insert(img.rgb.end(), palette[v].begin(), palette[v].end());
    }
  }
  return img;
}

}  // namespace fpenet::tools
