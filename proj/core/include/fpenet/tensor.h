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

#ifndef FPENET_CORE_TENSOR_H_
#define FPENET_CORE_TENSOR_H_

#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "fpenet/errors.h"

namespace fpenet {

// NCHW extents. All four are >= 1 for a valid tensor.
struct Shape {
  int n = 1;
  int c = 1;
  int h = 1;
  int w = 1;

  std::size_t size() const {
    return static_cast<std::size_t>(n) * c * h * w;
  }
  std::size_t plane() const { return static_cast<std::size_t>(h) * w; }
  bool operator==(const Shape&) const = default;

  std::string to_string() const {
    return std::to_string(n) + "x" + std::to_string(c) + "x" +
           std::to_string(h) + "x" + std::to_string(w);
  }
};

// Dense rank-4 array in NCHW layout. T is float for training and inference
// and double for finite-difference checks.
template <typename T>
class Tensor {
 public:
  using value_type = T;

  Tensor() = default;
  explicit Tensor(Shape shape, T fill = T(0)) : shape_(shape) {
    validate();
    data_.assign(shape_.size(), fill);
  }
  Tensor(Shape shape, std::vector<T> data)
      : shape_(shape), data_(std::move(data)) {
    validate();
    if (data_.size() != shape_.size()) {
      throw DimensionError("Tensor", "element count",
                           static_cast<long>(shape_.size()),
                           static_cast<long>(data_.size()));
    }
  }

  const Shape& shape() const { return shape_; }
  int n() const { return shape_.n; }
  int c() const { return shape_.c; }
  int h() const { return shape_.h; }
  int w() const { return shape_.w; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  std::span<T> data() { return data_; }
  std::span<const T> data() const { return data_; }
  T* ptr() { return data_.data(); }
  const T* ptr() const { return data_.data(); }

  std::size_t offset(int n, int c, int y, int x) const {
    return ((static_cast<std::size_t>(n) * shape_.c + c) * shape_.h + y) *
               shape_.w +
           x;
  }
  T& at(int n, int c, int y, int x) { return data_[offset(n, c, y, x)]; }
  const T& at(int n, int c, int y, int x) const {
    return data_[offset(n, c, y, x)];
  }
  T& operator[](std::size_t i) { return data_[i]; }
  const T& operator[](std::size_t i) const { return data_[i]; }

  // Pointer to the (n, c) plane.
  T* plane(int n, int c) { return data_.data() + offset(n, c, 0, 0); }
  const T* plane(int n, int c) const {
    return data_.data() + offset(n, c, 0, 0);
  }

  template <typename U>
  Tensor<U> cast() const {
    Tensor<U> out(shape_);
    for (std::size_t i = 0; i < data_.size(); ++i) {
      out[i] = static_cast<U>(data_[i]);
    }
    return out;
  }

  bool operator==(const Tensor&) const = default;

 private:
  void validate() const {
    if (shape_.n < 1 || shape_.c < 1 || shape_.h < 1 || shape_.w < 1) {
      throw ConfigError("Tensor: every extent must be >= 1, got " +
                        shape_.to_string());
    }
  }

  Shape shape_{};
  std::vector<T> data_;
};

// Per-channel vector stored as a (1, C, 1, 1) tensor so it broadcasts.
template <typename T>
Tensor<T> channel_vector(int channels, T fill) {
  return Tensor<T>(Shape{1, channels, 1, 1}, fill);
}

}  // namespace fpenet

#endif  // FPENET_CORE_TENSOR_H_
