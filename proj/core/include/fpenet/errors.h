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

#ifndef FPENET_CORE_ERRORS_H_
#define FPENET_CORE_ERRORS_H_

#include <stdexcept>
#include <string>

namespace fpenet {

// Root of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Two tensors disagree along one axis.
class DimensionError : public Error {
 public:
  DimensionError(std::string context, std::string axis, long expected,
                 long actual)
      : Error(context + ": " + axis + " mismatch (expected " +
              std::to_string(expected) + ", got " + std::to_string(actual) +
              ")"),
        axis_(std::move(axis)),
        expected_(expected),
        actual_(actual) {}

  const std::string& axis() const { return axis_; }
  long expected() const { return expected_; }
  long actual() const { return actual_; }

 private:
  std::string axis_;
  long expected_;
  long actual_;
};

// Invalid hyperparameters, layer specs or config text.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Bad input data (out-of-range labels, malformed images).
class DataError : public Error {
 public:
  using Error::Error;
};

// Non-finite loss or gradient during optimization.
class NumericalError : public Error {
 public:
  using Error::Error;
};

// A metric asked of data that cannot define it (e.g. nothing counted).
class UndefinedMetricError : public Error {
 public:
  using Error::Error;
};

// Weight file problems. Each failure mode has its own kind.
class WeightFormatError : public Error {
 public:
  enum class Kind {
    kBadMagic,
    kBadVersion,
    kMissingTensor,
    kUnexpectedTensor,
    kShapeMismatch,
    kCorrupt,
  };

  WeightFormatError(Kind kind, const std::string& what)
      : Error(what), kind_(kind) {}

  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

}  // namespace fpenet

#endif  // FPENET_CORE_ERRORS_H_
