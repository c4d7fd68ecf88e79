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

#include "fpenet/weights_io.h"

#include <bit>
#include <cstring>
#include <map>
#include <vector>

#include "fpenet/errors.h"
#include "fpenet/file_io.h"

namespace fpenet {

namespace {

using Kind = WeightFormatError::Kind;

template <typename U>
void put(std::string& out, U v) {
  for (std::size_t i = 0; i < sizeof(U); ++i) {
    out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
  }
}

void put_f32(std::string& out, float f) {
  put(out, std::bit_cast<std::uint32_t>(f));
}

std::uint64_t byte_sum(std::string_view bytes) {
  std::uint64_t s = 0;
  for (char c : bytes) s += static_cast<unsigned char>(c);
  return s;
}

class Reader {
 public:
  explicit Reader(std::string_view bytes) : bytes_(bytes) {}

  template <typename U>
  U get() {
    need(sizeof(U));
    U v = 0;
    for (std::size_t i = 0; i < sizeof(U); ++i) {
      v |= static_cast<U>(static_cast<unsigned char>(bytes_[pos_ + i]))
           << (8 * i);
    }
    pos_ += sizeof(U);
    return v;
  }
  std::string_view take(std::size_t n) {
    need(n);
    std::string_view s = bytes_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  std::size_t pos() const { return pos_; }

 private:
  void need(std::size_t n) const {
    if (bytes_.size() - pos_ < n) {
      throw WeightFormatError(Kind::kCorrupt,
                              "weight file truncated at byte " +
                                  std::to_string(pos_));
    }
  }

  std::string_view bytes_;
  std::size_t pos_ = 0;
};

struct Record {
  std::vector<std::uint32_t> dims;
  std::vector<float> data;
};

std::string dims_string(const std::vector<std::uint32_t>& dims) {
  std::string s = "[";
  for (std::size_t i = 0; i < dims.size(); ++i) {
    if (i) s += ",";
    s += std::to_string(dims[i]);
  }
  return s + "]";
}

}  // namespace

std::string serialize_weights(const LayerGraph& g) {
  const auto tensors = g.all_tensors();
  std::string out(kWeightMagic, 4);
  put<std::uint32_t>(out, kWeightVersion);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(tensors.size()));
  for (const auto& t : tensors) {
    put<std::uint16_t>(out, static_cast<std::uint16_t>(t.name.size()));
    out += t.name;
    const auto dims = t.dims();
    put<std::uint8_t>(out, static_cast<std::uint8_t>(dims.size()));
    for (std::uint32_t d : dims) put<std::uint32_t>(out, d);
    for (float f : t.tensor->data()) put_f32(out, f);
  }
  put<std::uint64_t>(out, byte_sum(out));
  return out;
}

void deserialize_weights(LayerGraph& g, std::string_view bytes) {
  if (bytes.size() < 4 || std::memcmp(bytes.data(), kWeightMagic, 4) != 0) {
    throw WeightFormatError(Kind::kBadMagic, "not a weight file (bad magic)");
  }
  if (bytes.size() < 4 + 4 + 4 + 8) {
    throw WeightFormatError(Kind::kCorrupt, "weight file truncated");
  }
  Reader r(bytes);
  r.take(4);
  const auto version = r.get<std::uint32_t>();
  if (version != kWeightVersion) {
    throw WeightFormatError(Kind::kBadVersion,
                            "unsupported weight file version " +
                                std::to_string(version));
  }
  const std::string_view body = bytes.substr(0, bytes.size() - 8);
  Reader tail(bytes.substr(bytes.size() - 8));
  if (tail.get<std::uint64_t>() != byte_sum(body)) {
    throw WeightFormatError(Kind::kCorrupt, "weight file checksum mismatch");
  }

  Reader rb(body);
  rb.take(8);
  const auto count = rb.get<std::uint32_t>();
  std::map<std::string, Record, std::less<>> records;
  for (std::uint32_t i = 0; i < count; ++i) {
    const auto len = rb.get<std::uint16_t>();
    std::string name(rb.take(len));
    const auto rank = rb.get<std::uint8_t>();
    Record rec;
    std::size_t elems = 1;
    for (int d = 0; d < rank; ++d) {
      rec.dims.push_back(rb.get<std::uint32_t>());
      elems *= rec.dims.back();
    }
    if (elems > (body.size() - rb.pos()) / 4) {
      throw WeightFormatError(Kind::kCorrupt,
                              "tensor '" + name + "' overruns the file");
    }
    rec.data.resize(elems);
    for (std::size_t k = 0; k < elems; ++k) {
      rec.data[k] = std::bit_cast<float>(rb.get<std::uint32_t>());
    }
    if (!records.emplace(name, std::move(rec)).second) {
      throw WeightFormatError(Kind::kCorrupt,
                              "duplicate tensor '" + name + "'");
    }
  }
  if (rb.pos() != body.size()) {
    throw WeightFormatError(Kind::kCorrupt, "trailing bytes after tensors");
  }

  auto tensors = g.all_tensors();
  std::map<std::string, const NamedTensor*, std::less<>> expected;
  for (const auto& t : tensors) expected.emplace(t.name, &t);
  for (const auto& [name, rec] : records) {
    if (!expected.count(name)) {
      throw WeightFormatError(Kind::kUnexpectedTensor,
                              "weight file has unknown tensor '" + name + "'");
    }
  }
  for (const auto& t : tensors) {
    auto it = records.find(t.name);
    if (it == records.end()) {
      throw WeightFormatError(Kind::kMissingTensor,
                              "weight file lacks tensor '" + t.name + "'");
    }
    if (it->second.dims != t.dims()) {
      throw WeightFormatError(
          Kind::kShapeMismatch,
          "tensor '" + t.name + "': file shape " +
              dims_string(it->second.dims) + ", graph shape " +
              dims_string(t.dims()));
    }
  }
  for (auto& t : tensors) {
    const auto& data = records.at(t.name).data;
    std::copy(data.begin(), data.end(), t.tensor->data().begin());
  }
}

void save_weights(const LayerGraph& g, const std::string& path) {
  write_file_atomic(path, serialize_weights(g));
}

void load_weights(LayerGraph& g, const std::string& path) {
  deserialize_weights(g, read_file(path));
}

}  // namespace fpenet
