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

// The complete encoder-decoder network as an ordered layer graph.
//
// Layout for input H x W (C classes, channels c1/c2/c3):
//
//   stem      3x3 conv s2 -> c1, BN, ReLU                     H/2
//   stage1    FPE(k=1, b=1) c1 -> c1                          H/2
//   stage2    FPE(k, s2) c1 -> c2, then p FPE(k) c2 -> c2     H/4
//   stage3    FPE(k, s2) c2 -> c3, then q FPE(k) c3 -> c3     H/8
//   decoder2  MEU(high=stage3, low=stage2) -> c3              H/4
//   decoder1  MEU(high=decoder2, low=stage1) -> c2            H/2
//   final     1x1 conv (bias) -> C                            H/2
//
// With long skips on, the input of stage 2 (3) is the sum of the first and
// last block outputs of stage 1 (2); the stem counts as stage 1's first
// block. The bilinear decoder instead classifies at H/8 and upsamples x2
// twice.

#ifndef FPENET_CORE_GRAPH_H_
#define FPENET_CORE_GRAPH_H_

#include <cstdint>
#include <string>
#include <variant>
#include <vector>

#include "fpenet/config.h"
#include "fpenet/fpe.h"
#include "fpenet/label_map.h"
#include "fpenet/meu.h"
#include "fpenet/tape.h"
#include "fpenet/tensor.h"

namespace fpenet {

enum class NodeKind { kInput, kStem, kFpe, kAdd, kMeu, kClassifier, kUpsample };

const char* node_kind_name(NodeKind kind);

struct FpeLayer {
  FpeConfig config;
  FpeWeights<float> weights;
};

struct MeuLayer {
  MeuConfig config;
  MeuWeights<float> weights;
};

struct Node {
  std::string name;
  NodeKind kind = NodeKind::kInput;
  std::vector<int> inputs;  // indices of earlier nodes
  Shape output_shape;       // for batch size 1
  std::variant<std::monostate, ConvBn<float>, FpeLayer, MeuLayer,
               ConvBias<float>>
      layer;
};

// A named tensor owned by the graph.
struct NamedTensor {
  std::string name;
  Tensor<float>* tensor = nullptr;
  int rank = 4;  // 1 for per-channel vectors
  bool learnable = true;

  std::vector<std::uint32_t> dims() const;
};

struct ConstNamedTensor {
  std::string name;
  const Tensor<float>* tensor = nullptr;
  int rank = 4;
  bool learnable = true;

  std::vector<std::uint32_t> dims() const;
};

class LayerGraph {
 public:
  const ModelConfig& config() const { return config_; }
  const std::vector<Node>& nodes() const { return nodes_; }
  int output_node() const { return static_cast<int>(nodes_.size()) - 1; }
  int find(const std::string& name) const;

  // Learnable tensors, in registry order.
  std::vector<NamedTensor> parameters();
  std::vector<ConstNamedTensor> parameters() const;
  // Learnable tensors followed by buffers (running statistics and the
  // input channel mean). This is the weight-file order.
  std::vector<NamedTensor> all_tensors();
  std::vector<ConstNamedTensor> all_tensors() const;
  std::size_t parameter_count() const;

  // Per-channel mean subtracted from raw [0,1] images before the forward
  // pass; (1, 3, 1, 1).
  const Tensor<float>& input_mean() const { return input_mean_; }
  Tensor<float>& input_mean() { return input_mean_; }

  // Folds train-mode batch statistics into the running statistics of the
  // batch norms they came from.
  void apply_bn_updates(const std::vector<BnObservation<float>>& obs);

  Node& node(int i) { return nodes_.at(i); }

 private:
  friend LayerGraph build(const ModelConfig& cfg, std::uint64_t seed);
  void visit_all(const TensorVisitor<float>& f);

  ModelConfig config_;
  std::vector<Node> nodes_;
  Tensor<float> input_mean_{Shape{1, 3, 1, 1}};
};

// Deterministic for a given (cfg, seed).
LayerGraph build(const ModelConfig& cfg, std::uint64_t seed);

// Records the network on `tape`. In train mode BN statistics are observed
// on the tape; call g.apply_bn_updates(tape.bn_observations()) afterwards.
Var forward(Tape<float>& tape, const LayerGraph& g, Var x);

// Logits (n, C, H/2, W/2). Infer mode is a pure function of parameters and
// input; train mode also updates the running statistics.
Tensor<float> forward(LayerGraph& g, const Tensor<float>& x, BnMode mode);
Tensor<float> forward(const LayerGraph& g, const Tensor<float>& x);

// Channel argmax; ties go to the lowest class index.
LabelMap argmax_channels(const Tensor<float>& logits);

// Infer-mode forward, x2 bilinear upsampling of the logits, argmax.
LabelMap predict(const LayerGraph& g, const Tensor<float>& x);

}  // namespace fpenet

#endif  // FPENET_CORE_GRAPH_H_
