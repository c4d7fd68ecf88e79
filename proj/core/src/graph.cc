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

#include "fpenet/graph.h"

#include <map>
#include <optional>

#include "fpenet/eager.h"

namespace fpenet {

const char* node_kind_name(NodeKind kind) {
  switch (kind) {
    case NodeKind::kInput: return "input";
    case NodeKind::kStem: return "conv3x3";
    case NodeKind::kFpe: return "fpe";
    case NodeKind::kAdd: return "add";
    case NodeKind::kMeu: return "meu";
    case NodeKind::kClassifier: return "conv1x1";
    case NodeKind::kUpsample: return "upsample";
  }
  return "?";
}

namespace {

template <typename Named>
std::vector<std::uint32_t> dims_of(const Named& t) {
  if (t.rank == 1) return {static_cast<std::uint32_t>(t.tensor->size())};
  const Shape& s = t.tensor->shape();
  return {static_cast<std::uint32_t>(s.n), static_cast<std::uint32_t>(s.c),
          static_cast<std::uint32_t>(s.h), static_cast<std::uint32_t>(s.w)};
}

}  // namespace

std::vector<std::uint32_t> NamedTensor::dims() const { return dims_of(*this); }
std::vector<std::uint32_t> ConstNamedTensor::dims() const {
  return dims_of(*this);
}

int LayerGraph::find(const std::string& name) const {
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    if (nodes_[i].name == name) return static_cast<int>(i);
  }
  return -1;
}

void LayerGraph::visit_all(const TensorVisitor<float>& f) {
  for (Node& n : nodes_) {
    std::visit(
        [&](auto& layer) {
          using L = std::decay_t<decltype(layer)>;
          if constexpr (std::is_same_v<L, FpeLayer>) {
            visit(layer.weights, n.name, f);
          } else if constexpr (std::is_same_v<L, MeuLayer>) {
            visit(layer.weights, layer.config, n.name, f);
          } else if constexpr (!std::is_same_v<L, std::monostate>) {
            visit(layer, n.name, f);
          }
        },
        n.layer);
  }
  f("input.mean", input_mean_, 1, false);
}

std::vector<NamedTensor> LayerGraph::parameters() {
  std::vector<NamedTensor> out;
  visit_all([&](const std::string& name, Tensor<float>& t, int rank,
                bool learnable) {
    if (learnable) out.push_back({name, &t, rank, true});
  });
  return out;
}

std::vector<ConstNamedTensor> LayerGraph::parameters() const {
  std::vector<ConstNamedTensor> out;
  for (const NamedTensor& t : const_cast<LayerGraph*>(this)->parameters()) {
    out.push_back({t.name, t.tensor, t.rank, t.learnable});
  }
  return out;
}

std::vector<NamedTensor> LayerGraph::all_tensors() {
  std::vector<NamedTensor> learnable, buffers;
  visit_all([&](const std::string& name, Tensor<float>& t, int rank,
                bool is_learnable) {
    (is_learnable ? learnable : buffers).push_back({name, &t, rank,
                                                    is_learnable});
  });
  learnable.insert(learnable.end(), buffers.begin(), buffers.end());
  return learnable;
}

std::vector<ConstNamedTensor> LayerGraph::all_tensors() const {
  std::vector<ConstNamedTensor> out;
  for (const NamedTensor& t : const_cast<LayerGraph*>(this)->all_tensors()) {
    out.push_back({t.name, t.tensor, t.rank, t.learnable});
  }
  return out;
}

std::size_t LayerGraph::parameter_count() const {
  std::size_t total = 0;
  for (const auto& t : parameters()) total += t.tensor->size();
  return total;
}

void LayerGraph::apply_bn_updates(
    const std::vector<BnObservation<float>>& obs) {
  std::map<const BatchNormState<float>*, BatchNormState<float>*> states;
  auto add = [&](ConvBn<float>& l) { states[&l.bn] = &l.bn; };
  for (Node& n : nodes_) {
    if (auto* c = std::get_if<ConvBn<float>>(&n.layer)) add(*c);
    if (auto* f = std::get_if<FpeLayer>(&n.layer)) {
      add(f->weights.expand);
      for (auto& b : f->weights.branches) add(b);
      add(f->weights.project);
    }
    if (auto* m = std::get_if<MeuLayer>(&n.layer)) {
      add(m->weights.high_proj);
      add(m->weights.low_proj);
    }
  }
  for (const auto& o : obs) {
    auto it = states.find(o.state);
    if (it == states.end()) {
      throw ConfigError("apply_bn_updates: observation from a foreign graph");
    }
    it->second->update_running(o.mean, o.var_unbiased);
  }
}

LayerGraph build(const ModelConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  Rng rng(seed);
  LayerGraph g;
  g.config_ = cfg;
  auto& nodes = g.nodes_;
  auto push = [&](Node n) {
    nodes.push_back(std::move(n));
    return static_cast<int>(nodes.size()) - 1;
  };
  const auto [c1, c2, c3] = cfg.stage_channels;

  Node input{"input", NodeKind::kInput, {}, Shape{1, 3, cfg.input_h,
                                                  cfg.input_w}, {}};
  const int in_id = push(std::move(input));

  ConvSpec stem_spec;
  stem_spec.in_channels = 3;
  stem_spec.out_channels = c1;
  stem_spec.kernel_h = stem_spec.kernel_w = 3;
  stem_spec.stride = 2;
  stem_spec.padding = 1;
  const int stem = push(Node{"stem", NodeKind::kStem, {in_id},
                             stem_spec.output_shape(nodes[in_id].output_shape),
                             ConvBn<float>(stem_spec, rng)});

  auto fpe_node = [&](const std::string& name, int from, FpeConfig fc) {
    const Shape in_shape = nodes[from].output_shape;
    const Shape out_shape{
        1, fc.out_channels,
        ConvSpec::depthwise3x3(1, 1, fc.stride).output_extent(in_shape.h, 3),
        ConvSpec::depthwise3x3(1, 1, fc.stride).output_extent(in_shape.w, 3)};
    FpeWeights<float> w(fc, rng);
    return push(Node{name, NodeKind::kFpe, {from}, out_shape,
                     FpeLayer{std::move(fc), std::move(w)}});
  };
  auto add_node = [&](const std::string& name, int a, int b) {
    return push(Node{name, NodeKind::kAdd, {a, b}, nodes[a].output_shape, {}});
  };

  FpeConfig s1;
  s1.in_channels = s1.out_channels = c1;
  s1.expansion = 1;
  s1.branches = 1;
  s1.dilations = {1};
  s1.inter_branch_add = cfg.inter_branch_add;
  const int stage1_last = fpe_node("stage1.block0", stem, s1);
  const int stage1_out = stage1_last;
  int next_in = cfg.long_skip ? add_node("stage1.skip", stem, stage1_last)
                              : stage1_last;

  auto stage = [&](const std::string& prefix, int from, int in_c, int out_c,
                   int extra_blocks) {
    FpeConfig fc;
    fc.in_channels = in_c;
    fc.out_channels = out_c;
    fc.expansion = cfg.expansion;
    fc.branches = cfg.branches;
    fc.dilations = cfg.dilations;
    fc.inter_branch_add = cfg.inter_branch_add;
    fc.stride = 2;
    const int first = fpe_node(prefix + ".block0", from, fc);
    fc.in_channels = out_c;
    fc.stride = 1;
    int last = first;
    for (int i = 1; i <= extra_blocks; ++i) {
      last = fpe_node(prefix + ".block" + std::to_string(i), last, fc);
    }
    return std::pair{first, last};
  };

  const auto [stage2_first, stage2_last] =
      stage("stage2", next_in, c1, c2, cfg.p);
  next_in = cfg.long_skip ? add_node("stage2.skip", stage2_first, stage2_last)
                          : stage2_last;
  const auto [stage3_first, stage3_last] =
      stage("stage3", next_in, c2, c3, cfg.q);
  (void)stage3_first;

  if (cfg.decoder == DecoderKind::kMeu) {
    auto meu_node = [&](const std::string& name, int high, int low, int out_c) {
      MeuConfig mc;
      mc.high_channels = nodes[high].output_shape.c;
      mc.low_channels = nodes[low].output_shape.c;
      mc.out_channels = out_c;
      mc.use_channel_attention = cfg.meu_channel_attention;
      mc.use_spatial_attention = cfg.meu_spatial_attention;
      Shape out = nodes[low].output_shape;
      out.c = out_c;
      MeuWeights<float> w(mc, rng);
      return push(Node{name, NodeKind::kMeu, {high, low}, out,
                       MeuLayer{mc, std::move(w)}});
    };
    const int d2 = meu_node("decoder2", stage3_last, stage2_last, c3);
    const int d1 = meu_node("decoder1", d2, stage1_out, c2);
    const ConvSpec cls = ConvSpec::pointwise(c2, cfg.num_classes, true);
    push(Node{"classifier", NodeKind::kClassifier, {d1},
              cls.output_shape(nodes[d1].output_shape),
              ConvBias<float>(cls, rng)});
  } else {
    const ConvSpec cls = ConvSpec::pointwise(c3, cfg.num_classes, true);
    const int logits = push(Node{"classifier", NodeKind::kClassifier,
                                 {stage3_last},
                                 cls.output_shape(nodes[stage3_last].output_shape),
                                 ConvBias<float>(cls, rng)});
    auto up = [&](const std::string& name, int from) {
      Shape s = nodes[from].output_shape;
      s.h *= 2;
      s.w *= 2;
      return push(Node{name, NodeKind::kUpsample, {from}, s, {}});
    };
    up("decoder1", up("decoder2", logits));
  }
  return g;
}

namespace {

template <class Ctx>
typename Ctx::Value run_graph(Ctx& ctx, const LayerGraph& g,
                              const typename Ctx::Value& x) {
  using Value = typename Ctx::Value;
  const ModelConfig& cfg = g.config();
  const Shape& xs = ctx.value(x).shape();
  if (xs.c != 3) throw DimensionError("forward input", "channels", 3, xs.c);
  if (xs.h != cfg.input_h) {
    throw DimensionError("forward input", "height", cfg.input_h, xs.h);
  }
  if (xs.w != cfg.input_w) {
    throw DimensionError("forward input", "width", cfg.input_w, xs.w);
  }

  const auto& nodes = g.nodes();
  std::vector<std::optional<Value>> vals(nodes.size());
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    const Node& n = nodes[i];
    auto in = [&](int k) -> const Value& { return *vals[n.inputs[k]]; };
    switch (n.kind) {
      case NodeKind::kInput:
        vals[i] = x;
        break;
      case NodeKind::kStem:
        vals[i] = conv_bn(ctx, in(0), std::get<ConvBn<float>>(n.layer), true);
        break;
      case NodeKind::kFpe: {
        const auto& l = std::get<FpeLayer>(n.layer);
        vals[i] = fpe_forward(ctx, in(0), l.weights, l.config);
        break;
      }
      case NodeKind::kAdd:
        vals[i] = ctx.add(in(0), in(1));
        break;
      case NodeKind::kMeu: {
        const auto& l = std::get<MeuLayer>(n.layer);
        vals[i] = meu_forward(ctx, in(0), in(1), l.weights, l.config);
        break;
      }
      case NodeKind::kClassifier:
        vals[i] = conv_bias(ctx, in(0), std::get<ConvBias<float>>(n.layer));
        break;
      case NodeKind::kUpsample:
        vals[i] = ctx.upsample_bilinear_x2(in(0));
        break;
    }
  }
  return *vals.back();
}

}  // namespace

Var forward(Tape<float>& tape, const LayerGraph& g, Var x) {
  return run_graph(tape, g, x);
}

Tensor<float> forward(LayerGraph& g, const Tensor<float>& x, BnMode mode) {
  Eager<float> ctx(mode);
  Tensor<float> out = run_graph(ctx, g, x);
  if (mode == BnMode::kTrain) g.apply_bn_updates(ctx.bn_observations());
  return out;
}

Tensor<float> forward(const LayerGraph& g, const Tensor<float>& x) {
  Eager<float> ctx(BnMode::kInfer);
  return run_graph(ctx, g, x);
}

LabelMap argmax_channels(const Tensor<float>& logits) {
  LabelMap out(logits.n(), logits.h(), logits.w());
  for (int b = 0; b < logits.n(); ++b) {
    for (int y = 0; y < logits.h(); ++y) {
      for (int x = 0; x < logits.w(); ++x) {
        int best = 0;
        float best_v = logits.at(b, 0, y, x);
        for (int c = 1; c < logits.c(); ++c) {
          const float v = logits.at(b, c, y, x);
          if (v > best_v) {
            best_v = v;
            best = c;
          }
        }
        out.at(b, y, x) = best;
      }
    }
  }
  return out;
}

LabelMap predict(const LayerGraph& g, const Tensor<float>& x) {
  return argmax_channels(ops::upsample_bilinear_x2(forward(g, x)));
}

}  // namespace fpenet
