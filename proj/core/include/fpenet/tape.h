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

// Reverse-mode differentiation over the primitives in ops.h.
//
// A Tape records every primitive applied to its Vars. backward() replays the
// records in reverse order and accumulates into each reachable input. Values
// reachable from no parameter or input leaf are never differentiated.
//
// A Tape belongs to one thread of execution.

#ifndef FPENET_CORE_TAPE_H_
#define FPENET_CORE_TAPE_H_

#include <deque>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "fpenet/ops.h"
#include "fpenet/tensor.h"

namespace fpenet {

// Handle to a value recorded on a Tape.
struct Var {
  int id = -1;
  bool valid() const { return id >= 0; }
};

// Batch statistics seen by a train-mode batch norm; the owner of `state`
// folds them into its running statistics once the step is accepted.
template <typename T>
struct BnObservation {
  const BatchNormState<T>* state = nullptr;
  Tensor<T> mean;
  Tensor<T> var_unbiased;
};

template <typename T>
class Gradients {
 public:
  Gradients() = default;
  explicit Gradients(std::vector<std::optional<Tensor<T>>> grads)
      : grads_(std::move(grads)) {}

  // nullptr if `v` received no gradient.
  const Tensor<T>* find(Var v) const {
    if (v.id < 0 || v.id >= static_cast<int>(grads_.size())) return nullptr;
    const auto& g = grads_[v.id];
    return g ? &*g : nullptr;
  }

 private:
  std::vector<std::optional<Tensor<T>>> grads_;
};

template <typename T>
class Tape {
 public:
  using Scalar = T;
  using Value = Var;

  // Gives backward rules access to the gradient slots of their inputs.
  class GradSink {
   public:
    // nullptr when `v` does not need a gradient. Allocated zero on demand.
    Tensor<T>* slot(Var v);
    void accumulate(Var v, const Tensor<T>& g);

   private:
    friend class Tape;
    GradSink(const Tape& tape, std::vector<std::optional<Tensor<T>>>& grads)
        : tape_(tape), grads_(grads) {}
    const Tape& tape_;
    std::vector<std::optional<Tensor<T>>>& grads_;
  };

  using BackwardFn = std::function<void(const Tensor<T>& grad_out, GradSink&)>;

  explicit Tape(BnMode mode = BnMode::kTrain) : mode_(mode) {}
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  BnMode mode() const { return mode_; }

  Var constant(Tensor<T> value);
  // Leaf that receives a gradient.
  Var input(Tensor<T> value);
  // Leaf bound to a parameter tensor; repeated calls with the same tensor
  // return the same Var.
  Var parameter(const Tensor<T>& p);

  const Tensor<T>& value(Var v) const { return values_.at(v.id); }
  bool requires_grad(Var v) const { return requires_grad_.at(v.id); }
  int size() const { return static_cast<int>(values_.size()); }

  // Generic record: output `value` computed from `inputs`; `fn` receives the
  // output gradient. Used for ops defined outside this file (e.g. losses).
  Var record(const std::vector<Var>& inputs, Tensor<T> value, BackwardFn fn);

  Var conv2d(Var x, Var weight, const ConvSpec& spec);
  Var conv2d(Var x, Var weight, Var bias, const ConvSpec& spec);
  Var batch_norm(Var x, Var gamma, Var beta, const BatchNormState<T>& state);
  Var relu(Var x);
  Var add(Var a, Var b);
  Var mul_broadcast(Var a, Var b);
  Var concat_channels(const std::vector<Var>& parts);
  std::vector<Var> split_channels(Var x, int parts);
  Var global_avg_pool(Var x);
  Var channel_mean(Var x);
  Var upsample_bilinear_x2(Var x);
  Var sum(Var x);
  // sum(x * weights) for a fixed weight tensor of x's shape.
  Var weighted_sum(Var x, const Tensor<T>& weights);

  // Reverse sweep seeded with d(loss)/d(loss) = 1. `loss` must hold a single
  // element.
  Gradients<T> backward(Var loss) const;

  // Parameters in first-use order, with their Vars.
  const std::vector<std::pair<const Tensor<T>*, Var>>& parameters() const {
    return parameters_;
  }
  const std::vector<BnObservation<T>>& bn_observations() const {
    return bn_observations_;
  }

 private:
  struct Node {
    std::vector<Var> inputs;
    BackwardFn backward;
  };

  Var push(Tensor<T> value, bool requires_grad);
  bool any_requires_grad(const std::vector<Var>& vs) const;

  BnMode mode_;
  std::deque<Tensor<T>> values_;  // references must survive push_back
  std::vector<bool> requires_grad_;
  // Producing node per value; nullopt for leaves.
  std::vector<std::optional<Node>> nodes_;
  std::vector<std::pair<const Tensor<T>*, Var>> parameters_;
  std::map<const Tensor<T>*, Var> parameter_index_;
  std::vector<BnObservation<T>> bn_observations_;
};

}  // namespace fpenet

#endif  // FPENET_CORE_TAPE_H_
