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

#include "fpenet/tape.h"

#include <cstring>
#include <memory>

namespace fpenet {

template <typename T>
Tensor<T>* Tape<T>::GradSink::slot(Var v) {
  if (!tape_.requires_grad(v)) return nullptr;
  auto& g = grads_[v.id];
  if (!g) g.emplace(tape_.value(v).shape());
  return &*g;
}

template <typename T>
void Tape<T>::GradSink::accumulate(Var v, const Tensor<T>& g) {
  Tensor<T>* s = slot(v);
  if (s == nullptr) return;
  if (s->shape() != g.shape()) {
    throw DimensionError("Tape::accumulate", "element count",
                         static_cast<long>(s->size()),
                         static_cast<long>(g.size()));
  }
  for (std::size_t i = 0; i < g.size(); ++i) (*s)[i] += g[i];
}

template <typename T>
Var Tape<T>::push(Tensor<T> value, bool requires_grad) {
  values_.push_back(std::move(value));
  requires_grad_.push_back(requires_grad);
  nodes_.emplace_back();
  return Var{static_cast<int>(values_.size()) - 1};
}

template <typename T>
bool Tape<T>::any_requires_grad(const std::vector<Var>& vs) const {
  for (Var v : vs) {
    if (requires_grad(v)) return true;
  }
  return false;
}

template <typename T>
Var Tape<T>::constant(Tensor<T> value) {
  return push(std::move(value), false);
}

template <typename T>
Var Tape<T>::input(Tensor<T> value) {
  return push(std::move(value), true);
}

template <typename T>
Var Tape<T>::parameter(const Tensor<T>& p) {
  auto it = parameter_index_.find(&p);
  if (it != parameter_index_.end()) return it->second;
  Var v = push(p, true);
  parameter_index_.emplace(&p, v);
  parameters_.emplace_back(&p, v);
  return v;
}

template <typename T>
Var Tape<T>::record(const std::vector<Var>& inputs, Tensor<T> value,
                    BackwardFn fn) {
  const bool rg = any_requires_grad(inputs);
  Var out = push(std::move(value), rg);
  if (rg) nodes_[out.id] = Node{inputs, std::move(fn)};
  return out;
}

template <typename T>
Var Tape<T>::conv2d(Var x, Var weight, const ConvSpec& spec) {
  Tensor<T> y = ops::conv2d<T>(value(x), value(weight), nullptr, spec);
  return record({x, weight}, std::move(y),
                [this, x, weight, spec](const Tensor<T>& g, GradSink& sink) {
                  auto grads =
                      ops::conv2d_backward(value(x), value(weight), g, spec);
                  sink.accumulate(x, grads.input);
                  sink.accumulate(weight, grads.weight);
                });
}

template <typename T>
Var Tape<T>::conv2d(Var x, Var weight, Var bias, const ConvSpec& spec) {
  Tensor<T> y = ops::conv2d(value(x), value(weight), &value(bias), spec);
  return record(
      {x, weight, bias}, std::move(y),
      [this, x, weight, bias, spec](const Tensor<T>& g, GradSink& sink) {
        auto grads = ops::conv2d_backward(value(x), value(weight), g, spec);
        sink.accumulate(x, grads.input);
        sink.accumulate(weight, grads.weight);
        sink.accumulate(bias, *grads.bias);
      });
}

template <typename T>
Var Tape<T>::batch_norm(Var x, Var gamma, Var beta,
                        const BatchNormState<T>& state) {
  if (mode_ == BnMode::kInfer) {
    Tensor<T> y =
        ops::batch_norm_infer(value(x), value(gamma), value(beta),
                              state.running_mean, state.running_var, state.eps);
    const Tensor<T> rm = state.running_mean;
    const Tensor<T> rv = state.running_var;
    const T eps = state.eps;
    return record({x, gamma, beta}, std::move(y),
                  [this, x, gamma, beta, rm, rv, eps](const Tensor<T>& g,
                                                      GradSink& sink) {
                    auto grads = ops::batch_norm_infer_backward(
                        value(x), value(gamma), rm, rv, eps, g);
                    sink.accumulate(x, grads.input);
                    sink.accumulate(gamma, grads.gamma);
                    sink.accumulate(beta, grads.beta);
                  });
  }

  auto r = ops::batch_norm_train(value(x), value(gamma), value(beta),
                                 state.eps);
  BnObservation<T> obs{&state, r.mean, r.var};
  if (r.count > 1) {
    const T unbias = static_cast<T>(r.count) / static_cast<T>(r.count - 1);
    for (std::size_t i = 0; i < obs.var_unbiased.size(); ++i) {
      obs.var_unbiased[i] *= unbias;
    }
  }
  bn_observations_.push_back(std::move(obs));
  auto normalized = std::make_shared<Tensor<T>>(std::move(r.normalized));
  auto inv_std = std::make_shared<Tensor<T>>(std::move(r.inv_std));
  return record({x, gamma, beta}, std::move(r.output),
                [this, x, gamma, beta, normalized, inv_std](const Tensor<T>& g,
                                                            GradSink& sink) {
                  auto grads = ops::batch_norm_train_backward(
                      *normalized, *inv_std, value(gamma), g);
                  sink.accumulate(x, grads.input);
                  sink.accumulate(gamma, grads.gamma);
                  sink.accumulate(beta, grads.beta);
                });
}

template <typename T>
Var Tape<T>::relu(Var x) {
  return record({x}, ops::relu(value(x)),
                [this, x](const Tensor<T>& g, GradSink& sink) {
                  Tensor<T>* s = sink.slot(x);
                  if (s == nullptr) return;
                  const Tensor<T>& xv = value(x);
                  for (std::size_t i = 0; i < xv.size(); ++i) {
                    if (xv[i] > T(0)) (*s)[i] += g[i];
                  }
                });
}

template <typename T>
Var Tape<T>::add(Var a, Var b) {
  return record({a, b}, ops::add(value(a), value(b)),
                [a, b](const Tensor<T>& g, GradSink& sink) {
                  sink.accumulate(a, g);
                  sink.accumulate(b, g);
                });
}

template <typename T>
Var Tape<T>::mul_broadcast(Var a, Var b) {
  return record({a, b}, ops::mul_broadcast(value(a), value(b)),
                [this, a, b](const Tensor<T>& g, GradSink& sink) {
                  auto [ga, gb] =
                      ops::mul_broadcast_backward(value(a), value(b), g);
                  sink.accumulate(a, ga);
                  sink.accumulate(b, gb);
                });
}

template <typename T>
Var Tape<T>::concat_channels(const std::vector<Var>& parts) {
  std::vector<const Tensor<T>*> ptrs;
  ptrs.reserve(parts.size());
  for (Var v : parts) ptrs.push_back(&value(v));
  Tensor<T> y = ops::concat_channels(ptrs);
  return record(parts, std::move(y),
                [this, parts](const Tensor<T>& g, GradSink& sink) {
                  const std::size_t plane = g.shape().plane();
                  int c0 = 0;
                  for (Var v : parts) {
                    const int pc = value(v).c();
                    if (Tensor<T>* s = sink.slot(v)) {
                      for (int n = 0; n < g.n(); ++n) {
                        T* dst = s->plane(n, 0);
                        const T* src = g.plane(n, c0);
                        for (std::size_t i = 0; i < plane * pc; ++i) {
                          dst[i] += src[i];
                        }
                      }
                    }
                    c0 += pc;
                  }
                });
}

template <typename T>
std::vector<Var> Tape<T>::split_channels(Var x, int parts) {
  std::vector<Tensor<T>> pieces = ops::split_channels(value(x), parts);
  std::vector<Var> out;
  out.reserve(pieces.size());
  const int per = value(x).c() / parts;
  for (int k = 0; k < parts; ++k) {
    out.push_back(record(
        {x}, std::move(pieces[k]),
        [x, k, per](const Tensor<T>& g, GradSink& sink) {
          Tensor<T>* s = sink.slot(x);
          if (s == nullptr) return;
          const std::size_t len = g.shape().plane() * per;
          for (int n = 0; n < g.n(); ++n) {
            T* dst = s->plane(n, k * per);
            const T* src = g.plane(n, 0);
            for (std::size_t i = 0; i < len; ++i) dst[i] += src[i];
          }
        }));
  }
  return out;
}

template <typename T>
Var Tape<T>::global_avg_pool(Var x) {
  const int h = value(x).h(), w = value(x).w();
  return record({x}, ops::global_avg_pool(value(x)),
                [x, h, w](const Tensor<T>& g, GradSink& sink) {
                  sink.accumulate(x, ops::global_avg_pool_backward(g, h, w));
                });
}

template <typename T>
Var Tape<T>::channel_mean(Var x) {
  const int c = value(x).c();
  return record({x}, ops::channel_mean(value(x)),
                [x, c](const Tensor<T>& g, GradSink& sink) {
                  sink.accumulate(x, ops::channel_mean_backward(g, c));
                });
}

template <typename T>
Var Tape<T>::upsample_bilinear_x2(Var x) {
  return record({x}, ops::upsample_bilinear_x2(value(x)),
                [x](const Tensor<T>& g, GradSink& sink) {
                  sink.accumulate(x, ops::upsample_bilinear_x2_backward(g));
                });
}

template <typename T>
Var Tape<T>::sum(Var x) {
  const Tensor<T>& xv = value(x);
  T acc = T(0);
  for (std::size_t i = 0; i < xv.size(); ++i) acc += xv[i];
  return record({x}, Tensor<T>(Shape{}, acc),
                [x](const Tensor<T>& g, GradSink& sink) {
                  Tensor<T>* s = sink.slot(x);
                  if (s == nullptr) return;
                  for (std::size_t i = 0; i < s->size(); ++i) (*s)[i] += g[0];
                });
}

template <typename T>
Var Tape<T>::weighted_sum(Var x, const Tensor<T>& weights) {
  const Tensor<T>& xv = value(x);
  if (weights.shape() != xv.shape()) {
    throw DimensionError("weighted_sum", "element count",
                         static_cast<long>(xv.size()),
                         static_cast<long>(weights.size()));
  }
  T acc = T(0);
  for (std::size_t i = 0; i < xv.size(); ++i) acc += xv[i] * weights[i];
  return record({x}, Tensor<T>(Shape{}, acc),
                [x, weights](const Tensor<T>& g, GradSink& sink) {
                  Tensor<T>* s = sink.slot(x);
                  if (s == nullptr) return;
                  for (std::size_t i = 0; i < s->size(); ++i) {
                    (*s)[i] += g[0] * weights[i];
                  }
                });
}

template <typename T>
Gradients<T> Tape<T>::backward(Var loss) const {
  if (value(loss).size() != 1) {
    throw DimensionError("Tape::backward", "loss element count", 1,
                         static_cast<long>(value(loss).size()));
  }
  std::vector<std::optional<Tensor<T>>> grads(values_.size());
  grads[loss.id].emplace(value(loss).shape(), T(1));
  GradSink sink(*this, grads);
  for (int id = loss.id; id >= 0; --id) {
    if (!grads[id] || !nodes_[id]) continue;
    // Rules only write to slots of earlier values, so g stays stable.
    const Tensor<T>& g = *grads[id];
    nodes_[id]->backward(g, sink);
  }
  return Gradients<T>(std::move(grads));
}

template class Tape<float>;
template class Tape<double>;

}  // namespace fpenet
