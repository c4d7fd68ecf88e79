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

#include "fpenet/gradcheck.h"

#include <algorithm>
#include <cmath>
#include <map>
#include <memory>

#include "fpenet/errors.h"
#include "fpenet/fpe.h"
#include "fpenet/loss.h"
#include "fpenet/meu.h"
#include "fpenet/random.h"

namespace fpenet {

namespace {

// Elements whose one-sided differences disagree sit on a kink of the
// forward function (ReLU); they are skipped, up to this fraction.
constexpr double kMaxKinkFraction = 0.01;
constexpr double kKinkThreshold = 1e-3;

double weighted_output(Tape<double>& tape, Var out,
                       const Tensor<double>& weights) {
  const Tensor<double>& v = tape.value(out);
  double acc = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) acc += v[i] * weights[i];
  return acc;
}

}  // namespace

GradcheckResult check_gradients(const std::string& op,
                                const std::vector<GradcheckInput>& inputs,
                                const GradcheckFn& f,
                                const GradcheckOptions& options,
                                BnMode mode) {
  GradcheckResult r;
  r.op = op;
  if (!inputs.empty()) r.shape = inputs.front().tensor->shape();

  Tape<double> tape(mode);
  const Var out = f(tape);
  Rng rng(options.seed ^ 0x9e3779b97f4a7c15ull);
  Tensor<double> weights(tape.value(out).shape());
  for (std::size_t i = 0; i < weights.size(); ++i) {
    weights[i] = uniform(rng, -1.0, 1.0);
  }
  const Var loss = tape.weighted_sum(out, weights);
  const Gradients<double> grads = tape.backward(loss);
  std::map<const Tensor<double>*, Var> leaves;
  for (const auto& [t, v] : tape.parameters()) leaves.emplace(t, v);

  auto eval = [&]() {
    Tape<double> t(mode);
    return weighted_output(t, f(t), weights);
  };
  const double base = eval();

  const double h = options.step;
  std::size_t elements = 0, kinks = 0;
  for (const GradcheckInput& in : inputs) {
    Tensor<double>& x = *in.tensor;
    Tensor<double> analytic(x.shape());
    auto it = leaves.find(in.tensor);
    if (it != leaves.end()) {
      if (const Tensor<double>* g = grads.find(it->second)) analytic = *g;
    }
    double scale = 0.0;
    for (double a : analytic.data()) scale = std::max(scale, std::abs(a));
    const double floor = std::max(kRelativeFloor * scale, 1e-12);

    for (std::size_t i = 0; i < x.size(); ++i) {
      const double orig = x[i];
      x[i] = orig + h;
      const double lp = eval();
      x[i] = orig - h;
      const double lm = eval();
      x[i] = orig;
      ++elements;
      const double fwd = (lp - base) / h, bwd = (base - lm) / h;
      if (std::abs(fwd - bwd) >
          kKinkThreshold * std::max({std::abs(fwd), std::abs(bwd), floor})) {
        ++kinks;
        continue;
      }
      const double numeric = (lp - lm) / (2 * h);
      const double a = analytic[i];
      const double err = std::abs(a - numeric) /
                         std::max({std::abs(a), std::abs(numeric), floor});
      if (err >= r.max_error) {
        r.max_error = err;
        r.worst = in.name + "[" + std::to_string(i) + "]";
      }
    }
  }
  r.elements = elements;
  r.kinks = kinks;
  r.passed = r.max_error < options.tolerance &&
             kinks <= kMaxKinkFraction * static_cast<double>(elements);
  return r;
}

namespace {

struct Case {
  std::vector<std::unique_ptr<Tensor<double>>> owned;
  std::vector<GradcheckInput> inputs;
  GradcheckFn fn;
  BnMode mode = BnMode::kTrain;

  Tensor<double>* add(const std::string& name, Tensor<double> t) {
    owned.push_back(std::make_unique<Tensor<double>>(std::move(t)));
    inputs.push_back({name, owned.back().get()});
    return owned.back().get();
  }
};

Tensor<double> random_tensor(Shape s, Rng& rng, double lo = -1.0,
                             double hi = 1.0) {
  Tensor<double> t(s);
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = uniform(rng, lo, hi);
  return t;
}

// Registers every learnable tensor of a composite as a checked input and
// perturbs BN affine terms away from their identity initialization.
void add_learnables(Case& c, const std::string& prefix,
                    const std::function<void(const TensorVisitor<double>&)>& v,
                    Rng& rng) {
  v([&](const std::string& name, Tensor<double>& t, int, bool learnable) {
    if (!learnable) return;
    if (name.ends_with(".gamma")) {
      for (auto& x : t.data()) x = uniform(rng, 0.5, 1.5);
    } else if (name.ends_with(".beta") || name.ends_with(".bias")) {
      for (auto& x : t.data()) x = uniform(rng, -0.3, 0.3);
    }
    c.inputs.push_back({prefix + name, &t});
  });
}

Case make_case(const std::string& op, Rng& rng) {
  Case c;
  auto conv_case = [&](Shape xs, ConvSpec spec) {
    Tensor<double>* x = c.add("x", random_tensor(xs, rng));
    Tensor<double>* w = c.add("weight", random_tensor(spec.weight_shape(), rng));
    Tensor<double>* b = nullptr;
    if (spec.has_bias) {
      b = c.add("bias", random_tensor(Shape{1, spec.out_channels, 1, 1}, rng));
    }
    c.fn = [=](Tape<double>& t) {
      if (b) return t.conv2d(t.parameter(*x), t.parameter(*w), t.parameter(*b),
                             spec);
      return t.conv2d(t.parameter(*x), t.parameter(*w), spec);
    };
  };

  if (op == "conv2d") {
    ConvSpec s;
    s.in_channels = 3;
    s.out_channels = 4;
    s.kernel_h = s.kernel_w = 3;
    s.padding = 1;
    s.has_bias = true;
    conv_case(Shape{2, 3, 6, 7}, s);
  } else if (op == "conv2d_stride2") {
    ConvSpec s;
    s.in_channels = 3;
    s.out_channels = 4;
    s.kernel_h = s.kernel_w = 3;
    s.stride = 2;
    s.padding = 1;
    conv_case(Shape{2, 3, 7, 8}, s);
  } else if (op == "conv2d_dilated") {
    ConvSpec s;
    s.in_channels = 2;
    s.out_channels = 3;
    s.kernel_h = s.kernel_w = 3;
    s.dilation = 2;
    s.padding = 2;
    conv_case(Shape{1, 2, 9, 9}, s);
  } else if (op == "depthwise_conv") {
    conv_case(Shape{2, 4, 8, 8}, ConvSpec::depthwise3x3(4, 4, 1));
  } else if (op == "pointwise_conv") {
    conv_case(Shape{2, 5, 4, 4}, ConvSpec::pointwise(5, 3, true));
  } else if (op == "batch_norm_train" || op == "batch_norm_infer") {
    auto state = std::make_shared<BatchNormState<double>>(4);
    for (int i = 0; i < 4; ++i) {
      state->running_mean[i] = uniform(rng, -0.5, 0.5);
      state->running_var[i] = uniform(rng, 0.5, 2.0);
    }
    Tensor<double>* x = c.add("x", random_tensor(Shape{3, 4, 3, 3}, rng));
    Tensor<double>* g =
        c.add("gamma", random_tensor(Shape{1, 4, 1, 1}, rng, 0.5, 1.5));
    Tensor<double>* b = c.add("beta", random_tensor(Shape{1, 4, 1, 1}, rng));
    c.mode = op == "batch_norm_train" ? BnMode::kTrain : BnMode::kInfer;
    c.fn = [=](Tape<double>& t) {
      return t.batch_norm(t.parameter(*x), t.parameter(*g), t.parameter(*b),
                          *state);
    };
  } else if (op == "relu") {
    Tensor<double> xs = random_tensor(Shape{2, 3, 4, 4}, rng);
    for (auto& v : xs.data()) {
      while (std::abs(v) < 1e-3) v = uniform(rng, -1.0, 1.0);
    }
    Tensor<double>* x = c.add("x", std::move(xs));
    c.fn = [=](Tape<double>& t) { return t.relu(t.parameter(*x)); };
  } else if (op == "add") {
    Tensor<double>* a = c.add("a", random_tensor(Shape{2, 3, 4, 4}, rng));
    Tensor<double>* b = c.add("b", random_tensor(Shape{2, 3, 4, 4}, rng));
    c.fn = [=](Tape<double>& t) {
      return t.add(t.parameter(*a), t.parameter(*b));
    };
  } else if (op == "mul_channel" || op == "mul_spatial") {
    Tensor<double>* a = c.add("a", random_tensor(Shape{2, 3, 4, 4}, rng));
    const Shape bs = op == "mul_channel" ? Shape{2, 3, 1, 1} : Shape{2, 1, 4, 4};
    Tensor<double>* b = c.add("b", random_tensor(bs, rng));
    c.fn = [=](Tape<double>& t) {
      return t.mul_broadcast(t.parameter(*a), t.parameter(*b));
    };
  } else if (op == "concat") {
    Tensor<double>* a = c.add("a", random_tensor(Shape{2, 2, 3, 3}, rng));
    Tensor<double>* b = c.add("b", random_tensor(Shape{2, 3, 3, 3}, rng));
    c.fn = [=](Tape<double>& t) {
      return t.concat_channels({t.parameter(*a), t.parameter(*b)});
    };
  } else if (op == "split") {
    Tensor<double>* x = c.add("x", random_tensor(Shape{2, 6, 3, 3}, rng));
    c.fn = [=](Tape<double>& t) {
      auto parts = t.split_channels(t.parameter(*x), 3);
      return t.concat_channels({parts[2], parts[0]});
    };
  } else if (op == "global_avg_pool") {
    Tensor<double>* x = c.add("x", random_tensor(Shape{2, 3, 5, 4}, rng));
    c.fn = [=](Tape<double>& t) { return t.global_avg_pool(t.parameter(*x)); };
  } else if (op == "channel_mean") {
    Tensor<double>* x = c.add("x", random_tensor(Shape{2, 4, 3, 5}, rng));
    c.fn = [=](Tape<double>& t) { return t.channel_mean(t.parameter(*x)); };
  } else if (op == "upsample_bilinear_x2") {
    Tensor<double>* x = c.add("x", random_tensor(Shape{2, 3, 4, 5}, rng));
    c.fn = [=](Tape<double>& t) {
      return t.upsample_bilinear_x2(t.parameter(*x));
    };
  } else if (op == "cross_entropy") {
    Tensor<double>* x =
        c.add("logits", random_tensor(Shape{2, 4, 3, 3}, rng, -2.0, 2.0));
    LabelMap labels(2, 3, 3);
    for (auto& l : labels.labels) l = uniform_int(rng, 0, 3);
    labels.at(0, 1, 1) = kDefaultIgnoreIndex;
    labels.at(1, 2, 0) = kDefaultIgnoreIndex;
    c.fn = [=](Tape<double>& t) {
      return cross_entropy(t, t.parameter(*x), labels, kDefaultIgnoreIndex);
    };
  } else if (op == "fpe" || op == "fpe_stride2") {
    FpeConfig cfg;
    cfg.in_channels = 4;
    cfg.out_channels = op == "fpe" ? 4 : 8;
    cfg.expansion = 2;
    cfg.stride = op == "fpe" ? 1 : 2;
    auto w = std::make_shared<FpeWeights<double>>(cfg, rng);
    Tensor<double>* x = c.add(
        "x", random_tensor(op == "fpe" ? Shape{2, 4, 9, 9} : Shape{2, 4, 10, 10},
                           rng));
    add_learnables(c, "", [&](const TensorVisitor<double>& v) {
      visit(*w, op, v);
    }, rng);
    c.fn = [=](Tape<double>& t) {
      return fpe_forward(t, t.parameter(*x), *w, cfg);
    };
  } else if (op == "meu") {
    MeuConfig cfg;
    cfg.high_channels = 6;
    cfg.low_channels = 4;
    cfg.out_channels = 5;
    auto w = std::make_shared<MeuWeights<double>>(cfg, rng);
    Tensor<double>* hi = c.add("high", random_tensor(Shape{2, 6, 4, 4}, rng));
    Tensor<double>* lo = c.add("low", random_tensor(Shape{2, 4, 8, 8}, rng));
    add_learnables(c, "", [&](const TensorVisitor<double>& v) {
      visit(*w, cfg, "meu", v);
    }, rng);
    c.fn = [=](Tape<double>& t) {
      return meu_forward(t, t.parameter(*hi), t.parameter(*lo), *w, cfg);
    };
  } else {
    throw ConfigError("gradcheck: unknown op '" + op + "'");
  }
  return c;
}

}  // namespace

const std::vector<std::string>& gradcheck_op_names() {
  static const std::vector<std::string> kNames{
      "conv2d",           "conv2d_stride2",  "conv2d_dilated",
      "depthwise_conv",   "pointwise_conv",  "batch_norm_train",
      "batch_norm_infer", "relu",            "add",
      "mul_channel",      "mul_spatial",     "concat",
      "split",            "global_avg_pool", "channel_mean",
      "upsample_bilinear_x2", "cross_entropy", "fpe",
      "fpe_stride2",      "meu",
  };
  return kNames;
}

GradcheckResult run_gradcheck(const std::string& op,
                              const GradcheckOptions& options) {
  Rng rng(options.seed);
  Case c = make_case(op, rng);
  return check_gradients(op, c.inputs, c.fn, options, c.mode);
}

}  // namespace fpenet
