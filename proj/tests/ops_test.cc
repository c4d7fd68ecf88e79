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

#include "fpenet/ops.h"

#include <cmath>
#include <string>
#include <vector>

#include <gtest/gtest.h>
#include "fpenet/gradcheck.h"
#include "fpenet/loss.h"
#include "fpenet/tape.h"
#include "oracles.h"

namespace fpenet {
namespace {

using oracle::Array;

struct ConvCase {
  int cin, cout, k, stride, dilation, pad, groups;
  bool bias;
};

class ConvOracleTest : public ::testing::TestWithParam<ConvCase> {};

TEST_P(ConvOracleTest, MatchesDirectSummation) {
  const ConvCase cc = GetParam();
  ConvSpec spec{cc.cin, cc.cout, cc.k, cc.k, cc.stride, cc.dilation,
                cc.pad, cc.groups, cc.bias};
  Rng rng(17);
  for (const auto [h, w] : {std::pair{7, 9}, std::pair{8, 8}, std::pair{13, 5}}) {
    Tensor<float> x(Shape{2, cc.cin, h, w});
    Tensor<float> wt(spec.weight_shape());
    Tensor<float> b = channel_vector<float>(cc.cout, 0.0f);
    oracle::randomize(x, rng);
    oracle::randomize(wt, rng);
    oracle::randomize(b, rng);
    const auto y = ops::conv2d(x, wt, cc.bias ? &b : nullptr, spec);
    const Array bias = oracle::from(b);
    const Array want =
        oracle::conv(oracle::from(x), oracle::from(wt), cc.bias ? &bias : nullptr,
                     cc.stride, cc.dilation, cc.pad, cc.groups);
    ASSERT_EQ(y.shape(), (Shape{want.n, want.c, want.h, want.w}));
    EXPECT_LT(oracle::max_rel_diff(y, want), oracle::kFloatTolerance)
        << h << "x" << w;
  }
}

INSTANTIATE_TEST_SUITE_P(
    Specs, ConvOracleTest,
    ::testing::Values(ConvCase{3, 16, 3, 2, 1, 1, 1, false},
                      ConvCase{4, 6, 3, 1, 1, 1, 1, true},
                      ConvCase{8, 8, 3, 1, 2, 2, 8, false},
                      ConvCase{8, 8, 3, 2, 4, 4, 8, false},
                      ConvCase{6, 6, 3, 1, 3, 3, 3, false},
                      ConvCase{5, 7, 1, 1, 1, 0, 1, true},
                      ConvCase{4, 4, 1, 2, 1, 0, 1, false},
                      ConvCase{2, 3, 5, 1, 1, 0, 1, false}));

TEST(ConvSpecTest, OutputExtent) {
  const auto dw = ConvSpec::depthwise3x3(8, 4, 1);
  EXPECT_EQ(dw.output_extent(16, 3), 16);
  const auto dw2 = ConvSpec::depthwise3x3(8, 1, 2);
  EXPECT_EQ(dw2.output_extent(17, 3), 9);
  EXPECT_EQ(dw2.output_extent(16, 3), 8);
  ConvSpec big{1, 1, 5, 5, 1, 1, 0, 1, false};
  EXPECT_THROW(big.output_extent(3, 5), ConfigError);
}

TEST(ConvSpecTest, RejectsBadGroups) {
  ConvSpec s{6, 4, 3, 3, 1, 1, 1, 4, false};
  EXPECT_THROW(s.validate(), ConfigError);
  s.groups = 2;
  EXPECT_NO_THROW(s.validate());
}

TEST(ConvTest, ChannelMismatchIsDimensionError) {
  const ConvSpec spec = ConvSpec::pointwise(4, 2, false);
  Tensor<float> x(Shape{1, 3, 4, 4});
  Tensor<float> w(spec.weight_shape());
  EXPECT_THROW(ops::conv2d<float>(x, w, nullptr, spec), DimensionError);
}

TEST(BatchNormTest, TrainMatchesOracle) {
  Rng rng(3);
  BatchNormState<double> s(5);
  oracle::randomize(s.gamma, rng, 0.5, 1.5);
  oracle::randomize(s.beta, rng);
  Tensor<double> x(Shape{3, 5, 4, 6});
  oracle::randomize(x, rng, -2.0, 3.0);
  const auto r = ops::batch_norm_train(x, s.gamma, s.beta, s.eps);
  EXPECT_LT(oracle::max_rel_diff(r.output,
                                 oracle::batch_norm(oracle::from(x), s, true)),
            1e-12);
  EXPECT_EQ(r.count, 3 * 4 * 6);
}

TEST(BatchNormTest, InferMatchesOracle) {
  Rng rng(4);
  BatchNormState<float> s(4);
  oracle::randomize(s.gamma, rng, 0.5, 1.5);
  oracle::randomize(s.beta, rng);
  oracle::randomize(s.running_mean, rng);
  oracle::randomize(s.running_var, rng, 0.5, 2.0);
  Tensor<float> x(Shape{2, 4, 3, 3});
  oracle::randomize(x, rng);
  const auto y = ops::batch_norm_infer(x, s.gamma, s.beta, s.running_mean,
                                       s.running_var, s.eps);
  EXPECT_LT(oracle::max_rel_diff(y, oracle::batch_norm(oracle::from(x), s, false)),
            1e-5);
}

TEST(BatchNormTest, RunningUpdateUsesMomentum) {
  BatchNormState<float> s(1);
  s.update_running(channel_vector<float>(1, 2.0f), channel_vector<float>(1, 3.0f));
  EXPECT_FLOAT_EQ(s.running_mean[0], 0.2f);
  EXPECT_FLOAT_EQ(s.running_var[0], 0.9f * 1.0f + 0.1f * 3.0f);
}

TEST(UpsampleTest, MatchesOracle) {
  Rng rng(5);
  Tensor<double> x(Shape{2, 3, 5, 4});
  oracle::randomize(x, rng);
  EXPECT_LT(oracle::max_rel_diff(ops::upsample_bilinear_x2(x),
                                 oracle::upsample_x2(oracle::from(x))),
            1e-12);
}

TEST(UpsampleTest, HalfPixelWeights) {
  Tensor<float> x(Shape{1, 1, 1, 2}, std::vector<float>{0.0f, 4.0f});
  const auto y = ops::upsample_bilinear_x2(x);
  ASSERT_EQ(y.w(), 4);
  // Source columns -0.25, 0.25, 0.75, 1.25, clamped at the borders.
  EXPECT_FLOAT_EQ(y[0], 0.0f);
  EXPECT_FLOAT_EQ(y[1], 1.0f);
  EXPECT_FLOAT_EQ(y[2], 3.0f);
  EXPECT_FLOAT_EQ(y[3], 4.0f);
}

TEST(UpsampleTest, ConstantStaysConstant) {
  Tensor<float> x(Shape{1, 2, 3, 5}, 1.25f);
  const auto y = ops::upsample_bilinear_x2(x);
  for (float v : y.data()) EXPECT_EQ(v, 1.25f);
}

TEST(ElementwiseTest, MulBroadcastBothLayouts) {
  Tensor<float> a(Shape{1, 2, 2, 2});
  for (std::size_t i = 0; i < a.size(); ++i) a[i] = static_cast<float>(i);
  Tensor<float> cv(Shape{1, 2, 1, 1}, std::vector<float>{2.0f, -1.0f});
  const auto yc = ops::mul_broadcast(a, cv);
  EXPECT_EQ(yc.at(0, 0, 1, 1), 6.0f);
  EXPECT_EQ(yc.at(0, 1, 0, 1), -5.0f);
  Tensor<float> sp(Shape{1, 1, 2, 2}, std::vector<float>{1, 0, 0, 2});
  const auto ys = ops::mul_broadcast(a, sp);
  EXPECT_EQ(ys.at(0, 1, 0, 0), 4.0f);
  EXPECT_EQ(ys.at(0, 1, 1, 1), 14.0f);
  EXPECT_EQ(ys.at(0, 0, 0, 1), 0.0f);
  Tensor<float> bad(Shape{1, 3, 1, 1});
  EXPECT_THROW(ops::mul_broadcast(a, bad), DimensionError);
}

TEST(ElementwiseTest, AddRejectsShapeMismatch) {
  EXPECT_THROW(ops::add(Tensor<float>(Shape{1, 2, 3, 3}),
                        Tensor<float>(Shape{1, 2, 3, 4})),
               DimensionError);
}

TEST(ChannelOpsTest, SplitThenConcatIsIdentity) {
  Rng rng(6);
  Tensor<float> x(Shape{2, 8, 3, 2});
  oracle::randomize(x, rng);
  const auto parts = ops::split_channels(x, 4);
  ASSERT_EQ(parts.size(), 4u);
  EXPECT_EQ(parts[2].at(1, 1, 2, 0), x.at(1, 5, 2, 0));
  EXPECT_EQ(ops::concat_channels(parts), x);
  EXPECT_THROW(ops::split_channels(x, 3), ConfigError);
}

TEST(ChannelOpsTest, PoolAndMean) {
  Tensor<float> x(Shape{1, 2, 2, 2}, std::vector<float>{1, 2, 3, 4, 5, 6, 7, 8});
  const auto p = ops::global_avg_pool(x);
  EXPECT_EQ(p.shape(), (Shape{1, 2, 1, 1}));
  EXPECT_FLOAT_EQ(p[0], 2.5f);
  EXPECT_FLOAT_EQ(p[1], 6.5f);
  const auto m = ops::channel_mean(x);
  EXPECT_EQ(m.shape(), (Shape{1, 1, 2, 2}));
  EXPECT_FLOAT_EQ(m[3], 6.0f);
}

TEST(TapeTest, ParameterIsBoundOnce) {
  Tape<double> tape;
  Tensor<double> p(Shape{1, 1, 1, 1}, 3.0);
  const Var a = tape.parameter(p);
  const Var b = tape.parameter(p);
  EXPECT_EQ(a.id, b.id);
  const Var loss = tape.sum(tape.add(a, b));
  EXPECT_DOUBLE_EQ((*tape.backward(loss).find(a))[0], 2.0);
}

TEST(TapeTest, BackwardNeedsScalar) {
  Tape<double> tape;
  const Var x = tape.input(Tensor<double>(Shape{1, 2, 1, 1}));
  EXPECT_THROW(tape.backward(tape.relu(x)), DimensionError);
}

TEST(TapeTest, ConstantsGetNoGradient) {
  Tape<double> tape;
  const Var c = tape.constant(Tensor<double>(Shape{1, 1, 2, 2}, 1.0));
  const Var x = tape.input(Tensor<double>(Shape{1, 1, 2, 2}, 2.0));
  const auto grads = tape.backward(tape.sum(tape.add(c, x)));
  EXPECT_EQ(grads.find(c), nullptr);
  ASSERT_NE(grads.find(x), nullptr);
}

class GradcheckOpTest : public ::testing::TestWithParam<std::string> {};

TEST_P(GradcheckOpTest, MatchesCentralDifferences) {
  for (std::uint64_t seed : {0u, 1u}) {
    GradcheckOptions opt;
    opt.seed = seed;
    const auto r = run_gradcheck(GetParam(), opt);
    EXPECT_TRUE(r.passed) << r.op << " " << r.shape.to_string() << " worst "
                          << r.worst << " err " << r.max_error;
    EXPECT_LT(r.max_error, 1e-5);
    EXPECT_GT(r.elements, 0u);
  }
}

INSTANTIATE_TEST_SUITE_P(AllOps, GradcheckOpTest,
                         ::testing::ValuesIn(gradcheck_op_names()),
                         [](const auto& info) { return info.param; });

TEST(GradcheckTest, UnknownOpIsConfigError) {
  EXPECT_THROW(run_gradcheck("softmax", {}), ConfigError);
}

TEST(GradcheckTest, ReluAwayFromKinkIsExact) {
  const auto r = run_gradcheck("relu", {});
  EXPECT_TRUE(r.passed);
  EXPECT_LT(r.max_error, 1e-8);
}

// Doubling rule with a deliberately wrong backward (factor 3).
TEST(GradcheckTest, DetectsCorruptedBackward) {
  Rng rng(8);
  Tensor<double> x(Shape{1, 2, 3, 3});
  oracle::randomize(x, rng);
  const GradcheckFn f = [&](Tape<double>& tape) {
    const Var v = tape.parameter(x);
    Tensor<double> y = tape.value(v);
    for (auto& e : y.data()) e *= 2.0;
    return tape.record({v}, std::move(y),
                       [v](const Tensor<double>& g, Tape<double>::GradSink& s) {
                         Tensor<double> bad = g;
                         for (auto& e : bad.data()) e *= 3.0;
                         s.accumulate(v, bad);
                       });
  };
  const auto r = check_gradients("double_it", {{"x", &x}}, f, {});
  EXPECT_FALSE(r.passed);
  EXPECT_EQ(r.op, "double_it");
  EXPECT_NEAR(r.max_error, 1.0 / 3.0, 1e-6);
  EXPECT_EQ(r.worst.rfind("x[", 0), 0u);
}

TEST(CrossEntropyTest, MatchesPerPixelOracle) {
  Rng rng(9);
  Tensor<double> logits(Shape{2, 4, 3, 5});
  oracle::randomize(logits, rng, -3.0, 3.0);
  LabelMap labels(2, 3, 5);
  for (auto& l : labels.labels) l = uniform_int(rng, 0, 3);
  labels.at(1, 2, 4) = kDefaultIgnoreIndex;
  labels.at(0, 0, 0) = kDefaultIgnoreIndex;
  oracle::Array grad;
  const double want = oracle::cross_entropy(oracle::from(logits), labels,
                                            kDefaultIgnoreIndex, &grad);
  const auto got = cross_entropy(logits, labels, kDefaultIgnoreIndex);
  EXPECT_NEAR(got.loss, want, 1e-12);
  EXPECT_EQ(got.counted, 28);
  EXPECT_LT(oracle::max_rel_diff(got.grad, grad), 1e-10);
}

TEST(CrossEntropyTest, UniformLogitsGiveLogC) {
  Tensor<float> logits(Shape{1, 3, 2, 2}, 0.5f);
  LabelMap labels(1, 2, 2, 1);
  EXPECT_NEAR(cross_entropy(logits, labels, kDefaultIgnoreIndex).loss,
              std::log(3.0), 1e-6);
}

TEST(CrossEntropyTest, AllIgnoredIsZero) {
  Tensor<float> logits(Shape{1, 3, 2, 2}, 0.5f);
  LabelMap labels(1, 2, 2, kDefaultIgnoreIndex);
  const auto r = cross_entropy(logits, labels, kDefaultIgnoreIndex);
  EXPECT_EQ(r.loss, 0.0f);
  EXPECT_EQ(r.counted, 0);
}

TEST(CrossEntropyTest, OutOfRangeLabelNamesPixel) {
  Tensor<float> logits(Shape{1, 3, 2, 2});
  LabelMap labels(1, 2, 2, 0);
  labels.at(0, 1, 0) = 7;
  try {
    cross_entropy(logits, labels, kDefaultIgnoreIndex);
    FAIL() << "expected DataError";
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("y=1"), std::string::npos) << e.what();
  }
}

}  // namespace
}  // namespace fpenet
