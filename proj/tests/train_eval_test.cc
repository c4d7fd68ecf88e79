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

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <string>

#include <gtest/gtest.h>
#include "fpenet/augment.h"
#include "fpenet/dataset.h"
#include "fpenet/graph.h"
#include "fpenet/metrics.h"
#include "fpenet/optim.h"
#include "fpenet/trainer.h"
#include "fpenet/weights_io.h"

namespace fpenet {
namespace {

TEST(PolyLrTest, EndpointsAndShape) {
  const PolySchedule s{0.0005, 0.9, 30};
  EXPECT_EQ(poly_lr(s, 0), 0.0005);
  EXPECT_EQ(poly_lr(s, 30), 0.0);
  EXPECT_DOUBLE_EQ(poly_lr(s, 15), 0.0005 * std::pow(0.5, 0.9));
  for (int e = 1; e <= 30; ++e) EXPECT_LT(poly_lr(s, e), poly_lr(s, e - 1));
  EXPECT_THROW(poly_lr(s, 31), ConfigError);
  EXPECT_THROW(poly_lr(s, -1), ConfigError);
  EXPECT_THROW(poly_lr(PolySchedule{0.1, 0.9, 0}, 0), ConfigError);
}

// Three Adam steps on a two-element parameter, unrolled by hand.
TEST(AdamTest, MatchesHandUnrolledSteps) {
  Tensor<float> w(Shape{1, 2, 1, 1}, std::vector<float>{0.5f, -1.0f});
  Tensor<float> g(Shape{1, 2, 1, 1});
  const double grads[3][2] = {{0.2, -0.1}, {0.1, 0.3}, {-0.4, 0.05}};
  AdamConfig cfg;
  cfg.weight_decay = 0.01;
  Adam adam(cfg);
  double ref[2] = {0.5, -1.0}, m[2] = {0, 0}, v[2] = {0, 0};
  const double lr = 0.01;
  for (int t = 1; t <= 3; ++t) {
    for (int i = 0; i < 2; ++i) {
      g[i] = static_cast<float>(grads[t - 1][i]);
      const double gi = grads[t - 1][i] + 0.01 * ref[i];
      m[i] = 0.9 * m[i] + 0.1 * gi;
      v[i] = 0.999 * v[i] + 0.001 * gi * gi;
      const double mh = m[i] / (1 - std::pow(0.9, t));
      const double vh = v[i] / (1 - std::pow(0.999, t));
      ref[i] -= lr * mh / (std::sqrt(vh) + 1e-8);
    }
    adam.step({{"w", &w, &g}}, lr);
    EXPECT_NEAR(w[0], ref[0], 1e-6);
    EXPECT_NEAR(w[1], ref[1], 1e-6);
  }
  EXPECT_EQ(adam.steps(), 3);
  ASSERT_NE(adam.first_moment("w"), nullptr);
  EXPECT_NEAR((*adam.first_moment("w"))[1], m[1], 1e-6);
  EXPECT_EQ(adam.first_moment("x"), nullptr);
}

TEST(AdamTest, FirstStepMovesByLr) {
  Tensor<float> w(Shape{1, 1, 1, 1}, 1.0f);
  Tensor<float> g(Shape{1, 1, 1, 1}, 3.0f);
  Adam adam(AdamConfig{0.9, 0.999, 1e-8, 0.0});
  adam.step({{"w", &w, &g}}, 0.1);
  EXPECT_NEAR(w[0], 0.9f, 1e-6);
}

TEST(AdamTest, ZeroLrIsIdentity) {
  Tensor<float> w(Shape{1, 3, 1, 1}, std::vector<float>{1, 2, 3});
  const Tensor<float> before = w;
  Tensor<float> g(Shape{1, 3, 1, 1}, 0.5f);
  Adam adam;
  adam.step({{"w", &w, &g}, {"u", &w, nullptr}}, 0.0);
  EXPECT_EQ(w, before);
}

TEST(AdamTest, NonFiniteGradientTouchesNothing) {
  Tensor<float> a(Shape{1, 2, 1, 1}, 1.0f), b(Shape{1, 2, 1, 1}, 1.0f);
  Tensor<float> ga(Shape{1, 2, 1, 1}, 0.1f), gb(Shape{1, 2, 1, 1}, 0.1f);
  gb[1] = std::numeric_limits<float>::quiet_NaN();
  Adam adam;
  try {
    adam.step({{"a", &a, &ga}, {"b", &b, &gb}}, 0.1);
    FAIL();
  } catch (const NumericalError& e) {
    EXPECT_NE(std::string(e.what()).find("'b'"), std::string::npos);
  }
  EXPECT_EQ(a[0], 1.0f);
  EXPECT_EQ(adam.steps(), 0);
}

IouResult miou_of(const std::vector<std::vector<std::int64_t>>& counts) {
  ConfusionMatrix cm(static_cast<int>(counts.size()));
  for (std::size_t t = 0; t < counts.size(); ++t)
    for (std::size_t p = 0; p < counts.size(); ++p)
      if (counts[t][p]) cm.add(static_cast<int>(t), static_cast<int>(p), counts[t][p]);
  return miou(cm);
}

TEST(MiouTest, PerfectDiagonal) {
  const auto r = miou_of({{4, 0, 0}, {0, 2, 0}, {0, 0, 9}});
  EXPECT_EQ(r.mean, 1.0);
  EXPECT_EQ(r.pixel_accuracy, 1.0);
  for (const auto& c : r.per_class) EXPECT_EQ(*c, 1.0);
}

TEST(MiouTest, TwoClassFormula) {
  const auto r = miou_of({{3, 1}, {1, 3}});
  EXPECT_DOUBLE_EQ(*r.per_class[0], 0.6);
  EXPECT_DOUBLE_EQ(*r.per_class[1], 0.6);
  EXPECT_DOUBLE_EQ(r.mean, 0.6);
  EXPECT_DOUBLE_EQ(r.pixel_accuracy, 0.75);
}

TEST(MiouTest, AbsentClassExcluded) {
  const auto r = miou_of({{3, 0, 1}, {0, 0, 0}, {1, 0, 3}});
  EXPECT_FALSE(r.per_class[1].has_value());
  EXPECT_DOUBLE_EQ(r.mean, 0.6);
}

TEST(MiouTest, EmptyIsUndefined) {
  EXPECT_THROW(miou(ConfusionMatrix(3)), UndefinedMetricError);
}

TEST(MiouTest, InvariantUnderRelabeling) {
  Rng rng(5);
  const int perm[4] = {2, 0, 3, 1};
  ConfusionMatrix a(4), b(4);
  for (int t = 0; t < 4; ++t)
    for (int p = 0; p < 4; ++p) {
      const int n = uniform_int(rng, 0, 20);
      a.add(t, p, n);
      b.add(perm[t], perm[p], n);
    }
  EXPECT_DOUBLE_EQ(miou(a).mean, miou(b).mean);
  EXPECT_DOUBLE_EQ(miou(a).pixel_accuracy, miou(b).pixel_accuracy);
}

TEST(ConfusionMatrixTest, IgnoreAndRangeChecks) {
  LabelMap truth(1, 1, 4), pred(1, 1, 4);
  truth.labels = {0, 1, 255, 1};
  pred.labels = {0, 1, 1, 0};
  ConfusionMatrix cm(2, 255);
  cm.accumulate(truth, pred);
  EXPECT_EQ(cm.total(), 3);
  EXPECT_EQ(cm.count(1, 0), 1);
  EXPECT_THROW(cm.add(2, 0), DataError);
  EXPECT_THROW(cm.add(0, -1), DataError);
  ConfusionMatrix other(2, 255);
  other.add(0, 0, 5);
  cm.merge(other);
  EXPECT_EQ(cm.count(0, 0), 6);
}

TEST(ToyDatasetTest, DeterministicPerSeed) {
  const auto a = make_toy_dataset(3, 5, 32, 40, 3);
  const auto b = make_toy_dataset(3, 5, 32, 40, 3);
  const auto c = make_toy_dataset(4, 5, 32, 40, 3);
  for (int i = 0; i < 5; ++i) {
    EXPECT_EQ(a[i].image, b[i].image);
    EXPECT_EQ(a[i].labels, b[i].labels);
  }
  EXPECT_NE(a[0].image, c[0].image);
}

TEST(ToyDatasetTest, ClassCensus) {
  for (int classes : {3, 4}) {
    const auto set = make_toy_dataset(11, 100, 32, 32, classes);
    std::vector<int> seen(classes, 0);
    for (const Sample& s : set) {
      std::set<int> present(s.labels.labels.begin(), s.labels.labels.end());
      for (int l : present) {
        ASSERT_GE(l, 0);
        ASSERT_LT(l, classes);
        ++seen[l];
      }
      EXPECT_GE(present.size(), 2u);
      for (float v : s.image.data()) {
        ASSERT_GE(v, 0.0f);
        ASSERT_LE(v, 1.0f);
      }
    }
    for (int c = 1; c < classes; ++c) EXPECT_GE(seen[c], 50) << c;
  }
}

TEST(ToyDatasetTest, RejectsBadSizes) {
  EXPECT_THROW(make_toy_dataset(1, 1, 30, 32, 3), ConfigError);
  EXPECT_THROW(make_toy_dataset(1, 1, 32, 32, 1), ConfigError);
}

TEST(ToyDatasetTest, ChannelMeansAndNormalize) {
  const auto set = make_toy_dataset(2, 4, 16, 16, 3);
  const Tensor<float> mean = channel_means(set);
  double sum = 0.0;
  for (const Sample& s : set) {
    const auto z = normalize(s.image, mean);
    for (std::size_t i = 0; i < z.shape().plane(); ++i) sum += z[i];
  }
  EXPECT_NEAR(sum / (4 * 256), 0.0, 1e-5);
}

Sample numbered_sample(int h, int w) {
  Sample s{Tensor<float>(Shape{1, 2, h, w}), LabelMap(1, h, w)};
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      s.labels.at(0, y, x) = y * w + x;
      s.image.at(0, 0, y, x) = static_cast<float>(y);
      s.image.at(0, 1, y, x) = static_cast<float>(x);
    }
  return s;
}

TEST(AugmentTest, IdentityIsExact) {
  const Sample s = numbered_sample(7, 9);
  const Sample out = apply_augmentation(s, AugmentParams{}, 255);
  EXPECT_EQ(out.labels, s.labels);
  EXPECT_EQ(out.image, s.image);
}

TEST(AugmentTest, FlipMirrorsColumns) {
  const Sample s = numbered_sample(5, 7);
  const Sample out = apply_augmentation(s, {true, 0.0, 1.0}, 255);
  for (int y = 0; y < 5; ++y)
    for (int x = 0; x < 7; ++x)
      EXPECT_EQ(out.labels.at(0, y, x), s.labels.at(0, y, 6 - x));
}

// Odd sizes put the rotation center on a pixel, so every source pixel lands
// exactly on an output pixel for quarter turns and integer scales.
TEST(AugmentTest, ForwardPointOracle) {
  const int h = 9, w = 9;
  const Sample s = numbered_sample(h, w);
  const AugmentParams cases[] = {
      {false, 90.0, 1.0}, {true, 90.0, 1.0}, {false, -90.0, 1.0},
      {true, 180.0, 1.0}, {false, 0.0, 2.0}, {true, 90.0, 2.0}};
  for (const auto& p : cases) {
    const Sample out = apply_augmentation(s, p, 255);
    int checked = 0;
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) {
        const auto [ox, oy] = augment_forward_point(x, y, h, w, p);
        const long ix = std::lround(ox), iy = std::lround(oy);
        ASSERT_NEAR(ox, ix, 1e-9);
        if (ix < 0 || ix >= w || iy < 0 || iy >= h) continue;
        EXPECT_EQ(out.labels.at(0, iy, ix), s.labels.at(0, y, x))
            << p.flip << " " << p.rotation_deg << " " << p.scale;
        EXPECT_NEAR(out.image.at(0, 1, iy, ix), x, 1e-5);
        ++checked;
      }
    EXPECT_GT(checked, 0);
  }
}

TEST(AugmentTest, ShrinkFillsBorderWithIgnore) {
  const Sample s = numbered_sample(9, 11);
  const Sample out = apply_augmentation(s, {false, 0.0, 0.5}, 255, -7.0f);
  EXPECT_EQ(out.labels.at(0, 0, 0), 255);
  EXPECT_EQ(out.image.at(0, 0, 0, 0), -7.0f);
  EXPECT_EQ(out.labels.at(0, 4, 5), s.labels.at(0, 4, 5));
}

TEST(AugmentTest, PolicyDrawsStayInRange) {
  const AugmentationPolicy policy;
  Rng rng(1);
  int flips = 0;
  const Sample s = numbered_sample(8, 12);
  for (int i = 0; i < 400; ++i) {
    const AugmentParams p = draw_augmentation(policy, rng);
    flips += p.flip;
    EXPECT_LE(std::abs(p.rotation_deg), 10.0);
    EXPECT_GE(p.scale, 0.5);
    EXPECT_LE(p.scale, 1.75);
    if (i < 20) {
      const Sample out = apply_augmentation(s, p, 255);
      EXPECT_EQ(out.labels.size(), s.labels.size());
      EXPECT_EQ(out.image.shape(), s.image.shape());
    }
  }
  EXPECT_GT(flips, 150);
  EXPECT_LT(flips, 250);
}

ModelConfig small_config() {
  ModelConfig cfg;
  cfg.num_classes = 3;
  cfg.p = 1;
  cfg.q = 1;
  cfg.input_h = 32;
  cfg.input_w = 32;
  return cfg;
}

TEST(TrainerTest, ZeroLrFreezesParameters) {
  LayerGraph g = build(small_config(), 1);
  const auto data = make_toy_dataset(1, 4, 32, 32, 3);
  auto before = g.parameters();
  std::vector<Tensor<float>> copies;
  for (const auto& p : before) copies.push_back(*p.tensor);
  TrainOptions opt;
  opt.epochs = 3;
  opt.batch_size = 4;
  opt.init_lr = 0.0;
  opt.augment = false;
  const auto r = train(g, data, {}, opt);
  const auto after = g.parameters();
  for (std::size_t i = 0; i < after.size(); ++i) {
    EXPECT_EQ(*after[i].tensor, copies[i]) << after[i].name;
  }
  ASSERT_EQ(r.log.size(), 3u);
  EXPECT_EQ(r.log[0].loss, r.log[2].loss);
}

TEST(TrainerTest, SameSeedSameWeights) {
  const auto data = make_toy_dataset(2, 6, 32, 32, 3);
  TrainOptions opt;
  opt.epochs = 2;
  opt.batch_size = 4;
  opt.init_lr = 0.005;
  opt.seed = 3;
  LayerGraph a = build(small_config(), 1);
  LayerGraph b = build(small_config(), 1);
  const auto ra = train(a, data, data, opt);
  const auto rb = train(b, data, data, opt);
  EXPECT_EQ(serialize_weights(a), serialize_weights(b));
  EXPECT_EQ(ra.log.back().loss, rb.log.back().loss);
  opt.seed = 4;
  LayerGraph c = build(small_config(), 1);
  train(c, data, data, opt);
  EXPECT_NE(serialize_weights(a), serialize_weights(c));
}

TEST(TrainerTest, LossDecreasesOnTinySet) {
  const auto data = make_toy_dataset(5, 8, 32, 32, 3);
  TrainOptions opt;
  opt.epochs = 8;
  opt.batch_size = 4;
  opt.init_lr = 0.005;
  opt.augment = false;
  LayerGraph g = build(small_config(), 2);
  const auto r = train(g, data, {}, opt);
  EXPECT_LT(r.log.back().loss, r.log.front().loss);
  EXPECT_EQ(r.log.front().lr, 0.005);
}

TEST(TrainerTest, StoresInputMean) {
  const auto data = make_toy_dataset(5, 4, 32, 32, 3);
  LayerGraph g = build(small_config(), 2);
  TrainOptions opt;
  opt.epochs = 0;
  train(g, data, {}, opt);
  EXPECT_EQ(g.input_mean(), channel_means(data));
}

TEST(TrainerTest, DivergenceNamesEpochAndStep) {
  const auto data = make_toy_dataset(5, 4, 32, 32, 3);
  LayerGraph g = build(small_config(), 2);
  TrainOptions opt;
  opt.epochs = 3;
  opt.batch_size = 2;
  opt.init_lr = 1e36;
  opt.augment = false;
  try {
    train(g, data, {}, opt);
    FAIL() << "expected divergence";
  } catch (const NumericalError& e) {
    EXPECT_NE(std::string(e.what()).find("epoch"), std::string::npos);
    EXPECT_NE(std::string(e.what()).find("step"), std::string::npos);
  }
}

TEST(TrainerTest, EvaluateCountsEveryPixel) {
  const auto data = make_toy_dataset(5, 3, 32, 32, 3);
  const LayerGraph g = build(small_config(), 2);
  const ConfusionMatrix cm = evaluate(g, data);
  EXPECT_EQ(cm.total(), 3 * 32 * 32);
}

TEST(TrainerTest, FormatEpoch) {
  EXPECT_EQ(format_epoch({3, 0.0005, 0.25, 0.875}), "3\t0.0005\t0.250000\t0.8750");
}

}  // namespace
}  // namespace fpenet
