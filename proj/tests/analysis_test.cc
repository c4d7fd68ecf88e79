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

#include "fpenet/analysis.h"

#include <sstream>
#include <string>

#include <gtest/gtest.h>
#include "fpenet/graph.h"
#include "fpenet/tape.h"
#include "oracles.h"

namespace fpenet {
namespace {

ModelConfig depth_config(int p, int q, DecoderKind decoder) {
  ModelConfig cfg;
  cfg.p = p;
  cfg.q = q;
  cfg.decoder = decoder;
  return cfg;
}

// Learnable parameters of one stride-1 FPE block at c channels, k = 4,
// written out term by term: expand conv + BN, four depthwise 3x3 + BN,
// projection conv + BN.
std::int64_t stride1_block_params(std::int64_t c) {
  const std::int64_t e = 4 * c;
  return c * e + 2 * e + 9 * e + 2 * e + e * c + 2 * c;
}

TEST(ConvCostTest, Trivial) {
  const ConvSpec unit = ConvSpec::pointwise(1, 1, true);
  EXPECT_EQ(conv_params(unit), 2);
  EXPECT_EQ(conv_macs(ConvSpec::pointwise(1, 1, false), 1, 1), 1);
  const ConvSpec dw = ConvSpec::depthwise3x3(32, 2, 1);
  EXPECT_EQ(conv_params(dw), 32 * 9);
  EXPECT_EQ(conv_macs(dw, 10, 20), 10 * 20 * 32 * 9);
}

TEST(ParamCountTest, BlockClosedForms) {
  EXPECT_EQ(stride1_block_params(64), 36224);
  EXPECT_EQ(stride1_block_params(32), 9920);
  const auto q7 = count_params(depth_config(3, 7, DecoderKind::kBilinear));
  const auto q9 = count_params(depth_config(3, 9, DecoderKind::kBilinear));
  EXPECT_EQ(q9.total_params - q7.total_params, 2 * stride1_block_params(64));
  const auto p5 = count_params(depth_config(5, 9, DecoderKind::kBilinear));
  EXPECT_EQ(p5.total_params - q9.total_params, 2 * stride1_block_params(32));
}

struct DepthRow {
  int p, q;
  double ref_params;
};

class DepthGridTest : public ::testing::TestWithParam<DepthRow> {};

TEST_P(DepthGridTest, WithinFivePercentOfReference) {
  const DepthRow row = GetParam();
  const auto r = count_params(depth_config(row.p, row.q, DecoderKind::kBilinear));
  EXPECT_NEAR(r.total_params / row.ref_params, 1.0, 0.05) << r.total_params;
}

TEST_P(DepthGridTest, StaticCountMatchesBuiltGraph) {
  const DepthRow row = GetParam();
  for (auto decoder : {DecoderKind::kBilinear, DecoderKind::kMeu}) {
    const ModelConfig cfg = depth_config(row.p, row.q, decoder);
    EXPECT_EQ(count_params(cfg).total_params,
              static_cast<std::int64_t>(build(cfg, 0).parameter_count()));
  }
}

INSTANTIATE_TEST_SUITE_P(Grid, DepthGridTest,
                         ::testing::Values(DepthRow{3, 5, 233e3},
                                           DepthRow{3, 7, 305e3},
                                           DepthRow{5, 7, 325e3},
                                           DepthRow{3, 9, 378e3},
                                           DepthRow{5, 9, 398e3},
                                           DepthRow{3, 11, 450e3}));

TEST(ParamCountTest, OrderingAndMonotonicity) {
  const int grid[][2] = {{3, 5}, {3, 7}, {5, 7}, {3, 9}, {5, 9}, {3, 11}};
  std::int64_t prev = 0;
  for (const auto& pq : grid) {
    const auto t =
        count_params(depth_config(pq[0], pq[1], DecoderKind::kBilinear))
            .total_params;
    EXPECT_GT(t, prev);
    prev = t;
  }
  for (int p = 1; p < 6; ++p) {
    for (int q = 1; q < 6; ++q) {
      const auto base = analyze(depth_config(p, q, DecoderKind::kMeu), 64, 64);
      const auto more_p =
          analyze(depth_config(p + 1, q, DecoderKind::kMeu), 64, 64);
      const auto more_q =
          analyze(depth_config(p, q + 1, DecoderKind::kMeu), 64, 64);
      EXPECT_GT(more_p.total_params, base.total_params);
      EXPECT_GT(more_q.total_params, base.total_params);
      EXPECT_GT(more_p.total_macs, base.total_macs);
      EXPECT_GT(more_q.total_macs, base.total_macs);
    }
  }
}

TEST(ParamCountTest, DefaultNetworkIsPointFourMillion) {
  const auto r = count_params(ModelConfig{});
  EXPECT_NEAR(r.total_params / 0.4e6, 1.0, 0.05);
}

TEST(MacCountTest, TotalsAreColumnSums) {
  const auto r = analyze(ModelConfig{}, 1024, 512);
  std::int64_t params = 0, macs = 0, elementwise = 0;
  for (const auto& row : r.rows) {
    params += row.params;
    macs += row.macs;
    elementwise += row.elementwise;
  }
  EXPECT_EQ(params, r.total_params);
  EXPECT_EQ(macs, r.total_macs);
  EXPECT_EQ(elementwise, r.total_elementwise);
  EXPECT_FALSE(r.convention.empty());
}

TEST(MacCountTest, BilinearScalesExactlyWithArea) {
  const ModelConfig cfg = depth_config(3, 7, DecoderKind::kBilinear);
  const auto base = count_macs(cfg, 1024, 512).total_macs;
  EXPECT_EQ(4 * count_macs(cfg, 1536, 768).total_macs, 9 * base);
  EXPECT_EQ(16 * count_macs(cfg, 768, 384).total_macs, 9 * base);
}

// Only the channel-gate conv works on the pooled 1x1 tensor, so the MEU
// network is affine in area with that small constant.
TEST(MacCountTest, MeuScalesWithAreaUpToGateConstant) {
  const ModelConfig cfg;
  const auto a = count_macs(cfg, 1024, 512).total_macs;
  const auto b = count_macs(cfg, 2048, 1024).total_macs;
  const std::int64_t gates = 64 * 64 + 32 * 32;
  EXPECT_EQ(b - gates, 4 * (a - gates));
  EXPECT_NEAR(static_cast<double>(count_macs(cfg, 1536, 768).total_macs) / a,
              12.8 / 5.7, 0.005 * 12.8 / 5.7);
  EXPECT_NEAR(static_cast<double>(count_macs(cfg, 768, 384).total_macs) / a,
              3.2 / 5.7, 0.005 * 3.2 / 5.7);
}

TEST(MacCountTest, DoublingQuadruplesSpatialRows) {
  const ModelConfig cfg;
  const auto a = count_macs(cfg, 256, 128);
  const auto b = count_macs(cfg, 512, 256);
  ASSERT_EQ(a.rows.size(), b.rows.size());
  for (std::size_t i = 0; i < a.rows.size(); ++i) {
    if (a.rows[i].op == "MEU") continue;
    EXPECT_EQ(b.rows[i].macs, 4 * a.rows[i].macs) << a.rows[i].name;
  }
}

TEST(MacCountTest, WithinTwoXOfReference) {
  const double ref[][3] = {{3, 5, 3.77e9}, {3, 7, 4.37e9}, {5, 7, 5.04e9},
                             {3, 9, 4.98e9}, {5, 9, 5.64e9}, {3, 11, 5.58e9}};
  for (const auto& row : ref) {
    const auto r = count_macs(
        depth_config(static_cast<int>(row[0]), static_cast<int>(row[1]),
                     DecoderKind::kBilinear),
        1024, 512);
    const double ratio = r.total_macs / row[2];
    EXPECT_GT(ratio, 0.5);
    EXPECT_LT(ratio, 2.0);
  }
}

TEST(MacCountTest, RejectsBadSizes) {
  EXPECT_THROW(analyze(ModelConfig{}, 1020, 512), ConfigError);
}

TEST(SeparableCostTest, ClosedForm) {
  const Fraction f = separable_cost_ratio(128);
  EXPECT_EQ(f, (Fraction{1152, 137}));
  EXPECT_NEAR(f.value(), 9.0 * 128 / (9 + 128), 1e-12);
  EXPECT_NEAR(f.value(), 8.41, 0.005);
  for (int c : {1, 16, 64, 512}) {
    EXPECT_NEAR(separable_cost_ratio(c).value(), 9.0 * c / (9 + c), 1e-12);
  }
}

TEST(ReceptiveFieldTest, StemAndNetwork) {
  const auto rows = receptive_field_table(ModelConfig{});
  ASSERT_FALSE(rows.empty());
  EXPECT_EQ(rows.front().name, "stem");
  EXPECT_EQ(rows.front().receptive_field, 3);
  EXPECT_EQ(rows.front().jump, 2);
  // stage1 block (k=1, b=1, dilation 1): + 2 * 2.
  EXPECT_EQ(rows[1].receptive_field, 7);
  for (std::size_t i = 1; i < rows.size(); ++i) {
    EXPECT_GT(rows[i].receptive_field, rows[i - 1].receptive_field);
  }
  // Each later block adds 2 * 8 * jump; the stride-2 blocks start at the
  // previous jump.
  int rf = 7;
  rf += 16 * 2 + 3 * 16 * 4;
  rf += 16 * 4 + 9 * 16 * 8;
  EXPECT_EQ(rows.back().receptive_field, rf);
  EXPECT_EQ(rows.back().jump, 8);
}

// rf of two stacked 3x3 convs: 5, measured from the gradient support.
TEST(ReceptiveFieldTest, TwoLayerProbe) {
  Rng rng(12);
  const ConvSpec spec{2, 2, 3, 3, 1, 1, 1, 1, false};
  Tensor<double> w1(spec.weight_shape()), w2(spec.weight_shape());
  oracle::randomize(w1, rng, 0.1, 1.0);
  oracle::randomize(w2, rng, 0.1, 1.0);
  Tensor<double> x(Shape{1, 2, 11, 11});
  oracle::randomize(x, rng);
  Tape<double> tape;
  const Var in = tape.input(x);
  const Var y = tape.conv2d(tape.conv2d(in, tape.parameter(w1), spec),
                            tape.parameter(w2), spec);
  Tensor<double> pick(tape.value(y).shape());
  pick.at(0, 0, 5, 5) = 1.0;
  const auto grads = tape.backward(tape.weighted_sum(y, pick));
  const auto& g = *grads.find(in);
  int lo = 11, hi = -1;
  for (int i = 0; i < 11; ++i)
    if (g.at(0, 0, i, 5) != 0.0) {
      lo = std::min(lo, i);
      hi = std::max(hi, i);
    }
  EXPECT_EQ(hi - lo + 1, 5);
}

TEST(ShapeTableTest, ReferenceSizes) {
  const auto rows = shape_table(ModelConfig{}, 1024, 512);
  ASSERT_EQ(rows.size(), 6u);
  const int want[6][3] = {{16, 512, 256}, {32, 256, 128}, {64, 128, 64},
                          {64, 256, 128}, {32, 512, 256}, {19, 512, 256}};
  const char* names[6] = {"stage1", "stage2", "stage3",
                          "decoder2", "decoder1", "final"};
  for (int i = 0; i < 6; ++i) {
    EXPECT_EQ(rows[i].name, names[i]);
    EXPECT_EQ(rows[i].channels, want[i][0]);
    EXPECT_EQ(rows[i].h, want[i][1]);
    EXPECT_EQ(rows[i].w, want[i][2]);
  }
}

TEST(ShapeTableTest, OtherSizes) {
  const auto toy = shape_table(ModelConfig{}, 64, 64);
  const int sides[6] = {32, 16, 8, 16, 32, 32};
  for (int i = 0; i < 6; ++i) EXPECT_EQ(toy[i].h, sides[i]);
  const auto big = shape_table(ModelConfig{}, 1536, 768);
  EXPECT_EQ(big[0].h, 768);
  EXPECT_EQ(big[1].w, 192);
  EXPECT_EQ(big[2].h, 192);
  EXPECT_EQ(big[2].w, 96);
}

TEST(ShapeTableTest, MatchesBuiltGraph) {
  ModelConfig cfg;
  cfg.input_h = 256;
  cfg.input_w = 128;
  const LayerGraph g = build(cfg, 0);
  const auto rows = shape_table(cfg, 256, 128);
  const Shape s3 = g.nodes()[g.find("stage3.block9")].output_shape;
  EXPECT_EQ(rows[2].h, s3.h);
  EXPECT_EQ(rows[2].w, s3.w);
  EXPECT_EQ(rows[2].channels, s3.c);
}

TEST(ReportFormatTest, MachineLinesParse) {
  const auto r = analyze(ModelConfig{}, 1024, 512);
  std::istringstream in(format_report_machine(r));
  std::string line;
  std::size_t lines = 0;
  std::int64_t params = 0;
  while (std::getline(in, line)) {
    ++lines;
    std::istringstream fields(line);
    std::string name, shape;
    std::int64_t p, m;
    int rf;
    ASSERT_TRUE(fields >> name >> shape >> p >> m >> rf) << line;
    if (name == "total") {
      EXPECT_EQ(p, params);
      EXPECT_EQ(m, r.total_macs);
    } else if (name != "elementwise") {
      params += p;
    }
  }
  EXPECT_EQ(lines, r.rows.size() + 2);
}

TEST(ReportFormatTest, TextHasBothConventions) {
  const std::string text = format_report_text(analyze(ModelConfig{}, 1024, 512));
  EXPECT_NE(text.find("total macs"), std::string::npos);
  EXPECT_NE(text.find("2 x macs"), std::string::npos);
  EXPECT_NE(text.find("convention"), std::string::npos);
}

}  // namespace
}  // namespace fpenet
