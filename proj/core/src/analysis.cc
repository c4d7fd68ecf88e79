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

#include <algorithm>
#include <cstdio>
#include <iomanip>
#include <numeric>
#include <sstream>

#include "fpenet/errors.h"
#include "fpenet/fpe.h"

namespace fpenet {

std::int64_t conv_params(const ConvSpec& spec) {
  return static_cast<std::int64_t>(spec.in_channels / spec.groups) *
             spec.out_channels * spec.kernel_h * spec.kernel_w +
         (spec.has_bias ? spec.out_channels : 0);
}

std::int64_t conv_macs(const ConvSpec& spec, int out_h, int out_w) {
  return static_cast<std::int64_t>(out_h) * out_w * spec.out_channels *
         (spec.in_channels / spec.groups) * spec.kernel_h * spec.kernel_w;
}

namespace {

std::int64_t area(const Shape& s) {
  return static_cast<std::int64_t>(s.h) * s.w;
}

const char kConvention[] =
    "macs = conv multiply-accumulates (FLOPs = 2 x macs); elementwise ops "
    "(BN, ReLU, add, gate products, pooling, upsampling) counted "
    "separately; params exclude BN running statistics";

// Walks the network in the same order LayerGraph builds it.
class Walker {
 public:
  Walker(const ModelConfig& cfg, int h, int w) : cfg_(cfg) {
    cfg_.input_h = h;
    cfg_.input_w = w;
    cfg_.validate();
    report_.input_h = h;
    report_.input_w = w;
    report_.convention = kConvention;
  }

  CostReport run() {
    const auto [c1, c2, c3] = cfg_.stage_channels;
    ConvSpec stem;
    stem.in_channels = 3;
    stem.out_channels = c1;
    stem.kernel_h = stem.kernel_w = 3;
    stem.stride = 2;
    stem.padding = 1;
    const Shape in{1, 3, cfg_.input_h, cfg_.input_w};
    CostRow s{"stem", "3x3 conv s2", stem.output_shape(in)};
    s.params = conv_params(stem) + 2 * c1;
    s.macs = conv_macs(stem, s.shape.h, s.shape.w);
    s.elementwise = 2 * c1 * area(s.shape);
    s.receptive_field = 3;
    s.jump = 2;
    const int stem_id = push(s);

    FpeConfig f1;
    f1.in_channels = f1.out_channels = c1;
    f1.expansion = 1;
    f1.branches = 1;
    f1.dilations = {1};
    f1.inter_branch_add = cfg_.inter_branch_add;
    const int stage1 = fpe("stage1.block0", stem_id, f1);
    int next = cfg_.long_skip ? add("stage1.skip", stem_id, stage1) : stage1;

    const auto [first2, last2] = stage("stage2", next, c1, c2, cfg_.p);
    next = cfg_.long_skip ? add("stage2.skip", first2, last2) : last2;
    const int last3 = stage("stage3", next, c2, c3, cfg_.q).second;

    if (cfg_.decoder == DecoderKind::kMeu) {
      const int d2 = meu("decoder2", last3, last2, c3);
      const int d1 = meu("decoder1", d2, stage1, c2);
      classifier(d1);
    } else {
      upsample("decoder1", upsample("decoder2", classifier(last3)));
    }

    for (const CostRow& r : report_.rows) {
      report_.total_params += r.params;
      report_.total_macs += r.macs;
      report_.total_elementwise += r.elementwise;
    }
    return report_;
  }

 private:
  int push(CostRow r) {
    report_.rows.push_back(std::move(r));
    return static_cast<int>(report_.rows.size()) - 1;
  }
  const CostRow& row(int i) const { return report_.rows[i]; }

  int fpe(const std::string& name, int from, const FpeConfig& fc) {
    fc.validate();
    const CostRow& src = row(from);
    const Shape in = src.shape;
    const int e = fc.expanded_channels();
    const int bc = fc.branch_channels();
    const ConvSpec expand = ConvSpec::pointwise(fc.in_channels, e, false);
    const ConvSpec project = ConvSpec::pointwise(e, fc.out_channels, false);
    const ConvSpec dw0 = ConvSpec::depthwise3x3(bc, 1, fc.stride);
    CostRow r{name, "", Shape{1, fc.out_channels, dw0.output_extent(in.h, 3),
                              dw0.output_extent(in.w, 3)}};
    r.op = "FPE(k=" + std::to_string(fc.expansion) +
           ",b=" + std::to_string(fc.branches) +
           (fc.stride == 2 ? ") s2" : ")");
    const std::int64_t pin = area(in), pout = area(r.shape);

    r.params = conv_params(expand) + 2 * e + conv_params(project) +
               2 * fc.out_channels;
    r.macs = conv_macs(expand, in.h, in.w) +
             conv_macs(project, r.shape.h, r.shape.w);
    int widest = 0;
    for (int d : fc.dilations) {
      const ConvSpec dw = ConvSpec::depthwise3x3(bc, d, fc.stride);
      r.params += conv_params(dw) + 2 * bc;
      r.macs += conv_macs(dw, r.shape.h, r.shape.w);
      widest = std::max(widest, d);
    }
    r.elementwise = 2 * e * pin + 2 * e * pout + fc.out_channels * pout;
    if (fc.cascade_active()) r.elementwise += (fc.branches - 1) * bc * pout;
    if (fc.has_residual()) r.elementwise += fc.out_channels * pout;

    r.receptive_field = src.receptive_field + 2 * widest * src.jump;
    r.jump = src.jump * fc.stride;
    return push(std::move(r));
  }

  std::pair<int, int> stage(const std::string& prefix, int from, int in_c,
                            int out_c, int extra) {
    FpeConfig fc;
    fc.in_channels = in_c;
    fc.out_channels = out_c;
    fc.expansion = cfg_.expansion;
    fc.branches = cfg_.branches;
    fc.dilations = cfg_.dilations;
    fc.inter_branch_add = cfg_.inter_branch_add;
    fc.stride = 2;
    const int first = fpe(prefix + ".block0", from, fc);
    fc.in_channels = out_c;
    fc.stride = 1;
    int last = first;
    for (int i = 1; i <= extra; ++i) {
      last = fpe(prefix + ".block" + std::to_string(i), last, fc);
    }
    return {first, last};
  }

  int add(const std::string& name, int a, int b) {
    CostRow r{name, "add", row(b).shape};
    r.elementwise = r.shape.c * area(r.shape);
    r.receptive_field =
        std::max(row(a).receptive_field, row(b).receptive_field);
    r.jump = row(b).jump;
    return push(std::move(r));
  }

  int meu(const std::string& name, int high, int low, int out_c) {
    const Shape hs = row(high).shape, ls = row(low).shape;
    CostRow r{name, "MEU", Shape{1, out_c, ls.h, ls.w}};
    const ConvSpec hp = ConvSpec::pointwise(hs.c, out_c, false);
    const ConvSpec lp = ConvSpec::pointwise(ls.c, out_c, false);
    const std::int64_t ph = area(hs), pl = area(ls);
    r.params = conv_params(hp) + conv_params(lp) + 4 * out_c;
    r.macs = conv_macs(hp, hs.h, hs.w) + conv_macs(lp, ls.h, ls.w);
    r.elementwise = out_c * (ph + pl)  // BN
                    + out_c * pl       // upsample
                    + out_c * pl;      // fuse add
    if (cfg_.meu_channel_attention) {
      const ConvSpec ca = ConvSpec::pointwise(out_c, out_c, true);
      r.params += conv_params(ca);
      r.macs += conv_macs(ca, 1, 1);
      r.elementwise += out_c * ph + out_c + out_c * pl;  // pool, relu, mul
    }
    if (cfg_.meu_spatial_attention) {
      const ConvSpec sa = ConvSpec::pointwise(1, 1, true);
      r.params += conv_params(sa);
      r.macs += conv_macs(sa, ls.h, ls.w);
      r.elementwise += out_c * pl + pl + out_c * pl;  // mean, relu, mul
    }
    r.receptive_field =
        std::max(row(high).receptive_field, row(low).receptive_field);
    r.jump = row(low).jump;
    return push(std::move(r));
  }

  int classifier(int from) {
    const Shape in = row(from).shape;
    const ConvSpec c = ConvSpec::pointwise(in.c, cfg_.num_classes, true);
    CostRow r{"classifier", "1x1 conv", c.output_shape(in)};
    r.params = conv_params(c);
    r.macs = conv_macs(c, in.h, in.w);
    r.receptive_field = row(from).receptive_field;
    r.jump = row(from).jump;
    return push(std::move(r));
  }

  int upsample(const std::string& name, int from) {
    Shape s = row(from).shape;
    s.h *= 2;
    s.w *= 2;
    CostRow r{name, "bilinear x2", s};
    r.elementwise = s.c * area(s);
    r.receptive_field = row(from).receptive_field;
    r.jump = row(from).jump;
    return push(std::move(r));
  }

  ModelConfig cfg_;
  CostReport report_;
};

std::string human(std::int64_t v, double scale, const char* unit) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f%s", static_cast<double>(v) / scale,
                unit);
  return buf;
}

std::string shape_string(const Shape& s) {
  return std::to_string(s.c) + "x" + std::to_string(s.h) + "x" +
         std::to_string(s.w);
}

}  // namespace

CostReport analyze(const ModelConfig& cfg, int h, int w) {
  return Walker(cfg, h, w).run();
}

CostReport count_params(const ModelConfig& cfg) {
  return analyze(cfg, cfg.input_h, cfg.input_w);
}

CostReport count_macs(const ModelConfig& cfg, int h, int w) {
  return analyze(cfg, h, w);
}

std::string format_report_text(const CostReport& r) {
  std::ostringstream os;
  os << "input " << r.input_h << "x" << r.input_w << "\n";
  os << std::left << std::setw(16) << "layer" << std::setw(16) << "op"
     << std::setw(14) << "output" << std::right << std::setw(10) << "params"
     << std::setw(14) << "macs" << std::setw(14) << "elementwise"
     << std::setw(6) << "rf" << "\n";
  for (const CostRow& row : r.rows) {
    os << std::left << std::setw(16) << row.name << std::setw(16) << row.op
       << std::setw(14) << shape_string(row.shape) << std::right
       << std::setw(10) << row.params << std::setw(14) << row.macs
       << std::setw(14) << row.elementwise << std::setw(6)
       << row.receptive_field << "\n";
  }
  os << "total params " << r.total_params << " ("
     << human(r.total_params, 1e6, "M") << ")\n";
  os << "total macs " << r.total_macs << " ("
     << human(r.total_macs, 1e9, "G") << "), 2 x macs "
     << 2 * r.total_macs << " (" << human(2 * r.total_macs, 1e9, "G")
     << ")\n";
  os << "total elementwise " << r.total_elementwise << " ("
     << human(r.total_elementwise, 1e9, "G") << ")\n";
  os << "convention: " << r.convention << "\n";
  return os.str();
}

std::string format_report_machine(const CostReport& r) {
  std::ostringstream os;
  for (const CostRow& row : r.rows) {
    os << row.name << '\t' << shape_string(row.shape) << '\t' << row.params
       << '\t' << row.macs << '\t' << row.receptive_field << '\n';
  }
  const int rf = r.rows.empty() ? 1 : r.rows.back().receptive_field;
  os << "total\t3x" << r.input_h << "x" << r.input_w << '\t'
     << r.total_params << '\t' << r.total_macs << '\t' << rf << '\n';
  os << "elementwise\t-\t0\t" << r.total_elementwise << "\t0\n";
  return os.str();
}

std::vector<RfRow> receptive_field_table(const ModelConfig& cfg) {
  const CostReport r = analyze(cfg, cfg.input_h, cfg.input_w);
  std::vector<RfRow> out;
  for (const CostRow& row : r.rows) {
    if (row.op == "add") continue;
    if (row.name.rfind("decoder", 0) == 0 || row.name == "classifier") break;
    out.push_back({row.name, row.receptive_field, row.jump});
  }
  return out;
}

std::vector<ShapeRow> shape_table(const ModelConfig& cfg, int h, int w) {
  ModelConfig c = cfg;
  c.input_h = h;
  c.input_w = w;
  c.validate();
  const auto [c1, c2, c3] = c.stage_channels;
  const std::string k = std::to_string(c.expansion);
  std::vector<ShapeRow> rows{
      {"stage1", "3x3 Conv + FPE(k=1) x1", c1, h / 2, w / 2},
      {"stage2", "FPE(k=" + k + ",s2) + x" + std::to_string(c.p), c2, h / 4,
       w / 4},
      {"stage3", "FPE(k=" + k + ",s2) + x" + std::to_string(c.q), c3, h / 8,
       w / 8},
  };
  if (c.decoder == DecoderKind::kMeu) {
    rows.push_back({"decoder2", "MEU", c3, h / 4, w / 4});
    rows.push_back({"decoder1", "MEU", c2, h / 2, w / 2});
    rows.push_back({"final", "1x1 Conv", c.num_classes, h / 2, w / 2});
  } else {
    rows.push_back({"final", "1x1 Conv", c.num_classes, h / 8, w / 8});
    rows.push_back({"decoder2", "bilinear x2", c.num_classes, h / 4, w / 4});
    rows.push_back({"decoder1", "bilinear x2", c.num_classes, h / 2, w / 2});
  }
  return rows;
}

std::string format_shape_table(const std::vector<ShapeRow>& rows) {
  std::ostringstream os;
  os << std::left << std::setw(10) << "name" << std::setw(26) << "operator"
     << std::setw(9) << "channel" << "output size\n";
  for (const ShapeRow& r : rows) {
    os << std::left << std::setw(10) << r.name << std::setw(26) << r.op
       << std::setw(9) << r.channels << r.h << "x" << r.w << "\n";
  }
  return os.str();
}

Fraction separable_cost_ratio(int channels) {
  if (channels < 1) throw ConfigError("separable_cost_ratio: channels < 1");
  ConvSpec standard;
  standard.in_channels = standard.out_channels = channels;
  standard.kernel_h = standard.kernel_w = 3;
  standard.padding = 1;
  const ConvSpec dw = ConvSpec::depthwise3x3(channels, 1, 1);
  const ConvSpec pw = ConvSpec::pointwise(channels, channels, false);
  const std::int64_t num = conv_macs(standard, 1, 1);
  const std::int64_t den = conv_macs(dw, 1, 1) + conv_macs(pw, 1, 1);
  const std::int64_t g = std::gcd(num, den);
  return {num / g, den / g};
}

}  // namespace fpenet
