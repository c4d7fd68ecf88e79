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

#include "commands.h"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "fpenet/analysis.h"
#include "fpenet/config.h"
#include "fpenet/dataset.h"
#include "fpenet/errors.h"
#include "fpenet/file_io.h"
#include "fpenet/gradcheck.h"
#include "fpenet/graph.h"
#include "fpenet/random.h"
#include "fpenet/trainer.h"
#include "fpenet/weights_io.h"
#include "image_io.h"

namespace fpenet::tools {

namespace {

// Seed offset separating the validation set from the training set.
constexpr std::uint64_t kValidationSeedMix = 0x9e3779b97f4a7c15ull;

struct ModelFlags {
  std::string config;
  std::string input;

  ModelConfig load() const {
    ModelConfig cfg = config.empty() ? ModelConfig{} : load_config_file(config);
    if (!input.empty()) {
      std::tie(cfg.input_h, cfg.input_w) = parse_size(input);
      cfg.validate();
    }
    return cfg;
  }
};

struct AnalyzeFlags {
  ModelFlags model;
  bool machine = false;
};

struct InferFlags {
  std::string config;
  std::string weights;
  std::string image;
  std::string out;
  std::string palette;
  bool strict = false;
};

struct TrainFlags {
  std::string config;
  std::uint64_t data_seed = 1;
  std::uint64_t seed = 0;
  int epochs = 30;
  int images = 200;
  int val_images = 40;
  int batch = 8;
  double lr = 0.0005;
  bool no_augment = false;
  std::string out;
  std::string log;
};

struct BenchFlags {
  ModelFlags model;
  int iters = 100;
  int warmup = 5;
};

struct GradcheckFlags {
  std::string op;
  bool all = false;
  std::uint64_t seed = 0;
};

int cmd_analyze(const AnalyzeFlags& f, std::ostream& out) {
  const ModelConfig cfg = f.model.load();
  const CostReport r = analyze(cfg, cfg.input_h, cfg.input_w);
  out << (f.machine ? format_report_machine(r) : format_report_text(r));
  return kExitOk;
}

int cmd_shapes(const ModelFlags& f, std::ostream& out) {
  const ModelConfig cfg = f.load();
  out << format_shape_table(shape_table(cfg, cfg.input_h, cfg.input_w));
  return kExitOk;
}

int round_up8(int v) { return (v + 7) / 8 * 8; }

int cmd_infer(const InferFlags& f, std::ostream& out) {
  ModelConfig cfg = load_config_file(f.config);
  std::optional<Palette> palette;
  if (!f.palette.empty()) palette = parse_palette(read_file(f.palette));
  const RgbImage img = decode_ppm(read_file(f.image));

  const bool aligned = img.h % 8 == 0 && img.w % 8 == 0;
  if (!aligned && f.strict) {
    throw DataError("image is " + std::to_string(img.h) + "x" +
                    std::to_string(img.w) +
                    "; both sides must be divisible by 8 under --strict");
  }
  cfg.input_h = round_up8(img.h);
  cfg.input_w = round_up8(img.w);
  LayerGraph g = build(cfg, 0);
  load_weights(g, f.weights);

  Tensor<float> x = to_tensor(img);
  std::string comment;
  if (!aligned) {
    x = pad_reflect(x, cfg.input_h, cfg.input_w);
    comment = "reflect-padded " + std::to_string(img.h) + "x" +
              std::to_string(img.w) + " to " + std::to_string(cfg.input_h) +
              "x" + std::to_string(cfg.input_w) + ", labels cropped back";
  }
  const LabelMap labels =
      crop(predict(g, normalize(x, g.input_mean())), img.h, img.w);

  const std::string bytes =
      palette ? encode_ppm(colorize(labels, *palette), comment)
              : encode_pgm(labels, std::max(1, cfg.num_classes - 1), comment);
  write_file_atomic(f.out, bytes);
  out << "wrote " << f.out << " (" << img.h << "x" << img.w << ", "
      << cfg.num_classes << " classes)\n";
  return kExitOk;
}

int cmd_train(const TrainFlags& f, std::ostream& out) {
  const ModelConfig cfg = load_config_file(f.config);
  const auto train_set = make_toy_dataset(f.data_seed, f.images, cfg.input_h,
                                          cfg.input_w, cfg.num_classes);
  const auto val_set =
      make_toy_dataset(f.data_seed ^ kValidationSeedMix, f.val_images,
                       cfg.input_h, cfg.input_w, cfg.num_classes);
  LayerGraph g = build(cfg, f.seed);
  TrainOptions opt;
  opt.epochs = f.epochs;
  opt.batch_size = f.batch;
  opt.init_lr = f.lr;
  opt.augment = !f.no_augment;
  opt.seed = f.seed;

  std::string log = "epoch\tlr\tloss\tmiou\n";
  out << log << std::flush;
  train(g, train_set, val_set, opt, [&](const EpochRecord& r) {
    const std::string line = format_epoch(r) + "\n";
    log += line;
    out << line << std::flush;
  });
  save_weights(g, f.out);
  if (!f.log.empty()) write_file_atomic(f.log, log);
  return kExitOk;
}

int cmd_bench(const BenchFlags& f, std::ostream& out) {
  const ModelConfig cfg = f.model.load();
  const LayerGraph g = build(cfg, 0);
  Rng rng(0);
  Tensor<float> x(Shape{1, 3, cfg.input_h, cfg.input_w});
  for (auto& v : x.data()) v = static_cast<float>(uniform(rng, -0.5, 0.5));

  for (int i = 0; i < f.warmup; ++i) forward(g, x);
  std::vector<double> ms;
  ms.reserve(f.iters);
  for (int i = 0; i < f.iters; ++i) {
    const auto t0 = std::chrono::steady_clock::now();
    forward(g, x);
    const auto t1 = std::chrono::steady_clock::now();
    ms.push_back(std::chrono::duration<double, std::milli>(t1 - t0).count());
  }
  double mean = 0.0;
  for (double v : ms) mean += v;
  mean /= ms.size();
  std::vector<double> sorted = ms;
  std::sort(sorted.begin(), sorted.end());
  const std::size_t n = sorted.size();
  const double median = n % 2 ? sorted[n / 2]
                              : 0.5 * (sorted[n / 2 - 1] + sorted[n / 2]);
  char buf[256];
  std::snprintf(buf, sizeof(buf),
                "input\t%dx%d\niters\t%d\nwarmup\t%d\nmean_ms\t%.3f\n"
                "median_ms\t%.3f\nmin_ms\t%.3f\nfps\t%.2f\n",
                cfg.input_h, cfg.input_w, f.iters, f.warmup, mean, median,
                sorted.front(), 1000.0 / mean);
  out << buf;
  return kExitOk;
}

int cmd_gradcheck(const GradcheckFlags& f, std::ostream& out,
                  std::ostream& err) {
  std::vector<std::string> ops;
  if (f.all || f.op.empty()) {
    ops = gradcheck_op_names();
  } else {
    ops.push_back(f.op);
  }
  GradcheckOptions opt;
  opt.seed = f.seed;
  bool all_ok = true;
  std::ostringstream table;
  table << "op\tshape\tmax_rel_error\tresult\n";
  for (const std::string& op : ops) {
    const GradcheckResult r = run_gradcheck(op, opt);
    char e[32];
    std::snprintf(e, sizeof(e), "%.3e", r.max_error);
    table << op << '\t' << r.shape.to_string() << '\t' << e << '\t'
          << (r.passed ? "pass" : "FAIL") << '\n';
    if (!r.passed) {
      all_ok = false;
      err << "gradcheck failed: op " << op << ", shape "
          << r.shape.to_string() << ", worst element " << r.worst
          << ", error " << e << ", kinks " << r.kinks << "/" << r.elements
          << "\n";
    }
  }
  out << table.str();
  return all_ok ? kExitOk : kExitFailure;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out,
            std::ostream& err) {
  CLI::App app{"FPENet: lightweight semantic segmentation toolkit", "fpenet"};
  app.require_subcommand(1, 1);
  app.option_defaults()->always_capture_default();

  auto add_model = [](CLI::App* c, ModelFlags& m) {
    c->add_option("--config", m.config, "model config file")
        ->check(CLI::ExistingFile);
    c->add_option("--input", m.input, "input size HxW (overrides config)");
  };

  AnalyzeFlags analyze_flags;
  auto* analyze_cmd = app.add_subcommand("analyze", "parameter and MAC report");
  add_model(analyze_cmd, analyze_flags.model);
  analyze_cmd->add_flag("--machine", analyze_flags.machine,
                        "tab-separated output");

  ModelFlags shapes_flags;
  auto* shapes_cmd = app.add_subcommand("shapes", "per-stage output shapes");
  add_model(shapes_cmd, shapes_flags);

  InferFlags infer_flags;
  auto* infer_cmd = app.add_subcommand("infer", "segment a PPM image");
  infer_cmd->add_option("--config", infer_flags.config)->required()
      ->check(CLI::ExistingFile);
  infer_cmd->add_option("--weights", infer_flags.weights)->required();
  infer_cmd->add_option("--image", infer_flags.image, "binary PPM (P6)")
      ->required()->check(CLI::ExistingFile);
  infer_cmd->add_option("--out", infer_flags.out, "PGM, or PPM with --palette")
      ->required();
  infer_cmd->add_option("--palette", infer_flags.palette,
                        "lines of 'class r g b'")
      ->check(CLI::ExistingFile);
  infer_cmd->add_flag("--strict", infer_flags.strict,
                      "reject sizes not divisible by 8 instead of padding");

  TrainFlags train_flags;
  auto* train_cmd = app.add_subcommand("train", "train on the toy dataset");
  train_cmd->add_option("--config", train_flags.config)->required()
      ->check(CLI::ExistingFile);
  train_cmd->add_option("--data-seed", train_flags.data_seed);
  train_cmd->add_option("--seed", train_flags.seed,
                        "initialization, shuffling and augmentation seed");
  train_cmd->add_option("--epochs", train_flags.epochs)
      ->check(CLI::NonNegativeNumber);
  train_cmd->add_option("--images", train_flags.images)
      ->check(CLI::PositiveNumber);
  train_cmd->add_option("--val-images", train_flags.val_images)
      ->check(CLI::NonNegativeNumber);
  train_cmd->add_option("--batch", train_flags.batch)
      ->check(CLI::PositiveNumber);
  train_cmd->add_option("--lr", train_flags.lr, "initial learning rate")
      ->check(CLI::NonNegativeNumber);
  train_cmd->add_flag("--no-augment", train_flags.no_augment);
  train_cmd->add_option("--out", train_flags.out, "weight file")->required();
  train_cmd->add_option("--log", train_flags.log, "also write the log here");

  BenchFlags bench_flags;
  auto* bench_cmd = app.add_subcommand("bench", "forward-pass latency");
  add_model(bench_cmd, bench_flags.model);
  bench_cmd->add_option("--iters", bench_flags.iters)
      ->check(CLI::PositiveNumber);
  bench_cmd->add_option("--warmup", bench_flags.warmup)
      ->check(CLI::NonNegativeNumber);

  GradcheckFlags gc_flags;
  auto* gc_cmd = app.add_subcommand("gradcheck", "finite-difference checks");
  auto* op_opt = gc_cmd->add_option("--op", gc_flags.op)
                     ->check(CLI::IsMember(gradcheck_op_names()));
  auto* all_opt = gc_cmd->add_flag("--all", gc_flags.all);
  op_opt->excludes(all_opt);
  gc_cmd->add_option("--seed", gc_flags.seed);

  try {
    std::vector<std::string> args;
    for (int i = argc - 1; i >= 1; --i) args.emplace_back(argv[i]);
    app.parse(args);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*analyze_cmd) return cmd_analyze(analyze_flags, out);
    if (*shapes_cmd) return cmd_shapes(shapes_flags, out);
    if (*infer_cmd) return cmd_infer(infer_flags, out);
    if (*train_cmd) return cmd_train(train_flags, out);
    if (*bench_cmd) return cmd_bench(bench_flags, out);
    if (*gc_cmd) return cmd_gradcheck(gc_flags, out, err);
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitFailure;
  }
  return kExitUsage;
}

}  // namespace fpenet::tools
