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

#include "fpenet/config.h"

#include <charconv>
#include <fstream>
#include <set>
#include <sstream>
#include <tuple>

#include "fpenet/errors.h"
#include "fpenet/fpe.h"

namespace fpenet {

namespace {

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

int parse_int(std::string_view s, const std::string& where) {
  s = trim(s);
  int v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || s.empty()) {
    throw ConfigError(where + ": expected an integer, got '" +
                      std::string(s) + "'");
  }
  return v;
}

std::vector<int> parse_int_list(std::string_view s, const std::string& where) {
  std::vector<int> out;
  while (true) {
    const auto comma = s.find(',');
    out.push_back(parse_int(s.substr(0, comma), where));
    if (comma == std::string_view::npos) break;
    s.remove_prefix(comma + 1);
  }
  return out;
}

bool parse_flag(std::string_view s, const std::string& where) {
  s = trim(s);
  if (s == "on") return true;
  if (s == "off") return false;
  throw ConfigError(where + ": expected on|off, got '" + std::string(s) + "'");
}

}  // namespace

std::pair<int, int> parse_size(std::string_view text) {
  text = trim(text);
  const auto x = text.find('x');
  if (x == std::string_view::npos) {
    throw ConfigError("size must be HxW, got '" + std::string(text) + "'");
  }
  return {parse_int(text.substr(0, x), "size height"),
          parse_int(text.substr(x + 1), "size width")};
}

void ModelConfig::validate() const {
  if (num_classes < 1) throw ConfigError("classes must be >= 1");
  if (p < 1) throw ConfigError("p must be >= 1");
  if (q < 1) throw ConfigError("q must be >= 1");
  if (expansion < 1) throw ConfigError("expansion must be >= 1");
  for (int c : stage_channels) {
    if (c < 1) throw ConfigError("stage channels must be >= 1");
  }
  if (input_h < 8 || input_w < 8 || input_h % 8 != 0 || input_w % 8 != 0) {
    throw ConfigError("input " + std::to_string(input_h) + "x" +
                      std::to_string(input_w) +
                      " violates the rule: height and width must be "
                      "divisible by 8 (total downsampling rate is 8)");
  }
  // Stage 2 and 3 blocks share one FPE configuration shape; validate it
  // against the narrowest expansion input.
  FpeConfig probe;
  probe.in_channels = stage_channels[0];
  probe.out_channels = stage_channels[1];
  probe.expansion = expansion;
  probe.branches = branches;
  probe.dilations = dilations;
  probe.validate();
  probe.in_channels = stage_channels[1];
  probe.validate();
  probe.in_channels = stage_channels[2];
  probe.out_channels = stage_channels[2];
  probe.validate();
}

ModelConfig parse_config(std::string_view text) {
  ModelConfig cfg;
  std::set<std::string> seen;
  bool dilations_given = false;
  int line_no = 0;
  std::istringstream lines{std::string(text)};
  std::string raw;
  while (std::getline(lines, raw)) {
    ++line_no;
    std::string_view line = raw;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) {
      line = line.substr(0, hash);
    }
    line = trim(line);
    if (line.empty()) continue;
    const std::string where = "line " + std::to_string(line_no);
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw ConfigError(where + ": syntax error, expected key=value");
    }
    const std::string key(trim(line.substr(0, eq)));
    const std::string_view value = trim(line.substr(eq + 1));
    if (value.empty()) throw ConfigError(where + ": empty value for " + key);
    if (!seen.insert(key).second) {
      throw ConfigError(where + ": duplicate key '" + key + "'");
    }
    if (key == "p") {
      cfg.p = parse_int(value, where);
    } else if (key == "q") {
      cfg.q = parse_int(value, where);
    } else if (key == "classes") {
      cfg.num_classes = parse_int(value, where);
    } else if (key == "branches") {
      cfg.branches = parse_int(value, where);
    } else if (key == "dilations") {
      cfg.dilations = parse_int_list(value, where);
      dilations_given = true;
    } else if (key == "channels") {
      auto c = parse_int_list(value, where);
      if (c.size() != 3) {
        throw ConfigError(where + ": channels needs exactly three values");
      }
      cfg.stage_channels = {c[0], c[1], c[2]};
    } else if (key == "input") {
      try {
        std::tie(cfg.input_h, cfg.input_w) = parse_size(value);
      } catch (const ConfigError& e) {
        throw ConfigError(where + ": " + e.what());
      }
    } else if (key == "add") {
      cfg.inter_branch_add = parse_flag(value, where);
    } else if (key == "longskip") {
      cfg.long_skip = parse_flag(value, where);
    } else if (key == "ca") {
      cfg.meu_channel_attention = parse_flag(value, where);
    } else if (key == "sa") {
      cfg.meu_spatial_attention = parse_flag(value, where);
    } else if (key == "decoder") {
      if (value == "meu") {
        cfg.decoder = DecoderKind::kMeu;
      } else if (value == "bilinear") {
        cfg.decoder = DecoderKind::kBilinear;
      } else {
        throw ConfigError(where + ": decoder must be meu|bilinear");
      }
    } else {
      throw ConfigError(where + ": unknown key '" + key + "'");
    }
  }
  if (!dilations_given) {
    if (cfg.branches < 1 || cfg.branches > 4) {
      throw ConfigError("branches must be 1, 2 or 4");
    }
    cfg.dilations = default_dilations(cfg.branches);
  }
  cfg.validate();
  return cfg;
}

ModelConfig load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string format_config(const ModelConfig& cfg) {
  std::ostringstream os;
  auto flag = [](bool b) { return b ? "on" : "off"; };
  os << "p=" << cfg.p << "\nq=" << cfg.q << "\nclasses=" << cfg.num_classes
     << "\nbranches=" << cfg.branches << "\ndilations=";
  for (std::size_t i = 0; i < cfg.dilations.size(); ++i) {
    os << (i ? "," : "") << cfg.dilations[i];
  }
  os << "\nchannels=" << cfg.stage_channels[0] << "," << cfg.stage_channels[1]
     << "," << cfg.stage_channels[2] << "\ninput=" << cfg.input_h << "x"
     << cfg.input_w << "\nadd=" << flag(cfg.inter_branch_add)
     << "\nlongskip=" << flag(cfg.long_skip)
     << "\nca=" << flag(cfg.meu_channel_attention)
     << "\nsa=" << flag(cfg.meu_spatial_attention) << "\ndecoder="
     << (cfg.decoder == DecoderKind::kMeu ? "meu" : "bilinear") << "\n";
  return os.str();
}

}  // namespace fpenet
