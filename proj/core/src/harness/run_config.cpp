// Copyright 2026 The poemtta Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "poemtta/harness/run_config.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>

#include "poemtta/error.hpp"
#include "poemtta/nn/arch.hpp"

namespace poem::harness {

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find(sep, start);
    out.push_back(trim(s.substr(start, pos == std::string_view::npos ? pos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

std::string quoted(std::string_view key, std::string_view value) {
  return std::string(key) + "='" + std::string(value) + "'";
}

template <typename T>
T parse_number(std::string_view key, std::string_view text) {
  T v{};
  const auto* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, v);
  if (text.empty() || ec != std::errc{} || ptr != end) {
    throw ConfigError("invalid value " + quoted(key, text));
  }
  return v;
}

std::size_t parse_count(std::string_view key, std::string_view text) {
  return parse_number<std::size_t>(key, text);
}

double parse_real(std::string_view key, std::string_view text) {
  return parse_number<double>(key, text);
}

bool parse_bool(std::string_view key, std::string_view text) {
  if (text == "true" || text == "1" || text == "yes") return true;
  if (text == "false" || text == "0" || text == "no") return false;
  throw ConfigError("invalid boolean " + quoted(key, text));
}

}  // namespace

RunConfig RunConfig::defaults() {
  RunConfig c;
  c.arch = std::string(nn::kDefaultArch);
  c.methods = {tta::Method::kNoAdapt, tta::Method::kTent, tta::Method::kThresholdTent,
               tta::Method::kPoem};
  c.shifts.assign(std::begin(scenarios::kAllShiftKinds), std::end(scenarios::kAllShiftKinds));
  for (std::uint64_t s = 0; s < 10; ++s) c.seeds.push_back(s);
  c.adapt.lr_shallow = kDefaultAdaptLr;
  c.adapt.lr_adapt = kDefaultAdaptLr;
  return c;
}

void RunConfig::validate() const {
  if (task.num_classes < 2 || task.dim < 2) throw ConfigError("task needs classes >= 2, dim >= 2");
  if (task.n_train < 10 * task.num_classes) {
    throw ConfigError("n_train must be at least 10 x classes");
  }
  if (task.n_test < task.num_classes) throw ConfigError("n_test must be at least classes");
  if (!(task.separation > 0.0)) throw ConfigError("separation must be positive");
  (void)nn::ArchSpec::parse(arch);
  adapt.validate();
  if (methods.empty()) throw ConfigError("at least one method is required");
  if (seeds.empty()) throw ConfigError("at least one seed is required");
  if (batch_size == 0 || batch_size > task.n_test) {
    throw ConfigError("batch_size must lie in [1, n_test]");
  }
  if (train_epochs == 0 || !(train_lr >= 0.0)) throw ConfigError("invalid training options");
  scenarios::StreamScenario probe;
  probe.regime = regime;
  probe.batch_size = batch_size;
  for (auto kind : shifts) probe.shifts.push_back({kind, severity, shift_magnitude});
  if (regime != scenarios::Regime::kMixedShift && probe.shifts.size() > 1) probe.shifts.resize(1);
  if (probe.shifts.empty()) {
    scenarios::ShiftSpec{scenarios::ShiftKind::kGaussNoise, severity, shift_magnitude}.validate();
  }
  probe.validate();
}

std::vector<std::uint64_t> parse_seed_list(std::string_view text) {
  std::vector<std::uint64_t> seeds;
  for (std::string_view item : split(text, ',')) {
    const auto dash = item.find('-');
    if (dash == std::string_view::npos) {
      seeds.push_back(parse_number<std::uint64_t>("seed", item));
      continue;
    }
    const auto lo = parse_number<std::uint64_t>("seed", trim(item.substr(0, dash)));
    const auto hi = parse_number<std::uint64_t>("seed", trim(item.substr(dash + 1)));
    if (hi < lo || hi - lo > 100000) throw ConfigError("invalid seed range " + quoted("seed", item));
    for (std::uint64_t s = lo; s <= hi; ++s) seeds.push_back(s);
  }
  return seeds;
}

void apply_task_setting(TaskParams& task, std::string_view list) {
  for (std::string_view item : split(list, ',')) {
    const auto eq = item.find('=');
    if (eq == std::string_view::npos) throw ConfigError("task entry needs key=value: '" + std::string(item) + "'");
    const auto key = trim(item.substr(0, eq));
    const auto value = trim(item.substr(eq + 1));
    if (key == "classes") task.num_classes = parse_count(key, value);
    else if (key == "dim") task.dim = parse_count(key, value);
    else if (key == "n_train") task.n_train = parse_count(key, value);
    else if (key == "n_test") task.n_test = parse_count(key, value);
    else if (key == "separation") task.separation = parse_real(key, value);
    else throw ConfigError("unknown task key '" + std::string(key) + "'");
  }
}

void apply_setting(RunConfig& cfg, std::string_view key, std::string_view value) {
  key = trim(key);
  value = trim(value);
  if (key == "classes") cfg.task.num_classes = parse_count(key, value);
  else if (key == "dim") cfg.task.dim = parse_count(key, value);
  else if (key == "n_train") cfg.task.n_train = parse_count(key, value);
  else if (key == "n_test") cfg.task.n_test = parse_count(key, value);
  else if (key == "separation") cfg.task.separation = parse_real(key, value);
  else if (key == "task") apply_task_setting(cfg.task, value);
  else if (key == "arch") {
    if (value == "default") cfg.arch = std::string(nn::kDefaultArch);
    else if (value == "layernorm") cfg.arch = std::string(nn::kLayerNormArch);
    else cfg.arch = std::string(value);
  } else if (key == "method") {
    cfg.methods.clear();
    for (auto m : split(value, ',')) cfg.methods.push_back(tta::parse_method(m));
  } else if (key == "scenario") {
    cfg.regime = scenarios::parse_regime(value);
  } else if (key == "shift") {
    cfg.shifts.clear();
    if (value == "all") {
      cfg.shifts.assign(std::begin(scenarios::kAllShiftKinds), std::end(scenarios::kAllShiftKinds));
    } else if (value != "none") {
      for (auto s : split(value, ',')) cfg.shifts.push_back(scenarios::parse_shift_kind(s));
    }
  } else if (key == "severity") {
    cfg.severity = parse_number<int>(key, value);
  } else if (key == "magnitude") {
    cfg.shift_magnitude = parse_real(key, value);
  } else if (key == "batch_size") {
    cfg.batch_size = parse_count(key, value);
  } else if (key == "entropy_factor") {
    cfg.adapt.entropy_factor = parse_real(key, value);
  } else if (key == "max_iters") {
    cfg.adapt.max_iters = parse_count(key, value);
  } else if (key == "alpha") {
    cfg.adapt.fusion_alpha = parse_real(key, value);
  } else if (key == "lr_shallow") {
    cfg.adapt.lr_shallow = parse_real(key, value);
  } else if (key == "lr_adapt") {
    cfg.adapt.lr_adapt = parse_real(key, value);
  } else if (key == "momentum") {
    cfg.adapt.momentum = parse_real(key, value);
  } else if (key == "seed") {
    cfg.seeds = parse_seed_list(value);
  } else if (key == "epochs") {
    cfg.train_epochs = parse_count(key, value);
  } else if (key == "train_lr") {
    cfg.train_lr = parse_real(key, value);
  } else if (key == "bands") {
    cfg.gradient_bands = parse_bool(key, value);
  } else if (key == "out") {
    cfg.out = std::string(value);
  } else {
    throw ConfigError("unknown config key '" + std::string(key) + "'");
  }
}

void apply_config_text(RunConfig& cfg, std::string_view text) {
  std::size_t line_no = 0;
  for (std::string_view line : split(text, '\n')) {
    ++line_no;
    if (line.empty() || line.front() == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw ConfigError("config line " + std::to_string(line_no) + " is not key=value");
    }
    apply_setting(cfg, line.substr(0, eq), line.substr(eq + 1));
  }
}

void apply_config_file(RunConfig& cfg, const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  apply_config_text(cfg, buf.str());
}

}  // namespace poem::harness
