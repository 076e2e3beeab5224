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

#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "poemtta/scenarios/shift.hpp"
#include "poemtta/scenarios/stream.hpp"
#include "poemtta/scenarios/task.hpp"
#include "poemtta/scenarios/training.hpp"
#include "poemtta/tta/config.hpp"

namespace poem::harness {

struct TaskParams {
  std::size_t num_classes = 10;
  std::size_t dim = 32;
  std::size_t n_train = 4000;
  std::size_t n_test = 2048;
  double separation = scenarios::kDefaultSeparation;
};

// Adaptation learning rate of the default grid, for both parameter groups.
inline constexpr double kDefaultAdaptLr = 0.05;

// One experiment grid: methods x shift cells x seeds. Non-mixed regimes run
// one cell per entry of `shifts` (a clean stream when it is empty); the
// mixed regime runs every shift inside a single stream.
struct RunConfig {
  TaskParams task;
  std::string arch;
  tta::AdaptConfig adapt;
  std::vector<tta::Method> methods;
  scenarios::Regime regime = scenarios::Regime::kStandard;
  std::size_t batch_size = 64;
  std::vector<scenarios::ShiftKind> shifts;
  int severity = 5;
  double shift_magnitude = 1.0;
  std::vector<std::uint64_t> seeds;
  std::size_t train_epochs = 4;
  double train_lr = 0.05;
  bool gradient_bands = false;
  std::string out;

  // Default grid: 4 methods, 4 shift kinds at severity 5, seeds 0..9,
  // adaptation learning rate kDefaultAdaptLr.
  static RunConfig defaults();

  // Throws ConfigError; nothing is run or written for an invalid config.
  void validate() const;
};

// Keys (values in parentheses):
//   classes dim n_train n_test separation (task)
//   arch  method (list)  scenario  shift (list | all | none)  severity
//   magnitude  batch_size  entropy_factor  max_iters  alpha  lr_shallow
//   lr_adapt  momentum  seed (list, ranges a-b allowed)  epochs  train_lr
//   bands (true | false)  out
// Lists are comma-separated. Unknown keys throw ConfigError.
void apply_setting(RunConfig& cfg, std::string_view key, std::string_view value);

// "key=value" lines; blank lines and lines starting with '#' are skipped.
void apply_config_text(RunConfig& cfg, std::string_view text);
void apply_config_file(RunConfig& cfg, const std::string& path);

// "classes=10,dim=32" style task overrides.
void apply_task_setting(TaskParams& task, std::string_view list);

std::vector<std::uint64_t> parse_seed_list(std::string_view text);

}  // namespace poem::harness
