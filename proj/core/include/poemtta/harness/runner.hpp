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

#include <cstdint>
#include <vector>

#include "poemtta/harness/metrics.hpp"
#include "poemtta/harness/run_config.hpp"
#include "poemtta/nn/layer.hpp"
#include "poemtta/scenarios/shift.hpp"
#include "poemtta/scenarios/task.hpp"

namespace poem::harness {

// Trained source model plus the clean held-out set of one seed.
struct SourceModel {
  nn::Network network;
  scenarios::LabeledSet test;
  double train_accuracy = 0.0;
  double clean_accuracy = 0.0;  // frozen model, running statistics
};

SourceModel prepare_source(const RunConfig& cfg, std::uint64_t seed);

// Shift sets for the configured regime: one entry per cell.
std::vector<std::vector<scenarios::ShiftSpec>> shift_cells(const RunConfig& cfg);

// Drives one method over one stream. Labels are revealed only after each
// adaptation call returns.
CellResult run_cell(const RunConfig& cfg, const SourceModel& source, tta::Method method,
                    const std::vector<scenarios::ShiftSpec>& shifts, std::uint64_t seed);

// Full grid in memory, seed-major. The source model is trained once per seed.
ExperimentResult run_experiment(const RunConfig& cfg);

// As run_experiment, repeated for every entropy factor (each > 0).
ExperimentResult sweep_threshold(const RunConfig& cfg, const std::vector<double>& factors);

// Runs and, when cfg.out is set, persists metrics and timing atomically.
ExperimentResult run_and_save(const RunConfig& cfg, const std::vector<double>& factors = {});

}  // namespace poem::harness
