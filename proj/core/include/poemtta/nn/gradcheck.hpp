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
#include <functional>
#include <string>
#include <vector>

#include "poemtta/nn/layer.hpp"
#include "poemtta/nn/matrix.hpp"

namespace poem::nn {

// Central-difference estimate of d loss / d param, entry by entry. The
// parameter is restored bitwise after each probe.
Matrix finite_diff_grad(const std::function<double()>& loss_fn, Param& param, double h);

enum class LossKind { kEntropy, kCrossEntropy };

// Agreement rule used by the oracle suite: relative error <= rel_tol, or
// absolute error <= abs_floor.
bool grads_agree(double analytic, double numeric, double rel_tol, double abs_floor);

struct GradcheckOptions {
  std::size_t trials = 100;
  std::uint64_t seed = 20240901;
  double step = 1e-5;
  double rel_tol = 1e-4;
  double abs_floor = 1e-8;
};

struct GradcheckTrial {
  std::uint64_t seed = 0;
  std::size_t dense_layers = 0;
  std::size_t batch_rows = 0;
  LossKind loss = LossKind::kEntropy;
  StatsMode mode = StatsMode::kBatch;
  std::size_t entries = 0;
  std::size_t failures = 0;
  double max_rel_err = 0.0;
};

struct GradcheckReport {
  std::vector<GradcheckTrial> trials;
  std::size_t entries = 0;
  std::size_t failures = 0;
  double max_rel_err = 0.0;  // over entries whose absolute error exceeds the floor

  bool passed() const { return failures == 0 && !trials.empty(); }
};

// Builds seeded random two-segment networks (1-4 dense layers, widths <= 8,
// batch- or layer-norm, relu), random batches and a random loss kind, and
// compares backward() with finite_diff_grad() on every parameter entry.
GradcheckReport run_gradcheck(const GradcheckOptions& options);

}  // namespace poem::nn
