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

#include <optional>
#include <span>
#include <vector>

#include "poemtta/nn/layer.hpp"
#include "poemtta/nn/matrix.hpp"

namespace poem::nn {

// Everything backward() needs to revisit one layer.
struct LayerCache {
  Matrix input;
  Matrix output;
  // Norm layers only. For batch-norm `mean`/`var` are 1 x width (batch or
  // running statistics); for layer-norm they are rows x 1.
  Matrix normalized;
  Matrix mean;
  Matrix var;
};

struct ForwardTrace {
  std::vector<LayerCache> layers;
  StatsMode mode = StatsMode::kBatch;
};

struct ForwardResult {
  Matrix output;
  ForwardTrace trace;
};

// Runs a layer segment. Batch-norm layers use the current batch statistics
// in kBatch mode (throws DegenerateBatchError on a single row) and the
// frozen running statistics in kRunning mode.
ForwardResult forward(std::span<const Layer> layers, const Matrix& x, StatsMode mode);

// Output only, no trace retained.
Matrix infer(std::span<const Layer> layers, const Matrix& x, StatsMode mode);

// kBatch when every batch-norm layer can use batch statistics, otherwise
// kRunning (single-row batches).
StatsMode stats_mode_for(std::size_t batch_rows);

// Reverse pass over a segment previously run by forward(). Gradients are
// accumulated (+=) into every Param accepted by `filter`; other Params are
// left untouched while the gradient still flows through their layers.
// Returns dL/dx for the segment input when `need_input_grad` is set.
std::optional<Matrix> backward(std::span<Layer> layers, const ForwardTrace& trace,
                               const Matrix& upstream, const ParamFilter& filter,
                               bool need_input_grad = true);

}  // namespace poem::nn
