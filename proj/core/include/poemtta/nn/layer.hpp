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
#include <functional>
#include <optional>
#include <span>
#include <variant>
#include <vector>

#include "poemtta/nn/matrix.hpp"

namespace poem::nn {

// A learnable tensor with its gradient accumulator and momentum buffer.
// All three matrices always share one shape.
struct Param {
  Matrix value;
  Matrix grad;
  Matrix momentum_buf;
  bool trainable = false;

  Param() = default;
  explicit Param(Matrix v, bool trainable = false);

  void zero_grad() { grad.fill(0.0); }
};

enum class StatsMode { kBatch, kRunning };
enum class NormKind { kBatch, kLayer };

inline constexpr double kNormEps = 1e-5;

// y = x * weight + bias, weight is in x out.
struct DenseLayer {
  Param weight;
  Param bias;

  std::size_t in_width() const { return weight.value.rows(); }
  std::size_t out_width() const { return weight.value.cols(); }
};

struct ReluLayer {};

// Batch-norm normalizes each column over the rows of the batch (or by the
// frozen running statistics); layer-norm normalizes each row over its
// columns. Variance uses the population convention (divide by n).
struct NormLayer {
  NormKind kind = NormKind::kBatch;
  Param gamma;
  Param beta;
  Matrix running_mean;
  Matrix running_var;
  double eps = kNormEps;

  std::size_t width() const { return gamma.value.cols(); }
};

using Layer = std::variant<DenseLayer, ReluLayer, NormLayer>;

DenseLayer make_dense(std::size_t in, std::size_t out);
NormLayer make_norm(NormKind kind, std::size_t width, double eps = kNormEps);

// Widths are unconstrained (nullopt) for relu.
std::optional<std::size_t> input_width(const Layer& layer);
std::optional<std::size_t> output_width(const Layer& layer);

// Throws ShapeError if consecutive widths do not chain. Returns the output
// width of the segment given its input width.
std::size_t check_chain(std::span<const Layer> layers, std::size_t in_width);

std::vector<Param*> params_of(std::span<Layer> layers);
std::vector<const Param*> const_params_of(std::span<const Layer> layers);

// Freezes every parameter, then marks norm gamma/beta trainable if asked.
void set_trainable_norm_affine_only(std::span<Layer> layers, bool norm_trainable);

bool has_norm_layer(std::span<const Layer> layers);
bool has_batch_norm(std::span<const Layer> layers);

void zero_grads(std::span<Layer> layers);

using ParamFilter = std::function<bool(const Param&)>;

ParamFilter accept_trainable();
ParamFilter accept_none();

// Ordered layer stack with a split point between the shallow layers
// [0, split_index) and the branch layers [split_index, end).
struct Network {
  std::vector<Layer> layers;
  std::size_t split_index = 1;
  std::size_t num_classes = 0;
  std::size_t input_width = 0;

  std::span<const Layer> shallow() const { return {layers.data(), split_index}; }
  std::span<const Layer> branch() const {
    return {layers.data() + split_index, layers.size() - split_index};
  }

  // Widths chain, final width is num_classes, 0 < split_index < size.
  void validate() const;
};

}  // namespace poem::nn
