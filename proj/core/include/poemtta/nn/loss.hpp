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
#include <span>
#include <vector>

#include "poemtta/nn/matrix.hpp"

namespace poem::nn {

// Floor applied to probabilities inside every logarithm.
inline constexpr double kProbClamp = 1e-12;

// Row-wise softmax with max subtraction.
Matrix softmax(const Matrix& logits);

// Given probs = softmax(z) and dL/dprobs, returns dL/dz.
Matrix softmax_backward(const Matrix& probs, const Matrix& dprobs);

// Per-row Shannon entropy -sum p ln p, with p clamped at kProbClamp. Throws
// ContractError if a row is not a distribution (negative entry or sum off
// by more than 1e-9).
std::vector<double> entropy_rows(const Matrix& probs);

// Mean of -ln p[label] over rows; `onehot` must be one-hot per row.
double cross_entropy(const Matrix& probs, const Matrix& onehot);

Matrix one_hot(std::span<const std::size_t> labels, std::size_t num_classes);

// Rowwise argmax, ties resolved to the lowest index.
std::vector<std::size_t> argmax_rows(const Matrix& m);

// Mean entropy over the listed rows, and its gradient with respect to the
// probabilities (zero on unlisted rows).
double mean_entropy(const Matrix& probs, std::span<const std::size_t> rows);
Matrix mean_entropy_grad(const Matrix& probs, std::span<const std::size_t> rows);

// Mean of -ln p[label] over the listed rows, labels[i] paired with rows[i],
// and its gradient with respect to the probabilities.
double mean_cross_entropy(const Matrix& probs, std::span<const std::size_t> rows,
                          std::span<const std::size_t> labels);
Matrix mean_cross_entropy_grad(const Matrix& probs, std::span<const std::size_t> rows,
                               std::span<const std::size_t> labels);

}  // namespace poem::nn
