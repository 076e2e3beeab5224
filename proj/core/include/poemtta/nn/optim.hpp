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

#include <span>

#include "poemtta/nn/layer.hpp"

namespace poem::nn {

// SGD with heavy-ball momentum, no dampening, no Nesterov:
//   buf <- momentum * buf + grad;  value <- value - lr * buf;  grad <- 0.
// Params with trainable == false are skipped entirely.
void sgd_step(std::span<Param* const> params, double lr, double momentum);

// Euclidean norm of the concatenated gradients of the trainable params.
double grad_norm(std::span<Param* const> params);

}  // namespace poem::nn
