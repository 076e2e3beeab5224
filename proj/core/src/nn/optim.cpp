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

#include "poemtta/nn/optim.hpp"

#include <cmath>

#include "poemtta/error.hpp"

namespace poem::nn {

void sgd_step(std::span<Param* const> params, double lr, double momentum) {
  if (!(lr >= 0.0)) throw ContractError("learning rate must be non-negative");
  if (!(momentum >= 0.0 && momentum < 1.0)) throw ContractError("momentum must lie in [0, 1)");
  for (Param* p : params) {
    if (!p->trainable) continue;
    auto value = p->value.data();
    auto grad = p->grad.data();
    auto buf = p->momentum_buf.data();
    for (std::size_t i = 0; i < value.size(); ++i) {
      buf[i] = momentum * buf[i] + grad[i];
      value[i] -= lr * buf[i];
      grad[i] = 0.0;
    }
  }
}

double grad_norm(std::span<Param* const> params) {
  double acc = 0.0;
  for (const Param* p : params) {
    if (p->trainable) acc += squared_norm(p->grad);
  }
  return std::sqrt(acc);
}

}  // namespace poem::nn
