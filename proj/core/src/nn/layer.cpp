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

#include "poemtta/nn/layer.hpp"

#include <string>

#include "poemtta/error.hpp"

namespace poem::nn {

namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

}  // namespace

Param::Param(Matrix v, bool trainable_flag)
    : value(std::move(v)),
      grad(value.rows(), value.cols()),
      momentum_buf(value.rows(), value.cols()),
      trainable(trainable_flag) {}

DenseLayer make_dense(std::size_t in, std::size_t out) {
  return DenseLayer{Param(Matrix(in, out)), Param(Matrix(1, out))};
}

NormLayer make_norm(NormKind kind, std::size_t width, double eps) {
  if (!(eps > 0.0)) throw ContractError("norm eps must be positive");
  NormLayer n;
  n.kind = kind;
  n.gamma = Param(Matrix(1, width, 1.0));
  n.beta = Param(Matrix(1, width, 0.0));
  n.running_mean = Matrix(1, width, 0.0);
  n.running_var = Matrix(1, width, 1.0);
  n.eps = eps;
  return n;
}

std::optional<std::size_t> input_width(const Layer& layer) {
  return std::visit(Overloaded{
                        [](const DenseLayer& d) -> std::optional<std::size_t> { return d.in_width(); },
                        [](const ReluLayer&) -> std::optional<std::size_t> { return std::nullopt; },
                        [](const NormLayer& n) -> std::optional<std::size_t> { return n.width(); },
                    },
                    layer);
}

std::optional<std::size_t> output_width(const Layer& layer) {
  return std::visit(Overloaded{
                        [](const DenseLayer& d) -> std::optional<std::size_t> { return d.out_width(); },
                        [](const ReluLayer&) -> std::optional<std::size_t> { return std::nullopt; },
                        [](const NormLayer& n) -> std::optional<std::size_t> { return n.width(); },
                    },
                    layer);
}

std::size_t check_chain(std::span<const Layer> layers, std::size_t in_width) {
  std::size_t width = in_width;
  for (std::size_t i = 0; i < layers.size(); ++i) {
    if (auto w = input_width(layers[i]); w && *w != width) {
      throw ShapeError("layer " + std::to_string(i) + " expects width " + std::to_string(*w) +
                       " but receives " + std::to_string(width));
    }
    if (auto w = output_width(layers[i])) width = *w;
  }
  return width;
}

std::vector<Param*> params_of(std::span<Layer> layers) {
  std::vector<Param*> out;
  for (Layer& layer : layers) {
    if (auto* d = std::get_if<DenseLayer>(&layer)) {
      out.push_back(&d->weight);
      out.push_back(&d->bias);
    } else if (auto* n = std::get_if<NormLayer>(&layer)) {
      out.push_back(&n->gamma);
      out.push_back(&n->beta);
    }
  }
  return out;
}

std::vector<const Param*> const_params_of(std::span<const Layer> layers) {
  std::vector<const Param*> out;
  for (const Layer& layer : layers) {
    if (const auto* d = std::get_if<DenseLayer>(&layer)) {
      out.push_back(&d->weight);
      out.push_back(&d->bias);
    } else if (const auto* n = std::get_if<NormLayer>(&layer)) {
      out.push_back(&n->gamma);
      out.push_back(&n->beta);
    }
  }
  return out;
}

void set_trainable_norm_affine_only(std::span<Layer> layers, bool norm_trainable) {
  for (Layer& layer : layers) {
    if (auto* d = std::get_if<DenseLayer>(&layer)) {
      d->weight.trainable = false;
      d->bias.trainable = false;
    } else if (auto* n = std::get_if<NormLayer>(&layer)) {
      n->gamma.trainable = norm_trainable;
      n->beta.trainable = norm_trainable;
    }
  }
}

bool has_norm_layer(std::span<const Layer> layers) {
  for (const Layer& layer : layers) {
    if (std::holds_alternative<NormLayer>(layer)) return true;
  }
  return false;
}

bool has_batch_norm(std::span<const Layer> layers) {
  for (const Layer& layer : layers) {
    if (const auto* n = std::get_if<NormLayer>(&layer); n && n->kind == NormKind::kBatch) {
      return true;
    }
  }
  return false;
}

void zero_grads(std::span<Layer> layers) {
  for (Param* p : params_of(layers)) p->zero_grad();
}

ParamFilter accept_trainable() {
  return [](const Param& p) { return p.trainable; };
}

ParamFilter accept_none() {
  return [](const Param&) { return false; };
}

void Network::validate() const {
  if (layers.empty()) throw ShapeError("network has no layers");
  if (split_index == 0 || split_index >= layers.size()) {
    throw ShapeError("split index " + std::to_string(split_index) +
                     " must lie strictly inside (0, " + std::to_string(layers.size()) + ")");
  }
  if (num_classes < 2) throw ShapeError("network needs at least two classes");
  const std::size_t out = check_chain(layers, input_width);
  if (out != num_classes) {
    throw ShapeError("final width " + std::to_string(out) + " differs from class count " +
                     std::to_string(num_classes));
  }
}

}  // namespace poem::nn
