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

#include "poemtta/nn/passes.hpp"

#include <cmath>
#include <string>

#include "poemtta/error.hpp"

namespace poem::nn {

namespace {

Matrix dense_forward(const DenseLayer& d, const Matrix& x) {
  if (x.cols() != d.in_width()) {
    throw ShapeError("dense layer expects width " + std::to_string(d.in_width()) + ", got " +
                     std::to_string(x.cols()));
  }
  Matrix y = matmul(x, d.weight.value);
  auto b = d.bias.value.row(0);
  for (std::size_t r = 0; r < y.rows(); ++r) {
    auto yr = y.row(r);
    for (std::size_t c = 0; c < y.cols(); ++c) yr[c] += b[c];
  }
  return y;
}

Matrix relu_forward(const Matrix& x) {
  Matrix y = x;
  for (double& v : y.data()) v = v > 0.0 ? v : 0.0;
  return y;
}

// Fills cache.normalized/mean/var and returns the affine output.
Matrix norm_forward(const NormLayer& n, const Matrix& x, StatsMode mode, LayerCache& cache) {
  if (x.cols() != n.width()) {
    throw ShapeError("norm layer expects width " + std::to_string(n.width()) + ", got " +
                     std::to_string(x.cols()));
  }
  const std::size_t rows = x.rows();
  const std::size_t cols = x.cols();
  Matrix xhat(rows, cols);

  if (n.kind == NormKind::kBatch) {
    Matrix mean(1, cols);
    Matrix var(1, cols);
    if (mode == StatsMode::kBatch) {
      if (rows < 2) {
        throw DegenerateBatchError("batch-norm with batch statistics needs at least 2 rows");
      }
      const double inv_n = 1.0 / static_cast<double>(rows);
      for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t c = 0; c < cols; ++c) mean(0, c) += x(r, c);
      }
      for (std::size_t c = 0; c < cols; ++c) mean(0, c) *= inv_n;
      for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t c = 0; c < cols; ++c) {
          const double dv = x(r, c) - mean(0, c);
          var(0, c) += dv * dv;
        }
      }
      for (std::size_t c = 0; c < cols; ++c) var(0, c) *= inv_n;
    } else {
      mean = n.running_mean;
      var = n.running_var;
    }
    for (std::size_t c = 0; c < cols; ++c) {
      const double inv_std = 1.0 / std::sqrt(var(0, c) + n.eps);
      for (std::size_t r = 0; r < rows; ++r) xhat(r, c) = (x(r, c) - mean(0, c)) * inv_std;
    }
    cache.mean = std::move(mean);
    cache.var = std::move(var);
  } else {
    Matrix mean(rows, 1);
    Matrix var(rows, 1);
    const double inv_n = 1.0 / static_cast<double>(cols);
    for (std::size_t r = 0; r < rows; ++r) {
      auto xr = x.row(r);
      double m = 0.0;
      for (double v : xr) m += v;
      m *= inv_n;
      double s = 0.0;
      for (double v : xr) s += (v - m) * (v - m);
      s *= inv_n;
      mean(r, 0) = m;
      var(r, 0) = s;
      const double inv_std = 1.0 / std::sqrt(s + n.eps);
      for (std::size_t c = 0; c < cols; ++c) xhat(r, c) = (xr[c] - m) * inv_std;
    }
    cache.mean = std::move(mean);
    cache.var = std::move(var);
  }

  Matrix y(rows, cols);
  auto g = n.gamma.value.row(0);
  auto b = n.beta.value.row(0);
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) y(r, c) = g[c] * xhat(r, c) + b[c];
  }
  cache.normalized = std::move(xhat);
  return y;
}

Matrix norm_input_grad(const NormLayer& n, const LayerCache& cache, const Matrix& dxhat,
                       StatsMode mode) {
  const std::size_t rows = dxhat.rows();
  const std::size_t cols = dxhat.cols();
  const Matrix& xhat = cache.normalized;
  Matrix dx(rows, cols);

  if (n.kind == NormKind::kBatch && mode == StatsMode::kRunning) {
    for (std::size_t c = 0; c < cols; ++c) {
      const double inv_std = 1.0 / std::sqrt(cache.var(0, c) + n.eps);
      for (std::size_t r = 0; r < rows; ++r) dx(r, c) = dxhat(r, c) * inv_std;
    }
    return dx;
  }

  if (n.kind == NormKind::kBatch) {
    const double cnt = static_cast<double>(rows);
    for (std::size_t c = 0; c < cols; ++c) {
      const double inv_std = 1.0 / std::sqrt(cache.var(0, c) + n.eps);
      double sum_d = 0.0;
      double sum_dx = 0.0;
      for (std::size_t r = 0; r < rows; ++r) {
        sum_d += dxhat(r, c);
        sum_dx += dxhat(r, c) * xhat(r, c);
      }
      for (std::size_t r = 0; r < rows; ++r) {
        dx(r, c) = inv_std / cnt * (cnt * dxhat(r, c) - sum_d - xhat(r, c) * sum_dx);
      }
    }
    return dx;
  }

  const double cnt = static_cast<double>(cols);
  for (std::size_t r = 0; r < rows; ++r) {
    const double inv_std = 1.0 / std::sqrt(cache.var(r, 0) + n.eps);
    double sum_d = 0.0;
    double sum_dx = 0.0;
    for (std::size_t c = 0; c < cols; ++c) {
      sum_d += dxhat(r, c);
      sum_dx += dxhat(r, c) * xhat(r, c);
    }
    for (std::size_t c = 0; c < cols; ++c) {
      dx(r, c) = inv_std / cnt * (cnt * dxhat(r, c) - sum_d - xhat(r, c) * sum_dx);
    }
  }
  return dx;
}

}  // namespace

StatsMode stats_mode_for(std::size_t batch_rows) {
  return batch_rows >= 2 ? StatsMode::kBatch : StatsMode::kRunning;
}

ForwardResult forward(std::span<const Layer> layers, const Matrix& x, StatsMode mode) {
  if (x.empty()) throw ShapeError("forward on an empty matrix");
  ForwardResult result;
  result.trace.mode = mode;
  result.trace.layers.resize(layers.size());
  Matrix current = x;
  for (std::size_t i = 0; i < layers.size(); ++i) {
    LayerCache& cache = result.trace.layers[i];
    cache.input = current;
    if (const auto* d = std::get_if<DenseLayer>(&layers[i])) {
      current = dense_forward(*d, current);
    } else if (std::holds_alternative<ReluLayer>(layers[i])) {
      current = relu_forward(current);
    } else {
      current = norm_forward(std::get<NormLayer>(layers[i]), current, mode, cache);
    }
    cache.output = current;
  }
  result.output = std::move(current);
  return result;
}

Matrix infer(std::span<const Layer> layers, const Matrix& x, StatsMode mode) {
  if (x.empty()) throw ShapeError("forward on an empty matrix");
  Matrix current = x;
  LayerCache scratch;
  for (const Layer& layer : layers) {
    if (const auto* d = std::get_if<DenseLayer>(&layer)) {
      current = dense_forward(*d, current);
    } else if (std::holds_alternative<ReluLayer>(layer)) {
      current = relu_forward(current);
    } else {
      current = norm_forward(std::get<NormLayer>(layer), current, mode, scratch);
    }
  }
  return current;
}

std::optional<Matrix> backward(std::span<Layer> layers, const ForwardTrace& trace,
                               const Matrix& upstream, const ParamFilter& filter,
                               bool need_input_grad) {
  if (trace.layers.size() != layers.size()) {
    throw ShapeError("backward: trace has " + std::to_string(trace.layers.size()) +
                     " entries for " + std::to_string(layers.size()) + " layers");
  }
  if (layers.empty()) {
    if (need_input_grad) return upstream;
    return std::nullopt;
  }
  if (!upstream.same_shape(trace.layers.back().output)) {
    throw ShapeError("backward: upstream gradient shape does not match segment output");
  }

  Matrix grad = upstream;
  for (std::size_t k = layers.size(); k-- > 0;) {
    const LayerCache& cache = trace.layers[k];
    if (cache.input.empty()) throw ShapeError("backward: missing cached input for layer");
    const bool want_dx = need_input_grad || k > 0;

    if (auto* d = std::get_if<DenseLayer>(&layers[k])) {
      if (filter(d->weight)) d->weight.grad += matmul_tn(cache.input, grad);
      if (filter(d->bias)) d->bias.grad += column_sums(grad);
      if (want_dx) grad = matmul_nt(grad, d->weight.value);
    } else if (std::holds_alternative<ReluLayer>(layers[k])) {
      if (want_dx) {
        auto in = cache.input.data();
        auto g = grad.data();
        for (std::size_t i = 0; i < g.size(); ++i) {
          if (!(in[i] > 0.0)) g[i] = 0.0;
        }
      }
    } else {
      auto& n = std::get<NormLayer>(layers[k]);
      const Matrix& xhat = cache.normalized;
      if (xhat.empty()) throw ShapeError("backward: norm layer trace lacks statistics");
      if (filter(n.gamma)) {
        auto gg = n.gamma.grad.row(0);
        for (std::size_t r = 0; r < grad.rows(); ++r) {
          for (std::size_t c = 0; c < grad.cols(); ++c) gg[c] += grad(r, c) * xhat(r, c);
        }
      }
      if (filter(n.beta)) n.beta.grad += column_sums(grad);
      if (want_dx) {
        Matrix dxhat = grad;
        auto g = n.gamma.value.row(0);
        for (std::size_t r = 0; r < dxhat.rows(); ++r) {
          auto row = dxhat.row(r);
          for (std::size_t c = 0; c < row.size(); ++c) row[c] *= g[c];
        }
        grad = norm_input_grad(n, cache, dxhat, trace.mode);
      }
    }
  }
  if (need_input_grad) return grad;
  return std::nullopt;
}

}  // namespace poem::nn
