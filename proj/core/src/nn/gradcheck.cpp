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

#include "poemtta/nn/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "poemtta/error.hpp"
#include "poemtta/nn/loss.hpp"
#include "poemtta/nn/passes.hpp"
#include "poemtta/seed.hpp"

namespace poem::nn {

Matrix finite_diff_grad(const std::function<double()>& loss_fn, Param& param, double h) {
  if (!(h > 0.0)) throw ContractError("finite difference step must be positive");
  Matrix out(param.value.rows(), param.value.cols());
  auto values = param.value.data();
  auto result = out.data();
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double original = values[i];
    values[i] = original + h;
    const double up = loss_fn();
    values[i] = original - h;
    const double down = loss_fn();
    values[i] = original;
    result[i] = (up - down) / (2.0 * h);
  }
  return out;
}

bool grads_agree(double analytic, double numeric, double rel_tol, double abs_floor) {
  const double diff = std::abs(analytic - numeric);
  if (diff <= abs_floor) return true;
  const double scale = std::max(std::abs(analytic), std::abs(numeric));
  return diff <= rel_tol * scale;
}

namespace {

struct Candidate {
  std::vector<Layer> shallow;
  std::vector<Layer> branch;
  Matrix x;
  std::vector<std::size_t> labels;
  LossKind loss = LossKind::kEntropy;
  StatsMode mode = StatsMode::kBatch;
  std::size_t dense_layers = 0;
};

Candidate random_candidate(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> width_dist(2, 8);
  std::uniform_int_distribution<std::size_t> depth_dist(1, 4);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> normal(0.0, 1.0);

  Candidate c;
  c.dense_layers = depth_dist(rng);
  c.mode = unit(rng) < 0.75 ? StatsMode::kBatch : StatsMode::kRunning;
  c.loss = unit(rng) < 0.5 ? LossKind::kEntropy : LossKind::kCrossEntropy;
  const std::size_t rows = c.mode == StatsMode::kBatch
                               ? std::uniform_int_distribution<std::size_t>(2, 8)(rng)
                               : std::uniform_int_distribution<std::size_t>(1, 8)(rng);
  const std::size_t in = width_dist(rng);
  const std::size_t classes = width_dist(rng);

  std::vector<Layer> layers;
  std::size_t width = in;
  for (std::size_t k = 0; k < c.dense_layers; ++k) {
    const bool last = k + 1 == c.dense_layers;
    const std::size_t out = last ? classes : width_dist(rng);
    DenseLayer d = make_dense(width, out);
    const double scale = 1.0 / std::sqrt(static_cast<double>(width));
    for (double& w : d.weight.value.data()) w = normal(rng) * scale;
    for (double& b : d.bias.value.data()) b = 0.3 * normal(rng);
    layers.emplace_back(std::move(d));
    // A norm layer after every dense layer (including the last with some
    // probability) so both norm kinds appear in both segments.
    if (!last || unit(rng) < 0.3) {
      NormLayer n = make_norm(unit(rng) < 0.5 ? NormKind::kBatch : NormKind::kLayer, out);
      for (double& g : n.gamma.value.data()) g = 0.5 + unit(rng);
      for (double& b : n.beta.value.data()) b = unit(rng) - 0.5;
      for (double& m : n.running_mean.data()) m = 0.5 * normal(rng);
      for (double& v : n.running_var.data()) v = 0.5 + unit(rng);
      layers.emplace_back(std::move(n));
    }
    if (!last) layers.emplace_back(ReluLayer{});
    width = out;
  }
  // Split anywhere; an empty shallow or branch segment is allowed here.
  const std::size_t split = std::uniform_int_distribution<std::size_t>(0, layers.size())(rng);
  for (std::size_t i = 0; i < layers.size(); ++i) {
    auto& seg = i < split ? c.shallow : c.branch;
    seg.push_back(std::move(layers[i]));
  }
  for (Param* p : params_of(c.shallow)) p->trainable = true;
  for (Param* p : params_of(c.branch)) p->trainable = true;

  c.x = Matrix(rows, in);
  for (double& v : c.x.data()) v = normal(rng);
  std::uniform_int_distribution<std::size_t> label_dist(0, classes - 1);
  c.labels.resize(rows);
  for (auto& l : c.labels) l = label_dist(rng);
  return c;
}

double min_norm_variance(const ForwardTrace& trace, std::span<const Layer> layers) {
  double m = INFINITY;
  for (std::size_t i = 0; i < layers.size(); ++i) {
    if (!std::holds_alternative<NormLayer>(layers[i])) continue;
    for (double v : trace.layers[i].var.data()) m = std::min(m, v);
  }
  return m;
}

double min_relu_input(const ForwardTrace& trace, std::span<const Layer> layers) {
  double m = INFINITY;
  for (std::size_t i = 0; i < layers.size(); ++i) {
    if (!std::holds_alternative<ReluLayer>(layers[i])) continue;
    for (double v : trace.layers[i].input.data()) m = std::min(m, std::abs(v));
  }
  return m;
}

std::vector<std::size_t> all_rows(std::size_t n) {
  std::vector<std::size_t> rows(n);
  for (std::size_t i = 0; i < n; ++i) rows[i] = i;
  return rows;
}

double candidate_loss(const Candidate& c) {
  const Matrix phi = c.shallow.empty() ? c.x : infer(c.shallow, c.x, c.mode);
  const Matrix z = c.branch.empty() ? phi : infer(c.branch, phi, c.mode);
  const Matrix p = softmax(z);
  const auto rows = all_rows(p.rows());
  return c.loss == LossKind::kEntropy ? mean_entropy(p, rows)
                                      : mean_cross_entropy(p, rows, c.labels);
}

}  // namespace

GradcheckReport run_gradcheck(const GradcheckOptions& options) {
  GradcheckReport report;
  std::uint64_t attempt = 0;
  while (report.trials.size() < options.trials) {
    const std::uint64_t seed = derive_seed(options.seed, attempt++);
    Candidate c = random_candidate(seed);

    ForwardResult g = forward(c.shallow, c.x, c.mode);
    const Matrix& phi = c.shallow.empty() ? c.x : g.output;
    ForwardResult b = forward(c.branch, phi, c.mode);
    const Matrix& z = c.branch.empty() ? phi : b.output;

    // Central differences at step h assume the loss is smooth on that scale.
    // Draw again near a relu kink or a normalization whose variance is within
    // a few orders of eps (curvature there grows like 1/var).
    if (std::min(min_relu_input(g.trace, c.shallow), min_relu_input(b.trace, c.branch)) < 1e-4 ||
        std::min(min_norm_variance(g.trace, c.shallow), min_norm_variance(b.trace, c.branch)) <
            1e-3) {
      continue;
    }

    const Matrix p = softmax(z);
    const auto rows = all_rows(p.rows());
    const Matrix dp = c.loss == LossKind::kEntropy ? mean_entropy_grad(p, rows)
                                                   : mean_cross_entropy_grad(p, rows, c.labels);
    const Matrix dz = softmax_backward(p, dp);
    auto dphi = backward(c.branch, b.trace, dz, accept_trainable(), true);
    backward(c.shallow, g.trace, *dphi, accept_trainable(), false);

    GradcheckTrial trial;
    trial.seed = seed;
    trial.dense_layers = c.dense_layers;
    trial.batch_rows = c.x.rows();
    trial.loss = c.loss;
    trial.mode = c.mode;

    auto check_segment = [&](std::vector<Layer>& seg) {
      for (Param* param : params_of(seg)) {
        const Matrix numeric =
            finite_diff_grad([&] { return candidate_loss(c); }, *param, options.step);
        auto a = param->grad.data();
        auto n = numeric.data();
        for (std::size_t i = 0; i < a.size(); ++i) {
          ++trial.entries;
          const double diff = std::abs(a[i] - n[i]);
          const double scale = std::max(std::abs(a[i]), std::abs(n[i]));
          if (diff > options.abs_floor && scale > 0.0) {
            trial.max_rel_err = std::max(trial.max_rel_err, diff / scale);
          }
          if (!grads_agree(a[i], n[i], options.rel_tol, options.abs_floor)) ++trial.failures;
        }
      }
    };
    check_segment(c.shallow);
    check_segment(c.branch);

    report.entries += trial.entries;
    report.failures += trial.failures;
    report.max_rel_err = std::max(report.max_rel_err, trial.max_rel_err);
    report.trials.push_back(trial);
  }
  return report;
}

}  // namespace poem::nn
