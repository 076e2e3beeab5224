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

#include "poemtta/nn/loss.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "poemtta/error.hpp"

namespace poem::nn {

namespace {

double clamp_prob(double p) { return p < kProbClamp ? kProbClamp : p; }

void check_distribution(std::span<const double> row, std::size_t index) {
  double sum = 0.0;
  for (double p : row) {
    if (!(p >= 0.0) || !std::isfinite(p)) {
      throw ContractError("row " + std::to_string(index) + " has a negative or non-finite entry");
    }
    sum += p;
  }
  if (std::abs(sum - 1.0) > 1e-9) {
    throw ContractError("row " + std::to_string(index) + " sums to " + std::to_string(sum));
  }
}

void check_rows(std::span<const std::size_t> rows, std::size_t n) {
  for (std::size_t r : rows) {
    if (r >= n) throw ContractError("row index out of range");
  }
}

}  // namespace

Matrix softmax(const Matrix& logits) {
  if (!logits.all_finite()) throw ContractError("softmax on non-finite logits");
  Matrix out(logits.rows(), logits.cols());
  for (std::size_t r = 0; r < logits.rows(); ++r) {
    auto z = logits.row(r);
    auto p = out.row(r);
    const double mx = *std::max_element(z.begin(), z.end());
    double sum = 0.0;
    for (std::size_t c = 0; c < z.size(); ++c) {
      p[c] = std::exp(z[c] - mx);
      sum += p[c];
    }
    for (double& v : p) v /= sum;
  }
  return out;
}

Matrix softmax_backward(const Matrix& probs, const Matrix& dprobs) {
  if (!probs.same_shape(dprobs)) throw ShapeError("softmax_backward: shape mismatch");
  Matrix dz(probs.rows(), probs.cols());
  for (std::size_t r = 0; r < probs.rows(); ++r) {
    auto p = probs.row(r);
    auto g = dprobs.row(r);
    double dot = 0.0;
    for (std::size_t c = 0; c < p.size(); ++c) dot += p[c] * g[c];
    auto out = dz.row(r);
    for (std::size_t c = 0; c < p.size(); ++c) out[c] = p[c] * (g[c] - dot);
  }
  return dz;
}

std::vector<double> entropy_rows(const Matrix& probs) {
  std::vector<double> e(probs.rows());
  for (std::size_t r = 0; r < probs.rows(); ++r) {
    auto row = probs.row(r);
    check_distribution(row, r);
    double h = 0.0;
    for (double p : row) {
      const double q = clamp_prob(p);
      h -= q * std::log(q);
    }
    // Clamping can push a one-hot row a hair below zero.
    e[r] = h < 0.0 ? 0.0 : h;
  }
  return e;
}

double cross_entropy(const Matrix& probs, const Matrix& onehot) {
  if (!probs.same_shape(onehot)) throw ShapeError("cross_entropy: shape mismatch");
  double total = 0.0;
  for (std::size_t r = 0; r < probs.rows(); ++r) {
    auto y = onehot.row(r);
    std::size_t hot = y.size();
    for (std::size_t c = 0; c < y.size(); ++c) {
      if (y[c] == 1.0) {
        if (hot != y.size()) throw ContractError("label row has more than one hot entry");
        hot = c;
      } else if (y[c] != 0.0) {
        throw ContractError("label row is not one-hot");
      }
    }
    if (hot == y.size()) throw ContractError("label row has no hot entry");
    total -= std::log(clamp_prob(probs(r, hot)));
  }
  return total / static_cast<double>(probs.rows());
}

Matrix one_hot(std::span<const std::size_t> labels, std::size_t num_classes) {
  Matrix m(labels.size(), num_classes);
  for (std::size_t r = 0; r < labels.size(); ++r) {
    if (labels[r] >= num_classes) throw ContractError("label exceeds class count");
    m(r, labels[r]) = 1.0;
  }
  return m;
}

std::vector<std::size_t> argmax_rows(const Matrix& m) {
  std::vector<std::size_t> out(m.rows());
  for (std::size_t r = 0; r < m.rows(); ++r) {
    auto row = m.row(r);
    out[r] = static_cast<std::size_t>(std::max_element(row.begin(), row.end()) - row.begin());
  }
  return out;
}

double mean_entropy(const Matrix& probs, std::span<const std::size_t> rows) {
  if (rows.empty()) throw ContractError("mean_entropy over an empty row set");
  check_rows(rows, probs.rows());
  double total = 0.0;
  for (std::size_t r : rows) {
    for (double p : probs.row(r)) {
      const double q = clamp_prob(p);
      total -= q * std::log(q);
    }
  }
  return total / static_cast<double>(rows.size());
}

Matrix mean_entropy_grad(const Matrix& probs, std::span<const std::size_t> rows) {
  if (rows.empty()) throw ContractError("mean_entropy_grad over an empty row set");
  check_rows(rows, probs.rows());
  Matrix g(probs.rows(), probs.cols());
  const double scale = 1.0 / static_cast<double>(rows.size());
  for (std::size_t r : rows) {
    auto p = probs.row(r);
    auto out = g.row(r);
    for (std::size_t c = 0; c < p.size(); ++c) {
      // The clamp is flat below kProbClamp.
      out[c] = p[c] < kProbClamp ? 0.0 : -(std::log(p[c]) + 1.0) * scale;
    }
  }
  return g;
}

double mean_cross_entropy(const Matrix& probs, std::span<const std::size_t> rows,
                          std::span<const std::size_t> labels) {
  if (rows.empty()) throw ContractError("mean_cross_entropy over an empty row set");
  if (rows.size() != labels.size()) throw ContractError("rows and labels differ in length");
  check_rows(rows, probs.rows());
  double total = 0.0;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (labels[i] >= probs.cols()) throw ContractError("label exceeds class count");
    total -= std::log(clamp_prob(probs(rows[i], labels[i])));
  }
  return total / static_cast<double>(rows.size());
}

Matrix mean_cross_entropy_grad(const Matrix& probs, std::span<const std::size_t> rows,
                               std::span<const std::size_t> labels) {
  if (rows.empty()) throw ContractError("mean_cross_entropy_grad over an empty row set");
  if (rows.size() != labels.size()) throw ContractError("rows and labels differ in length");
  check_rows(rows, probs.rows());
  Matrix g(probs.rows(), probs.cols());
  const double scale = 1.0 / static_cast<double>(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (labels[i] >= probs.cols()) throw ContractError("label exceeds class count");
    const double p = probs(rows[i], labels[i]);
    if (p >= kProbClamp) g(rows[i], labels[i]) += -scale / p;
  }
  return g;
}

}  // namespace poem::nn
