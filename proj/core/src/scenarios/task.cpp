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

#include "poemtta/scenarios/task.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "poemtta/error.hpp"
#include "poemtta/seed.hpp"

namespace poem::scenarios {

void LabeledSet::validate() const {
  if (x.rows() != y.size()) throw ContractError("feature rows and label count differ");
  if (num_classes < 2) throw ContractError("labeled set needs at least two classes");
  for (std::size_t label : y) {
    if (label >= num_classes) throw ContractError("label out of range");
  }
}

TaskGeometry make_task_geometry(std::uint64_t seed, std::size_t num_classes, std::size_t dim,
                                double separation) {
  if (num_classes < 2 || dim < 2) throw ContractError("task needs C >= 2 and d >= 2");
  if (!(separation > 0.0)) throw ContractError("separation must be positive");
  std::mt19937_64 rng(derive_seed(seed, "geometry"));
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> scale_dist(0.5, 1.0);

  TaskGeometry g;
  g.num_classes = num_classes;
  g.dim = dim;
  g.means = nn::Matrix(num_classes, dim);

  if (dim >= num_classes) {
    // Orthonormal q_1..q_C by Gram-Schmidt; centered, they form a regular
    // simplex with pairwise distance sqrt(2).
    std::vector<std::vector<double>> q;
    while (q.size() < num_classes) {
      std::vector<double> v(dim);
      for (double& e : v) e = normal(rng);
      for (const auto& b : q) {
        const double dot = std::inner_product(v.begin(), v.end(), b.begin(), 0.0);
        for (std::size_t i = 0; i < dim; ++i) v[i] -= dot * b[i];
      }
      const double norm = std::sqrt(std::inner_product(v.begin(), v.end(), v.begin(), 0.0));
      if (norm < 1e-8) continue;
      for (double& e : v) e /= norm;
      q.push_back(std::move(v));
    }
    std::vector<double> centroid(dim, 0.0);
    for (const auto& b : q) {
      for (std::size_t i = 0; i < dim; ++i) centroid[i] += b[i] / static_cast<double>(num_classes);
    }
    const double radius = separation / std::sqrt(2.0);
    for (std::size_t c = 0; c < num_classes; ++c) {
      for (std::size_t i = 0; i < dim; ++i) g.means(c, i) = radius * (q[c][i] - centroid[i]);
    }
  } else {
    // Too few dimensions for a simplex; random directions at the same radius.
    const double radius = separation / std::sqrt(2.0);
    for (std::size_t c = 0; c < num_classes; ++c) {
      auto row = g.means.row(c);
      for (double& e : row) e = normal(rng);
      const double norm = std::sqrt(std::inner_product(row.begin(), row.end(), row.begin(), 0.0));
      for (double& e : row) e *= radius / norm;
    }
  }

  g.scales.resize(dim);
  for (double& s : g.scales) s = scale_dist(rng);
  return g;
}

LabeledSet sample_task(const TaskGeometry& geometry, std::size_t n, std::uint64_t sample_seed) {
  const std::size_t classes = geometry.num_classes;
  if (n == 0) throw ContractError("cannot sample an empty set");
  std::mt19937_64 rng(sample_seed);
  std::normal_distribution<double> normal(0.0, 1.0);

  std::vector<std::size_t> labels(n);
  for (std::size_t i = 0; i < n; ++i) labels[i] = i % classes;
  std::shuffle(labels.begin(), labels.end(), rng);

  LabeledSet out;
  out.num_classes = classes;
  out.x = nn::Matrix(n, geometry.dim);
  out.y = labels;
  for (std::size_t r = 0; r < n; ++r) {
    auto mean = geometry.means.row(labels[r]);
    auto row = out.x.row(r);
    for (std::size_t i = 0; i < geometry.dim; ++i) {
      row[i] = mean[i] + geometry.scales[i] * normal(rng);
    }
  }
  return out;
}

namespace {

void check_task_args(std::size_t num_classes, std::size_t dim, std::size_t n) {
  if (num_classes < 2) throw ContractError("task needs at least two classes");
  if (dim < 2) throw ContractError("task needs at least two features");
  if (n < 10 * num_classes) throw ContractError("task needs at least 10 samples per class");
}

}  // namespace

LabeledSet make_source_task(std::uint64_t seed, std::size_t num_classes, std::size_t dim,
                            std::size_t n, double separation) {
  check_task_args(num_classes, dim, n);
  return sample_task(make_task_geometry(seed, num_classes, dim, separation), n,
                     derive_seed(seed, "train"));
}

LabeledSet make_test_set(std::uint64_t seed, std::size_t num_classes, std::size_t dim,
                         std::size_t n, double separation) {
  check_task_args(num_classes, dim, n);
  return sample_task(make_task_geometry(seed, num_classes, dim, separation), n,
                     derive_seed(seed, "test"));
}

std::vector<std::size_t> class_histogram(const LabeledSet& data) {
  std::vector<std::size_t> h(data.num_classes, 0);
  for (std::size_t label : data.y) ++h.at(label);
  return h;
}

}  // namespace poem::scenarios
