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
#include <cstdint>
#include <vector>

#include "poemtta/nn/matrix.hpp"

namespace poem::scenarios {

// Features with class labels; labels travel with the features only until a
// stream seals them.
struct LabeledSet {
  nn::Matrix x;
  std::vector<std::size_t> y;
  std::size_t num_classes = 0;

  std::size_t size() const { return y.size(); }
  std::size_t dim() const { return x.cols(); }
  void validate() const;
};

// Class-conditional Gaussians with a shared diagonal covariance. Means sit
// on a randomly oriented regular simplex (when dim >= classes) with every
// pair `separation` apart; per-feature standard deviations lie in [0.5, 1].
struct TaskGeometry {
  std::size_t num_classes = 0;
  std::size_t dim = 0;
  nn::Matrix means;             // classes x dim
  std::vector<double> scales;   // dim
};

inline constexpr double kDefaultSeparation = 3.0;

TaskGeometry make_task_geometry(std::uint64_t seed, std::size_t num_classes, std::size_t dim,
                                double separation = kDefaultSeparation);

// n samples, classes balanced (the first n % C classes get one extra),
// shuffled with `sample_seed`.
LabeledSet sample_task(const TaskGeometry& geometry, std::size_t n, std::uint64_t sample_seed);

// Training split of the task identified by `seed`. Requires C >= 2, d >= 2,
// n >= 10 * C.
LabeledSet make_source_task(std::uint64_t seed, std::size_t num_classes, std::size_t dim,
                            std::size_t n, double separation = kDefaultSeparation);

// Held-out split of the same task (same geometry, independent samples).
LabeledSet make_test_set(std::uint64_t seed, std::size_t num_classes, std::size_t dim,
                         std::size_t n, double separation = kDefaultSeparation);

std::vector<std::size_t> class_histogram(const LabeledSet& data);

}  // namespace poem::scenarios
