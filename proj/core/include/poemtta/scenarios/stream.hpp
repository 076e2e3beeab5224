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
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "poemtta/nn/matrix.hpp"
#include "poemtta/scenarios/shift.hpp"
#include "poemtta/scenarios/task.hpp"

namespace poem::scenarios {

// Ground-truth labels of a batch, readable only outside adaptation calls.
// Every reveal() made while an AdaptationScope is alive on the same thread
// is counted as a violation.
class SealedLabels {
 public:
  SealedLabels() = default;
  explicit SealedLabels(std::vector<std::size_t> labels) : labels_(std::move(labels)) {}

  std::size_t size() const noexcept { return labels_.size(); }
  std::span<const std::size_t> reveal() const;

  static std::size_t violations() noexcept;
  static void reset_violations() noexcept;

 private:
  std::vector<std::size_t> labels_;
};

// Marks the current thread as inside the adaptation engine.
class AdaptationScope {
 public:
  AdaptationScope();
  ~AdaptationScope();
  AdaptationScope(const AdaptationScope&) = delete;
  AdaptationScope& operator=(const AdaptationScope&) = delete;

  static bool active() noexcept;
};

enum class Regime { kStandard, kImbalancedLabel, kSingleSample, kMixedShift };

std::string_view to_string(Regime r);
Regime parse_regime(std::string_view name);

struct StreamScenario {
  Regime regime = Regime::kStandard;
  std::size_t batch_size = 64;
  // Applied to the whole set for non-mixed regimes (at most one entry);
  // the mixed regime cycles batches through all of them.
  std::vector<ShiftSpec> shifts;
  std::uint64_t seed = 0;

  void validate() const;
};

struct Batch {
  std::size_t index = 0;
  nn::Matrix x;
  SealedLabels labels;
  std::optional<ShiftSpec> shift;
};

// Seed used for the k-th entry of scenario.shifts.
std::uint64_t shift_seed(std::uint64_t scenario_seed, std::size_t k);

// standard        seeded shuffle, fixed-size batches (last may be short)
// imbalanced      sorted by class, so each batch is (near) single-class
// single_sample   seeded shuffle, batches of one
// mixed_shift     seeded shuffle; batch b drawn from shift order[b % K]
std::vector<Batch> make_stream(const LabeledSet& data, const StreamScenario& scenario);

}  // namespace poem::scenarios
