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

#include <cstdint>
#include <string>
#include <string_view>

#include "poemtta/scenarios/task.hpp"

namespace poem::scenarios {

enum class ShiftKind { kGaussNoise, kFeatureScale, kRotation, kMeanShift };

std::string_view to_string(ShiftKind kind);
ShiftKind parse_shift_kind(std::string_view name);

inline constexpr ShiftKind kAllShiftKinds[] = {ShiftKind::kGaussNoise, ShiftKind::kFeatureScale,
                                               ShiftKind::kRotation, ShiftKind::kMeanShift};

// Synthetic covariate shift at severity 1..5.
//   gauss_noise    x + 0.2 s eps
//   feature_scale  x * (1 + 0.3 s) on a seeded half of the coordinates
//   rotation       each seeded coordinate pair rotated by 9 s degrees
//   mean_shift     x + 0.4 s u for a seeded unit vector u
// `magnitude` multiplies the severity-dependent amount (1 by default; 0
// turns every kind into the identity).
struct ShiftSpec {
  ShiftKind kind = ShiftKind::kGaussNoise;
  int severity = 5;
  double magnitude = 1.0;

  void validate() const;
  std::string label() const;  // e.g. "gauss_noise@5"
};

// Labels and sample count are preserved.
LabeledSet apply_shift(const LabeledSet& data, const ShiftSpec& spec, std::uint64_t seed);

}  // namespace poem::scenarios
