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

#include "poemtta/scenarios/shift.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <random>

#include "poemtta/error.hpp"
#include "poemtta/seed.hpp"

namespace poem::scenarios {

std::string_view to_string(ShiftKind kind) {
  switch (kind) {
    case ShiftKind::kGaussNoise: return "gauss_noise";
    case ShiftKind::kFeatureScale: return "feature_scale";
    case ShiftKind::kRotation: return "rotation";
    case ShiftKind::kMeanShift: return "mean_shift";
  }
  return "unknown";
}

ShiftKind parse_shift_kind(std::string_view name) {
  for (ShiftKind k : kAllShiftKinds) {
    if (to_string(k) == name) return k;
  }
  throw ConfigError("unknown shift kind '" + std::string(name) + "'");
}

void ShiftSpec::validate() const {
  if (severity < 1 || severity > 5) throw ConfigError("severity must lie in [1, 5]");
  if (!(magnitude >= 0.0) || !std::isfinite(magnitude)) {
    throw ConfigError("shift magnitude must be finite and non-negative");
  }
}

std::string ShiftSpec::label() const {
  return std::string(to_string(kind)) + "@" + std::to_string(severity);
}

LabeledSet apply_shift(const LabeledSet& data, const ShiftSpec& spec, std::uint64_t seed) {
  spec.validate();
  data.validate();
  const double s = static_cast<double>(spec.severity) * spec.magnitude;
  const std::size_t d = data.dim();
  std::mt19937_64 rng(derive_seed(seed, to_string(spec.kind)));
  std::normal_distribution<double> normal(0.0, 1.0);

  LabeledSet out = data;
  nn::Matrix& x = out.x;

  switch (spec.kind) {
    case ShiftKind::kGaussNoise: {
      const double sigma = 0.2 * s;
      for (double& v : x.data()) v += sigma * normal(rng);
      break;
    }
    case ShiftKind::kFeatureScale: {
      std::vector<std::size_t> coords(d);
      std::iota(coords.begin(), coords.end(), 0);
      std::shuffle(coords.begin(), coords.end(), rng);
      coords.resize(d / 2);
      const double factor = 1.0 + 0.3 * s;
      for (std::size_t r = 0; r < x.rows(); ++r) {
        for (std::size_t c : coords) x(r, c) *= factor;
      }
      break;
    }
    case ShiftKind::kRotation: {
      std::vector<std::size_t> coords(d);
      std::iota(coords.begin(), coords.end(), 0);
      std::shuffle(coords.begin(), coords.end(), rng);
      const double angle = 9.0 * s * std::numbers::pi / 180.0;
      const double cs = std::cos(angle);
      const double sn = std::sin(angle);
      for (std::size_t k = 0; k + 1 < d; k += 2) {
        const std::size_t a = coords[k];
        const std::size_t b = coords[k + 1];
        for (std::size_t r = 0; r < x.rows(); ++r) {
          const double xa = x(r, a);
          const double xb = x(r, b);
          x(r, a) = cs * xa - sn * xb;
          x(r, b) = sn * xa + cs * xb;
        }
      }
      break;
    }
    case ShiftKind::kMeanShift: {
      std::vector<double> u(d);
      double norm = 0.0;
      do {
        for (double& e : u) e = normal(rng);
        norm = std::sqrt(std::inner_product(u.begin(), u.end(), u.begin(), 0.0));
      } while (norm < 1e-8);
      const double amount = 0.4 * s;
      for (std::size_t r = 0; r < x.rows(); ++r) {
        for (std::size_t c = 0; c < d; ++c) x(r, c) += amount * u[c] / norm;
      }
      break;
    }
  }
  return out;
}

}  // namespace poem::scenarios
