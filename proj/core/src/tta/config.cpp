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

#include "poemtta/tta/config.hpp"

#include <cmath>

#include "poemtta/error.hpp"

namespace poem::tta {

std::string_view to_string(Method m) {
  switch (m) {
    case Method::kNoAdapt: return "no_adapt";
    case Method::kTent: return "tent";
    case Method::kThresholdTent: return "threshold_tent";
    case Method::kPoem: return "poem";
  }
  return "unknown";
}

Method parse_method(std::string_view name) {
  if (name == "no_adapt") return Method::kNoAdapt;
  if (name == "tent") return Method::kTent;
  if (name == "threshold_tent") return Method::kThresholdTent;
  if (name == "poem") return Method::kPoem;
  throw ConfigError("unknown method '" + std::string(name) + "'");
}

void AdaptConfig::validate() const {
  if (!(entropy_factor > 0.0) || !std::isfinite(entropy_factor)) {
    throw ConfigError("entropy_factor must be a positive finite number");
  }
  if (!(fusion_alpha >= 0.0 && fusion_alpha <= 1.0)) {
    throw ConfigError("fusion alpha must lie in [0, 1]");
  }
  if (!(lr_shallow >= 0.0) || !(lr_adapt >= 0.0)) {
    throw ConfigError("learning rates must be non-negative");
  }
  if (!(momentum >= 0.0 && momentum < 1.0)) throw ConfigError("momentum must lie in [0, 1)");
}

AdaptConfig AdaptConfig::resnet_preset() {
  AdaptConfig c;
  c.lr_shallow = 0.00025;
  c.lr_adapt = 0.00025;
  return c;
}

AdaptConfig AdaptConfig::vit_preset() {
  AdaptConfig c;
  c.lr_shallow = 0.001;
  c.lr_adapt = 0.001;
  return c;
}

double entropy_threshold(double entropy_factor, std::size_t num_classes) {
  return entropy_factor * std::log(static_cast<double>(num_classes));
}

}  // namespace poem::tta
