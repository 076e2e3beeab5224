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
#include <string>
#include <string_view>

namespace poem::tta {

enum class Method { kNoAdapt, kTent, kThresholdTent, kPoem };

std::string_view to_string(Method m);
// Accepts "no_adapt", "tent", "threshold_tent", "poem".
Method parse_method(std::string_view name);

struct AdaptConfig {
  // E0 = entropy_factor * ln C
  double entropy_factor = 0.4;
  // Upper bound on update rounds per batch.
  std::size_t max_iters = 2;
  // Weight of the source branch in the fused prediction.
  double fusion_alpha = 0.5;
  double lr_shallow = 0.01;
  double lr_adapt = 0.01;
  double momentum = 0.9;
  Method method = Method::kPoem;

  // Throws ConfigError on out-of-range values.
  void validate() const;

  // Learning rates used for ImageNet-scale backbones; kept for reference.
  static AdaptConfig resnet_preset();
  static AdaptConfig vit_preset();
};

double entropy_threshold(double entropy_factor, std::size_t num_classes);

}  // namespace poem::tta
