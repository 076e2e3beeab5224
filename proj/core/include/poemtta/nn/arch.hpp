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
#include <string>
#include <string_view>
#include <vector>

#include "poemtta/nn/layer.hpp"

namespace poem::nn {

// Textual architecture description. Comma-separated tokens:
//   <int>  dense layer of that output width
//   bn     batch-norm        ln    layer-norm        relu
//   |      split point between shallow layers and the branch
// A final dense layer to the class count is appended automatically.
// Example: "64,bn,relu,64,bn,relu|32,bn,relu".
struct ArchSpec {
  enum class Token { kDense, kBatchNorm, kLayerNorm, kRelu };
  struct Item {
    Token token;
    std::size_t width = 0;
  };
  std::vector<Item> items;
  std::size_t split_after = 0;  // number of items in the shallow part

  static ArchSpec parse(std::string_view text);
  std::string to_string() const;
};

inline constexpr std::string_view kDefaultArch = "bn,64,bn,relu,64,bn,relu|32,bn,relu";
inline constexpr std::string_view kLayerNormArch = "64,ln,relu,64,ln,relu|32,ln,relu";

// Dense weights ~ N(0, 2/fan_in), biases zero, norm layers at identity.
Network build_network(const ArchSpec& arch, std::size_t input_width, std::size_t num_classes,
                      std::uint64_t seed);

}  // namespace poem::nn
