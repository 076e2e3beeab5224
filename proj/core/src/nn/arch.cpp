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

#include "poemtta/nn/arch.hpp"

#include <charconv>
#include <cmath>
#include <random>

#include "poemtta/error.hpp"

namespace poem::nn {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
  return s;
}

void parse_part(std::string_view part, std::vector<ArchSpec::Item>& items) {
  while (!part.empty()) {
    const auto comma = part.find(',');
    const std::string_view tok = trim(part.substr(0, comma));
    part = comma == std::string_view::npos ? std::string_view{} : part.substr(comma + 1);
    if (tok.empty()) continue;
    if (tok == "bn") {
      items.push_back({ArchSpec::Token::kBatchNorm});
    } else if (tok == "ln") {
      items.push_back({ArchSpec::Token::kLayerNorm});
    } else if (tok == "relu") {
      items.push_back({ArchSpec::Token::kRelu});
    } else {
      std::size_t width = 0;
      auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), width);
      if (ec != std::errc{} || ptr != tok.data() + tok.size() || width == 0) {
        throw ConfigError("unknown architecture token '" + std::string(tok) + "'");
      }
      items.push_back({ArchSpec::Token::kDense, width});
    }
  }
}

}  // namespace

ArchSpec ArchSpec::parse(std::string_view text) {
  const auto bar = text.find('|');
  if (bar == std::string_view::npos || text.find('|', bar + 1) != std::string_view::npos) {
    throw ConfigError("architecture needs exactly one '|' split marker: '" + std::string(text) + "'");
  }
  ArchSpec spec;
  parse_part(text.substr(0, bar), spec.items);
  spec.split_after = spec.items.size();
  parse_part(text.substr(bar + 1), spec.items);
  if (spec.split_after == 0) throw ConfigError("architecture has no shallow layers");
  if (spec.items.front().token == Token::kRelu) {
    throw ConfigError("architecture must start with a dense or norm layer");
  }
  return spec;
}

std::string ArchSpec::to_string() const {
  std::string out;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (i == split_after) {
      out += '|';
    } else if (i > 0) {
      out += ',';
    }
    switch (items[i].token) {
      case Token::kDense: out += std::to_string(items[i].width); break;
      case Token::kBatchNorm: out += "bn"; break;
      case Token::kLayerNorm: out += "ln"; break;
      case Token::kRelu: out += "relu"; break;
    }
  }
  return out;
}

Network build_network(const ArchSpec& arch, std::size_t input_width, std::size_t num_classes,
                      std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);

  auto dense = [&](std::size_t in, std::size_t out) {
    DenseLayer d = make_dense(in, out);
    const double scale = std::sqrt(2.0 / static_cast<double>(in));
    for (double& w : d.weight.value.data()) w = normal(rng) * scale;
    return d;
  };

  Network net;
  net.input_width = input_width;
  net.num_classes = num_classes;
  std::size_t width = input_width;
  for (std::size_t i = 0; i < arch.items.size(); ++i) {
    if (i == arch.split_after) net.split_index = net.layers.size();
    const auto& item = arch.items[i];
    switch (item.token) {
      case ArchSpec::Token::kDense:
        net.layers.emplace_back(dense(width, item.width));
        width = item.width;
        break;
      case ArchSpec::Token::kBatchNorm:
        net.layers.emplace_back(make_norm(NormKind::kBatch, width));
        break;
      case ArchSpec::Token::kLayerNorm:
        net.layers.emplace_back(make_norm(NormKind::kLayer, width));
        break;
      case ArchSpec::Token::kRelu:
        net.layers.emplace_back(ReluLayer{});
        break;
    }
  }
  if (arch.split_after == arch.items.size()) net.split_index = net.layers.size();
  net.layers.emplace_back(dense(width, num_classes));
  net.validate();
  return net;
}

}  // namespace poem::nn
