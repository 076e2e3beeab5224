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

#include "poemtta/scenarios/stream.hpp"

#include <algorithm>
#include <atomic>
#include <numeric>
#include <random>

#include "poemtta/error.hpp"
#include "poemtta/seed.hpp"

namespace poem::scenarios {

namespace {

std::atomic<std::size_t> g_violations{0};
thread_local int t_scope_depth = 0;

}  // namespace

std::span<const std::size_t> SealedLabels::reveal() const {
  if (AdaptationScope::active()) g_violations.fetch_add(1, std::memory_order_relaxed);
  return labels_;
}

std::size_t SealedLabels::violations() noexcept {
  return g_violations.load(std::memory_order_relaxed);
}

void SealedLabels::reset_violations() noexcept { g_violations.store(0); }

AdaptationScope::AdaptationScope() { ++t_scope_depth; }
AdaptationScope::~AdaptationScope() { --t_scope_depth; }
bool AdaptationScope::active() noexcept { return t_scope_depth > 0; }

std::string_view to_string(Regime r) {
  switch (r) {
    case Regime::kStandard: return "standard";
    case Regime::kImbalancedLabel: return "imbalanced_label";
    case Regime::kSingleSample: return "single_sample";
    case Regime::kMixedShift: return "mixed_shift";
  }
  return "unknown";
}

Regime parse_regime(std::string_view name) {
  for (Regime r : {Regime::kStandard, Regime::kImbalancedLabel, Regime::kSingleSample,
                   Regime::kMixedShift}) {
    if (to_string(r) == name) return r;
  }
  throw ConfigError("unknown scenario '" + std::string(name) + "'");
}

void StreamScenario::validate() const {
  if (batch_size == 0) throw ConfigError("batch size must be positive");
  if (regime == Regime::kSingleSample && batch_size != 1) {
    throw ConfigError("single_sample scenario requires batch size 1");
  }
  if (regime == Regime::kMixedShift && shifts.empty()) {
    throw ConfigError("mixed_shift scenario needs at least one shift");
  }
  if (regime != Regime::kMixedShift && shifts.size() > 1) {
    throw ConfigError("only the mixed_shift scenario accepts several shifts");
  }
  for (const auto& s : shifts) s.validate();
}

std::uint64_t shift_seed(std::uint64_t scenario_seed, std::size_t k) {
  return derive_seed(derive_seed(scenario_seed, "shift"), static_cast<std::uint64_t>(k));
}

namespace {

Batch gather(const LabeledSet& data, std::span<const std::size_t> idx, std::size_t index) {
  Batch b;
  b.index = index;
  b.x = data.x.gather_rows(idx);
  std::vector<std::size_t> labels;
  labels.reserve(idx.size());
  for (std::size_t i : idx) labels.push_back(data.y[i]);
  b.labels = SealedLabels(std::move(labels));
  return b;
}

}  // namespace

std::vector<Batch> make_stream(const LabeledSet& data, const StreamScenario& scenario) {
  scenario.validate();
  data.validate();
  const std::size_t n = data.size();
  if (scenario.batch_size > n) throw ContractError("batch size exceeds the number of samples");
  std::mt19937_64 rng(derive_seed(scenario.seed, "stream"));

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);

  if (scenario.regime == Regime::kImbalancedLabel) {
    // Seeded class order, shuffled within each class.
    std::vector<std::size_t> rank(data.num_classes);
    std::iota(rank.begin(), rank.end(), 0);
    std::shuffle(rank.begin(), rank.end(), rng);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return rank[data.y[a]] < rank[data.y[b]]; });
  }

  const std::size_t bs = scenario.regime == Regime::kSingleSample ? 1 : scenario.batch_size;
  std::vector<Batch> stream;
  stream.reserve((n + bs - 1) / bs);

  if (scenario.regime == Regime::kMixedShift) {
    const std::size_t k = scenario.shifts.size();
    std::vector<LabeledSet> domains;
    domains.reserve(k);
    for (std::size_t i = 0; i < k; ++i) {
      domains.push_back(apply_shift(data, scenario.shifts[i], shift_seed(scenario.seed, i)));
    }
    std::vector<std::size_t> domain_order(k);
    std::iota(domain_order.begin(), domain_order.end(), 0);
    std::shuffle(domain_order.begin(), domain_order.end(), rng);
    for (std::size_t start = 0, b = 0; start < n; start += bs, ++b) {
      const std::size_t end = std::min(n, start + bs);
      const std::size_t dom = domain_order[b % k];
      Batch batch = gather(domains[dom], std::span(order).subspan(start, end - start), b);
      batch.shift = scenario.shifts[dom];
      stream.push_back(std::move(batch));
    }
    return stream;
  }

  std::optional<LabeledSet> shifted;
  if (!scenario.shifts.empty()) {
    shifted = apply_shift(data, scenario.shifts.front(), shift_seed(scenario.seed, 0));
  }
  const LabeledSet& source = shifted ? *shifted : data;
  for (std::size_t start = 0, b = 0; start < n; start += bs, ++b) {
    const std::size_t end = std::min(n, start + bs);
    Batch batch = gather(source, std::span(order).subspan(start, end - start), b);
    if (!scenario.shifts.empty()) batch.shift = scenario.shifts.front();
    stream.push_back(std::move(batch));
  }
  return stream;
}

}  // namespace poem::scenarios
