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

#include "poemtta/harness/runner.hpp"

#include <algorithm>
#include <chrono>
#include <limits>
#include <numeric>

#include "poemtta/error.hpp"
#include "poemtta/nn/arch.hpp"
#include "poemtta/scenarios/stream.hpp"
#include "poemtta/scenarios/training.hpp"
#include "poemtta/seed.hpp"
#include "poemtta/tta/engine.hpp"

namespace poem::harness {

namespace {

double mean(const std::vector<double>& v) {
  if (v.empty()) return 0.0;
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

std::string shift_label(const std::vector<scenarios::ShiftSpec>& shifts) {
  if (shifts.empty()) return "none";
  std::string out;
  for (const auto& s : shifts) {
    if (!out.empty()) out += '+';
    out += s.label();
  }
  return out;
}

// Decile edges by nearest rank.
std::vector<double> decile_edges(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  std::vector<double> edges(11);
  for (std::size_t k = 0; k <= 10; ++k) edges[k] = v[(k * (v.size() - 1)) / 10];
  return edges;
}

std::size_t decile_of(const std::vector<double>& edges, double x) {
  const auto it = std::upper_bound(edges.begin() + 1, edges.begin() + 10, x);
  return static_cast<std::size_t>(it - (edges.begin() + 1));
}

struct BandSample {
  double entropy;
  double grad;
  bool prs;
};

BandsRecord make_bands(const std::vector<BandSample>& samples) {
  std::vector<double> e;
  std::vector<double> g;
  for (const auto& s : samples) {
    e.push_back(s.entropy);
    g.push_back(s.grad);
  }
  BandsRecord r;
  r.entropy_edges = decile_edges(e);
  r.grad_edges = decile_edges(g);
  r.counts.assign(100, 0);
  r.prs_counts.assign(100, 0);
  for (const auto& s : samples) {
    const std::size_t cell = decile_of(r.entropy_edges, s.entropy) * 10 + decile_of(r.grad_edges, s.grad);
    ++r.counts[cell];
    if (s.prs) ++r.prs_counts[cell];
  }
  return r;
}

struct GroupSample {
  double entropy;
  bool prs;
  bool correct;
};

// Group-1: initially high-entropy samples of the run whose initial entropy lies
// in the run's PRS initial-entropy range. Group-2: Group-1 without the PRS.
// Correctness uses the final pseudo-labels.
void fill_groups(SummaryRecord& s, const std::vector<GroupSample>& samples) {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (const GroupSample& g : samples) {
    if (!g.prs) continue;
    lo = std::min(lo, g.entropy);
    hi = std::max(hi, g.entropy);
  }
  for (const GroupSample& g : samples) {
    if (g.entropy < lo || g.entropy > hi) continue;
    ++s.group1_size;
    s.group1_correct += g.correct ? 1 : 0;
    if (!g.prs) {
      ++s.group2_size;
      s.group2_correct += g.correct ? 1 : 0;
    }
  }
}

}  // namespace

SourceModel prepare_source(const RunConfig& cfg, std::uint64_t seed) {
  const TaskParams& t = cfg.task;
  const auto train = scenarios::make_source_task(seed, t.num_classes, t.dim, t.n_train, t.separation);
  scenarios::TrainOptions opts;
  opts.epochs = cfg.train_epochs;
  opts.lr = cfg.train_lr;
  opts.seed = derive_seed(seed, "source-model");
  auto trained = scenarios::train_source_model(train, nn::ArchSpec::parse(cfg.arch), opts);
  SourceModel m;
  m.network = std::move(trained.network);
  m.train_accuracy = trained.train_accuracy;
  m.test = scenarios::make_test_set(seed, t.num_classes, t.dim, t.n_test, t.separation);
  m.clean_accuracy = scenarios::accuracy(m.network, m.test);
  return m;
}

std::vector<std::vector<scenarios::ShiftSpec>> shift_cells(const RunConfig& cfg) {
  std::vector<scenarios::ShiftSpec> specs;
  for (auto kind : cfg.shifts) specs.push_back({kind, cfg.severity, cfg.shift_magnitude});
  if (cfg.regime == scenarios::Regime::kMixedShift) return {specs};
  if (specs.empty()) return {{}};
  std::vector<std::vector<scenarios::ShiftSpec>> cells;
  for (const auto& s : specs) cells.push_back({s});
  return cells;
}

CellResult run_cell(const RunConfig& cfg, const SourceModel& source, tta::Method method,
                    const std::vector<scenarios::ShiftSpec>& shifts, std::uint64_t seed) {
  using Clock = std::chrono::steady_clock;
  tta::AdaptConfig acfg = cfg.adapt;
  acfg.method = method;

  scenarios::StreamScenario scenario;
  scenario.regime = cfg.regime;
  scenario.batch_size = cfg.batch_size;
  scenario.shifts = shifts;
  scenario.seed = derive_seed(seed, "scenario");
  const auto stream = scenarios::make_stream(source.test, scenario);

  CellResult cell;
  cell.key = CellKey{std::string(tta::to_string(method)), std::string(scenarios::to_string(cfg.regime)),
                     shift_label(shifts),  cfg.severity, seed, acfg.entropy_factor};

  tta::Adapter adapter(source.network, acfg);
  const bool bands = cfg.gradient_bands && method == tta::Method::kPoem;
  std::vector<BandSample> band_samples;
  std::vector<GroupSample> group_samples;
  const std::size_t violations_before = scenarios::SealedLabels::violations();
  double wall_us = 0.0;

  for (const scenarios::Batch& batch : stream) {
    std::vector<double> grad_norms;
    tta::AdaptResult res;
    {
      scenarios::AdaptationScope scope;
      if (bands) grad_norms = tta::sample_gradient_norms(*adapter.poem_state(), batch.x);
      const auto t0 = Clock::now();
      res = adapter.adapt(batch.x);
      wall_us += std::chrono::duration<double, std::micro>(Clock::now() - t0).count();
    }
    const auto labels = batch.labels.reveal();
    const tta::AdaptTrace& tr = res.trace;

    BatchRecord rec;
    rec.batch = batch.index;
    rec.size = batch.x.rows();
    for (std::size_t i = 0; i < rec.size; ++i) {
      rec.correct_pre += tr.initial.pseudo_labels[i] == labels[i] ? 1 : 0;
      rec.correct_post += tr.final.pseudo_labels[i] == labels[i] ? 1 : 0;
    }
    rec.n_selected = tr.initial_selection().size();
    rec.n_selected_final = tr.final_selection().size();
    const auto& e0 = tr.selections.front().entropies;
    const auto& initial = tr.initial_selection();
    const auto& prs = tr.potentially_reliable;
    rec.n_prs = prs.size();
    for (std::size_t i = 0; i < rec.size; ++i) {
      if (std::binary_search(initial.begin(), initial.end(), i)) continue;
      const bool in_prs = std::binary_search(prs.begin(), prs.end(), i);
      const bool correct = tr.final.pseudo_labels[i] == labels[i];
      rec.prs_correct += in_prs && correct ? 1 : 0;
      group_samples.push_back({e0[i], in_prs, correct});
    }
    rec.mean_entropy_pre = mean(tr.selections.front().entropies);
    rec.mean_entropy_post = mean(tr.selections.back().entropies);
    rec.grad_norm = mean(tr.grad_norms);
    rec.update_rounds = tr.update_rounds;
    std::tie(rec.forwards, rec.backwards) = tta::forward_backward_counters(tr);

    if (bands) {
      for (std::size_t i = 0; i < rec.size; ++i) {
        const bool prs = std::binary_search(tr.potentially_reliable.begin(),
                                            tr.potentially_reliable.end(), i);
        band_samples.push_back({e0[i], grad_norms[i], prs});
      }
    }
    cell.batches.push_back(rec);
  }

  SummaryRecord& s = cell.summary;
  std::size_t correct_pre = 0;
  std::size_t correct_post = 0;
  for (const BatchRecord& b : cell.batches) {
    ++s.batches;
    s.samples += b.size;
    correct_pre += b.correct_pre;
    correct_post += b.correct_post;
    s.forwards += b.forwards;
    s.backwards += b.backwards;
    s.update_rounds += b.update_rounds;
    s.n_prs += b.n_prs;
    s.prs_correct += b.prs_correct;
  }
  fill_groups(s, group_samples);
  const double n = static_cast<double>(s.samples);
  s.accuracy_pre = static_cast<double>(correct_pre) / n;
  s.accuracy_post = static_cast<double>(correct_post) / n;
  s.accuracy = method == tta::Method::kPoem ? s.accuracy_post : s.accuracy_pre;
  s.max_iters = acfg.max_iters;
  s.source_clean_accuracy = source.clean_accuracy;
  s.train_accuracy = source.train_accuracy;
  s.seal_violations = scenarios::SealedLabels::violations() - violations_before;
  if (bands && !band_samples.empty()) cell.bands = make_bands(band_samples);
  cell.wall_us = wall_us;
  return cell;
}

ExperimentResult sweep_threshold(const RunConfig& cfg, const std::vector<double>& factors) {
  cfg.validate();
  if (factors.empty()) throw ConfigError("the factor list is empty");
  for (double f : factors) {
    RunConfig probe = cfg;
    probe.adapt.entropy_factor = f;
    probe.adapt.validate();
  }
  const auto cells = shift_cells(cfg);
  ExperimentResult result;
  for (std::uint64_t seed : cfg.seeds) {
    const SourceModel source = prepare_source(cfg, seed);
    for (double factor : factors) {
      RunConfig c = cfg;
      c.adapt.entropy_factor = factor;
      for (const auto& shifts : cells) {
        for (tta::Method m : cfg.methods) {
          result.cells.push_back(run_cell(c, source, m, shifts, seed));
        }
      }
    }
  }
  return result;
}

ExperimentResult run_experiment(const RunConfig& cfg) {
  return sweep_threshold(cfg, {cfg.adapt.entropy_factor});
}

ExperimentResult run_and_save(const RunConfig& cfg, const std::vector<double>& factors) {
  ExperimentResult result = factors.empty() ? run_experiment(cfg) : sweep_threshold(cfg, factors);
  if (!cfg.out.empty()) save_metrics(cfg.out, result);
  return result;
}

}  // namespace poem::harness
