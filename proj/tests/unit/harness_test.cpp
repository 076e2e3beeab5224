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

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>

#include "poemtta/error.hpp"
#include "poemtta/harness/metrics.hpp"
#include "poemtta/harness/report.hpp"
#include "poemtta/harness/run_config.hpp"
#include "poemtta/harness/runner.hpp"
#include "poemtta/scenarios/training.hpp"

namespace poem::harness {
namespace {

RunConfig tiny_config() {
  RunConfig cfg = RunConfig::defaults();
  apply_config_text(cfg,
                    "classes=3\n"
                    "dim=4\n"
                    "n_train=120\n"
                    "n_test=96\n"
                    "arch=8,bn,relu|8,bn,relu\n"
                    "batch_size=16\n"
                    "seed=0-1\n"
                    "epochs=2\n"
                    "shift=gauss_noise,rotation\n"
                    "lr_shallow=0.1\n"
                    "lr_adapt=0.1\n");
  return cfg;
}

std::string serialize(const ExperimentResult& r) {
  std::ostringstream out;
  write_metrics(out, r);
  return out.str();
}

std::filesystem::path temp_path(const std::string& name) {
  return std::filesystem::temp_directory_path() / ("poemtta_" + name);
}

TEST(Config, DefaultsMatchTheReferenceGrid) {
  const RunConfig cfg = RunConfig::defaults();
  EXPECT_EQ(cfg.task.num_classes, 10u);
  EXPECT_EQ(cfg.task.dim, 32u);
  EXPECT_EQ(cfg.task.n_test, 2048u);
  EXPECT_EQ(cfg.batch_size, 64u);
  EXPECT_EQ(cfg.seeds.size(), 10u);
  EXPECT_EQ(cfg.shifts.size(), 4u);
  EXPECT_EQ(cfg.methods.size(), 4u);
  EXPECT_EQ(cfg.severity, 5);
  EXPECT_DOUBLE_EQ(cfg.adapt.entropy_factor, 0.4);
  EXPECT_EQ(cfg.adapt.max_iters, 2u);
  EXPECT_DOUBLE_EQ(cfg.adapt.fusion_alpha, 0.5);
  EXPECT_DOUBLE_EQ(cfg.adapt.momentum, 0.9);
  EXPECT_NO_THROW(cfg.validate());
}

TEST(Config, KeyValueParsing) {
  RunConfig cfg = RunConfig::defaults();
  apply_config_text(cfg, "# comment\n\nmethod = poem,tent\nseed=3,5-7\nshift=none\ntask=classes=4,dim=6\nbands=true\n");
  EXPECT_EQ(cfg.methods, (std::vector<tta::Method>{tta::Method::kPoem, tta::Method::kTent}));
  EXPECT_EQ(cfg.seeds, (std::vector<std::uint64_t>{3, 5, 6, 7}));
  EXPECT_TRUE(cfg.shifts.empty());
  EXPECT_EQ(cfg.task.num_classes, 4u);
  EXPECT_EQ(cfg.task.dim, 6u);
  EXPECT_TRUE(cfg.gradient_bands);
  EXPECT_THROW(apply_setting(cfg, "unknown", "1"), ConfigError);
  EXPECT_THROW(apply_setting(cfg, "severity", "high"), ConfigError);
  EXPECT_THROW(apply_config_text(cfg, "no equals sign"), ConfigError);
  EXPECT_THROW(apply_setting(cfg, "seed", "5-2"), ConfigError);
}

TEST(Config, InvalidCombinationsAreRejected) {
  RunConfig cfg = tiny_config();
  cfg.regime = scenarios::Regime::kSingleSample;
  EXPECT_THROW(cfg.validate(), ConfigError);
  cfg.batch_size = 1;
  EXPECT_NO_THROW(cfg.validate());
  cfg = tiny_config();
  cfg.severity = 9;
  EXPECT_THROW(cfg.validate(), ConfigError);
  cfg = tiny_config();
  cfg.arch = "8,bn";
  EXPECT_THROW(cfg.validate(), ConfigError);
  cfg = tiny_config();
  cfg.adapt.fusion_alpha = 2.0;
  EXPECT_THROW(cfg.validate(), ConfigError);
}

TEST(Runner, RejectedConfigWritesNothing) {
  RunConfig cfg = tiny_config();
  cfg.adapt.momentum = 1.5;
  const auto path = temp_path("rejected.jsonl");
  std::filesystem::remove(path);
  cfg.out = path.string();
  EXPECT_THROW(run_and_save(cfg), ConfigError);
  EXPECT_FALSE(std::filesystem::exists(path));
}

TEST(Runner, NoAdaptOnCleanStreamMatchesOfflineAccuracy) {
  RunConfig cfg = tiny_config();
  cfg.shifts.clear();
  cfg.methods = {tta::Method::kNoAdapt};
  const auto result = run_experiment(cfg);
  ASSERT_EQ(result.cells.size(), 2u);
  for (const CellResult& c : result.cells) {
    const SourceModel src = prepare_source(cfg, c.key.seed);
    EXPECT_DOUBLE_EQ(c.summary.accuracy, scenarios::accuracy(src.network, src.test));
    EXPECT_EQ(c.summary.backwards, 0u);
    EXPECT_EQ(c.key.shift, "none");
  }
}

TEST(Runner, SummaryIsTheWeightedMeanOfBatches) {
  const auto result = run_experiment(tiny_config());
  ASSERT_EQ(result.cells.size(), 2u * 2u * 4u);
  for (const CellResult& c : result.cells) {
    std::size_t n = 0, pre = 0, post = 0, fw = 0;
    for (const BatchRecord& b : c.batches) {
      n += b.size;
      pre += b.correct_pre;
      post += b.correct_post;
      fw += b.forwards;
      EXPECT_LE(b.forwards, c.summary.max_iters + 1);
    }
    EXPECT_EQ(n, 96u);
    EXPECT_EQ(c.summary.samples, n);
    EXPECT_DOUBLE_EQ(c.summary.accuracy_pre, static_cast<double>(pre) / static_cast<double>(n));
    EXPECT_DOUBLE_EQ(c.summary.accuracy_post, static_cast<double>(post) / static_cast<double>(n));
    EXPECT_EQ(c.summary.forwards, fw);
    EXPECT_EQ(c.summary.seal_violations, 0u);
    if (c.key.method != "poem") {
      EXPECT_EQ(pre, post);
      EXPECT_EQ(c.summary.n_prs, 0u);
    }
  }
}

TEST(Runner, SameConfigGivesIdenticalBytes) {
  const RunConfig cfg = tiny_config();
  EXPECT_EQ(serialize(run_experiment(cfg)), serialize(run_experiment(cfg)));
}

TEST(Runner, SingleFactorSweepEqualsRun) {
  const RunConfig cfg = tiny_config();
  EXPECT_EQ(serialize(sweep_threshold(cfg, {cfg.adapt.entropy_factor})), serialize(run_experiment(cfg)));
  EXPECT_THROW(sweep_threshold(cfg, {}), ConfigError);
  EXPECT_THROW(sweep_threshold(cfg, {0.4, -1.0}), ConfigError);
}

TEST(Runner, LargeFactorSelectsEverything) {
  RunConfig cfg = tiny_config();
  cfg.methods = {tta::Method::kThresholdTent, tta::Method::kTent};
  const auto result = sweep_threshold(cfg, {1.01});
  for (const CellResult& c : result.cells) {
    for (const BatchRecord& b : c.batches) EXPECT_EQ(b.n_selected, b.size);
  }
  // With every sample selected, threshold_tent and tent coincide.
  for (std::size_t i = 0; i + 1 < result.cells.size(); i += 2) {
    EXPECT_DOUBLE_EQ(result.cells[i].summary.accuracy, result.cells[i + 1].summary.accuracy);
  }
}

TEST(Runner, MixedRegimeRunsOneCellPerMethod) {
  RunConfig cfg = tiny_config();
  cfg.regime = scenarios::Regime::kMixedShift;
  cfg.seeds = {0};
  const auto result = run_experiment(cfg);
  ASSERT_EQ(result.cells.size(), 4u);
  EXPECT_EQ(result.cells[0].key.shift, "gauss_noise@5+rotation@5");
}

TEST(Runner, GradientBandsAreRecordedForPoem) {
  RunConfig cfg = tiny_config();
  cfg.gradient_bands = true;
  cfg.seeds = {0};
  cfg.methods = {tta::Method::kPoem, tta::Method::kTent};
  const auto result = run_experiment(cfg);
  for (const CellResult& c : result.cells) {
    EXPECT_EQ(c.bands.has_value(), c.key.method == "poem");
    if (!c.bands) continue;
    std::size_t total = 0, prs = 0;
    for (std::size_t v : c.bands->counts) total += v;
    for (std::size_t v : c.bands->prs_counts) prs += v;
    EXPECT_EQ(total, 96u);
    EXPECT_EQ(prs, c.summary.n_prs);
  }
  EXPECT_EQ(make_report("bands", result).rows.size(), 2u * 100u);
}

TEST(Metrics, RoundTripPreservesEverything) {
  RunConfig cfg = tiny_config();
  cfg.gradient_bands = true;
  const auto result = run_experiment(cfg);
  std::stringstream buf;
  write_metrics(buf, result);
  const std::string text = buf.str();
  const auto back = read_metrics(buf);
  EXPECT_EQ(serialize(back), text);
  for (const auto& kind : {"summary", "prs", "sweep", "bands"}) {
    EXPECT_EQ(make_report(kind, back).to_csv(), make_report(kind, result).to_csv());
  }
}

TEST(Metrics, EveryLineCarriesTheSchemaVersion) {
  std::stringstream buf;
  write_metrics(buf, run_experiment(tiny_config()));
  std::string line;
  while (std::getline(buf, line)) EXPECT_NE(line.find("\"schema_version\":1"), std::string::npos);
}

TEST(Metrics, UnknownSchemaVersionIsRejected) {
  std::stringstream buf;
  write_metrics(buf, run_experiment(tiny_config()));
  std::string text = buf.str();
  text.replace(text.find("\"schema_version\":1"), 18, "\"schema_version\":2");
  std::stringstream in(text);
  EXPECT_THROW(read_metrics(in), IoError);
  std::stringstream junk("not json\n");
  EXPECT_THROW(read_metrics(junk), IoError);
}

TEST(Metrics, TruncatedFileIsRejected) {
  std::stringstream buf;
  write_metrics(buf, run_experiment(tiny_config()));
  std::string text = buf.str();
  text.resize(text.rfind("\"type\":\"summary\"") - 30);
  text.resize(text.rfind('\n') + 1);
  std::stringstream in(text);
  EXPECT_THROW(read_metrics(in), IoError);
}

TEST(Metrics, SaveAndLoadWithTimingSidecar) {
  RunConfig cfg = tiny_config();
  const auto path = temp_path("saved.jsonl");
  cfg.out = path.string();
  const auto result = run_and_save(cfg);
  const auto back = load_metrics(path.string());
  ASSERT_EQ(back.cells.size(), result.cells.size());
  for (std::size_t i = 0; i < back.cells.size(); ++i) {
    EXPECT_DOUBLE_EQ(back.cells[i].wall_us, result.cells[i].wall_us);
  }
  EXPECT_FALSE(std::filesystem::exists(path.string() + ".tmp"));
  std::filesystem::remove(path);
  std::filesystem::remove(timing_path_for(path.string()));
  EXPECT_THROW(load_metrics(path.string()), IoError);
}

TEST(Reports, AccountingExamples) {
  const auto result = run_experiment(tiny_config());
  const auto rows = compute_accounting(result);
  ASSERT_EQ(rows.size(), 4u);
  for (const AccountingRow& r : rows) {
    EXPECT_TRUE(r.forward_bound_holds());
    if (r.method == "no_adapt") { EXPECT_EQ(r.backwards, 0u); }
    if (r.method == "tent") { EXPECT_EQ(r.forwards, r.batches); }
    if (r.method == "poem") {
      EXPECT_GE(r.forwards_per_batch(), 1.0);
      EXPECT_LE(r.forwards_per_batch(), 3.0);
    }
  }
}

TEST(Reports, PrsGroupsAreConsistent) {
  const auto result = run_experiment(tiny_config());
  const auto rows = analyze_prs_groups(result);
  ASSERT_EQ(rows.size(), 4u);
  for (const PrsGroupRow& r : rows) {
    EXPECT_EQ(r.group1_size, r.n_prs + r.group2_size);
    EXPECT_EQ(r.group1_correct, r.prs_correct + r.group2_correct);
    if (r.prs_empty()) { EXPECT_TRUE(std::isnan(r.prs_accuracy())); }
  }
  const auto table = make_report("prs", result);
  for (const auto& row : table.rows) {
    EXPECT_EQ(row.back() == "empty_prs", row[2] == "0");
  }
}

TEST(Reports, EmptyPrsIsMarked) {
  RunConfig cfg = tiny_config();
  cfg.adapt.max_iters = 0;
  const auto table = make_report("prs", run_experiment(cfg));
  for (const auto& row : table.rows) {
    EXPECT_EQ(row.back(), "empty_prs");
    EXPECT_EQ(row[3], "n/a");
  }
}

TEST(Reports, SweepTableShape) {
  RunConfig cfg = tiny_config();
  cfg.seeds = {0};
  const auto result = sweep_threshold(cfg, {0.2, 0.4, 0.6, 0.8, 1.0});
  const auto table = make_report("sweep", result);
  EXPECT_EQ(table.header.size(), 1u + 5u + 3u);
  EXPECT_EQ(table.rows.size(), 4u);
  const auto stats = sweep_stats(result);
  for (const SweepStats& s : stats) {
    EXPECT_EQ(s.factors.size(), 5u);
    EXPECT_GE(s.range, 0.0);
  }
}

TEST(Reports, SummaryAggregatesOverSeeds) {
  const auto result = run_experiment(tiny_config());
  const auto rows = summarize(result);
  ASSERT_EQ(rows.size(), 2u * 4u);
  for (const ReportRow& r : rows) {
    EXPECT_EQ(r.n_seeds, 2u);
    std::vector<double> acc;
    for (const CellResult& c : result.cells) {
      if (c.key.method == r.method && c.key.shift == r.shift) acc.push_back(c.summary.accuracy);
    }
    ASSERT_EQ(acc.size(), 2u);
    EXPECT_DOUBLE_EQ(r.mean_accuracy, (acc[0] + acc[1]) / 2.0);
    EXPECT_NEAR(r.std_accuracy, std::abs(acc[0] - acc[1]) / std::sqrt(2.0), 1e-15);
  }
  EXPECT_THROW(make_report("histogram", result), ConfigError);
}

}  // namespace
}  // namespace poem::harness
