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
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "poemtta/harness/metrics.hpp"

namespace poem::harness {

// Mean +- sample standard deviation of the natural accuracy over seeds for
// one (method, scenario, shift, severity, factor) key.
struct ReportRow {
  std::string method;
  std::string scenario;
  std::string shift;
  int severity = 0;
  double entropy_factor = 0.0;
  std::size_t n_seeds = 0;
  double mean_accuracy = 0.0;
  double std_accuracy = 0.0;
  double mean_accuracy_pre = 0.0;
  double mean_accuracy_post = 0.0;
  std::size_t n_prs = 0;
  std::size_t prs_correct = 0;
  std::size_t group2_size = 0;
  std::size_t group2_correct = 0;
};

std::vector<ReportRow> summarize(const ExperimentResult& result);

// Pseudo-label accuracy of the PRS, Group-1 and Group-2 for one run.
struct PrsGroupRow {
  std::string run_id;
  std::string method;
  std::uint64_t seed = 0;
  std::size_t n_prs = 0;
  std::size_t prs_correct = 0;
  std::size_t group1_size = 0;
  std::size_t group1_correct = 0;
  std::size_t group2_size = 0;
  std::size_t group2_correct = 0;

  bool prs_empty() const { return n_prs == 0; }
  double prs_accuracy() const;     // NaN when empty
  double group1_accuracy() const;  // NaN when empty
  double group2_accuracy() const;  // NaN when empty
};

// One row per poem run. Group-2 = Group-1 \ PRS holds by construction:
// group1 counts = PRS counts + group2 counts.
std::vector<PrsGroupRow> analyze_prs_groups(const ExperimentResult& result);

// Pools the runs of each seed (e.g. over shift kinds) before comparing.
std::vector<PrsGroupRow> prs_groups_by_seed(const ExperimentResult& result);

struct AccountingRow {
  std::string method;
  std::size_t runs = 0;
  std::size_t batches = 0;
  std::size_t forwards = 0;
  std::size_t backwards = 0;
  std::size_t max_iters = 0;
  double wall_us = 0.0;

  double forwards_per_batch() const;
  double batches_per_second() const;  // 0 without timing
  // Forwards within (max_iters + 1) per batch.
  bool forward_bound_holds() const;
};

std::vector<AccountingRow> compute_accounting(const ExperimentResult& result);

// Natural accuracy per (method, factor, seed), averaged over shift cells.
struct SeedAccuracy {
  std::string method;
  double entropy_factor = 0.0;
  std::uint64_t seed = 0;
  double accuracy = 0.0;
  std::size_t cells = 0;
};

std::vector<SeedAccuracy> seed_accuracies(const ExperimentResult& result);

struct SweepStats {
  std::string method;
  std::vector<double> factors;
  std::vector<double> mean_accuracy;   // per factor, over seeds
  std::vector<double> std_over_seeds;  // per factor
  double range = 0.0;                  // max - min of mean_accuracy
  double std_across_factors = 0.0;     // of mean_accuracy
  std::map<std::uint64_t, double> per_seed_std;  // std across factors, per seed
};

std::vector<SweepStats> sweep_stats(const ExperimentResult& result);

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::string to_csv() const;
};

// kind: summary | prs | accounting | sweep | bands
Table make_report(std::string_view kind, const ExperimentResult& result);

double sample_std(const std::vector<double>& v);

}  // namespace poem::harness
