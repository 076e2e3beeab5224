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
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace poem::harness {

inline constexpr int kSchemaVersion = 1;

// Identifies one grid cell: a single method on a single stream and seed.
struct CellKey {
  std::string method;
  std::string scenario;
  std::string shift;  // "gauss_noise@5", "none", or "a@5+b@5" for mixed streams
  int severity = 0;
  std::uint64_t seed = 0;
  double entropy_factor = 0.0;

  std::string run_id() const;
  bool operator==(const CellKey&) const = default;
};

// One record per adapted batch. "pre" refers to the prediction emitted
// before the batch's update, "post" to the prediction after the POEM loop
// (equal to "pre" for the single-step methods).
struct BatchRecord {
  std::size_t batch = 0;
  std::size_t size = 0;
  std::size_t correct_pre = 0;
  std::size_t correct_post = 0;
  std::size_t n_selected = 0;        // initial selection
  std::size_t n_selected_final = 0;
  std::size_t n_prs = 0;
  std::size_t prs_correct = 0;
  double mean_entropy_pre = 0.0;
  double mean_entropy_post = 0.0;
  double grad_norm = 0.0;  // mean over update rounds; 0 without an update
  std::size_t update_rounds = 0;
  std::size_t forwards = 0;
  std::size_t backwards = 0;
};

struct SummaryRecord {
  std::size_t batches = 0;
  std::size_t samples = 0;
  double accuracy = 0.0;  // at the method's natural prediction point
  double accuracy_pre = 0.0;
  double accuracy_post = 0.0;
  std::size_t forwards = 0;
  std::size_t backwards = 0;
  std::size_t update_rounds = 0;
  std::size_t n_prs = 0;
  std::size_t prs_correct = 0;
  std::size_t group1_size = 0;
  std::size_t group1_correct = 0;
  std::size_t group2_size = 0;
  std::size_t group2_correct = 0;
  std::size_t max_iters = 0;
  double source_clean_accuracy = 0.0;
  double train_accuracy = 0.0;
  std::size_t seal_violations = 0;
};

// Per-sample (initial entropy, shallow-gradient norm) joint histogram over
// deciles of each, with the PRS members counted separately.
struct BandsRecord {
  std::vector<double> entropy_edges;   // 11 ascending values
  std::vector<double> grad_edges;      // 11 ascending values
  std::vector<std::size_t> counts;     // 10 x 10, entropy decile major
  std::vector<std::size_t> prs_counts; // 10 x 10
};

struct CellResult {
  CellKey key;
  std::vector<BatchRecord> batches;
  SummaryRecord summary;
  std::optional<BandsRecord> bands;
  double wall_us = 0.0;  // adaptation calls only; kept out of the metrics file
};

struct ExperimentResult {
  std::vector<CellResult> cells;
};

// Line-delimited JSON: per cell, its batch records, an optional bands record
// and a summary record, each carrying "schema_version". Output is a pure
// function of the records, so identical runs give identical bytes.
void write_metrics(std::ostream& out, const ExperimentResult& result);
// Rejects unknown schema versions and malformed lines with IoError.
ExperimentResult read_metrics(std::istream& in);

// Timing sidecar: one {"run_id", "batches", "wall_us"} line per cell.
void write_timing(std::ostream& out, const ExperimentResult& result);
// Fills wall_us of matching cells.
void read_timing(std::istream& in, ExperimentResult& result);

// Writes through a temporary file renamed into place, so a failed run never
// leaves a truncated file behind.
void save_metrics(const std::string& path, const ExperimentResult& result);
ExperimentResult load_metrics(const std::string& path);
std::string timing_path_for(const std::string& metrics_path);

}  // namespace poem::harness
