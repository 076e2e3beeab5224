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

#include "poemtta/harness/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>
#include <tuple>

#include "poemtta/error.hpp"

namespace poem::harness {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

double ratio(std::size_t num, std::size_t den) {
  return den == 0 ? kNaN : static_cast<double>(num) / static_cast<double>(den);
}

double mean_of(const std::vector<double>& v) {
  if (v.empty()) return kNaN;
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

std::string fmt(double v) {
  if (std::isnan(v)) return "n/a";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

std::string fmt(std::size_t v) { return std::to_string(v); }

std::string factor_str(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", v);
  return buf;
}

using RowKey = std::tuple<std::string, std::string, std::string, int, double>;

}  // namespace

double sample_std(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  const double m = mean_of(v);
  double ss = 0.0;
  for (double x : v) ss += (x - m) * (x - m);
  return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

std::vector<ReportRow> summarize(const ExperimentResult& result) {
  std::vector<RowKey> order;
  std::map<RowKey, std::vector<const CellResult*>> groups;
  for (const CellResult& c : result.cells) {
    RowKey k{c.key.method, c.key.scenario, c.key.shift, c.key.severity, c.key.entropy_factor};
    if (!groups.count(k)) order.push_back(k);
    groups[k].push_back(&c);
  }
  std::vector<ReportRow> rows;
  for (const RowKey& k : order) {
    ReportRow r;
    std::tie(r.method, r.scenario, r.shift, r.severity, r.entropy_factor) = k;
    std::vector<double> acc, pre, post;
    for (const CellResult* c : groups[k]) {
      acc.push_back(c->summary.accuracy);
      pre.push_back(c->summary.accuracy_pre);
      post.push_back(c->summary.accuracy_post);
      r.n_prs += c->summary.n_prs;
      r.prs_correct += c->summary.prs_correct;
      r.group2_size += c->summary.group2_size;
      r.group2_correct += c->summary.group2_correct;
    }
    r.n_seeds = acc.size();
    r.mean_accuracy = mean_of(acc);
    r.std_accuracy = sample_std(acc);
    r.mean_accuracy_pre = mean_of(pre);
    r.mean_accuracy_post = mean_of(post);
    rows.push_back(r);
  }
  return rows;
}

double PrsGroupRow::prs_accuracy() const { return ratio(prs_correct, n_prs); }
double PrsGroupRow::group1_accuracy() const { return ratio(group1_correct, group1_size); }
double PrsGroupRow::group2_accuracy() const { return ratio(group2_correct, group2_size); }

std::vector<PrsGroupRow> analyze_prs_groups(const ExperimentResult& result) {
  std::vector<PrsGroupRow> rows;
  for (const CellResult& c : result.cells) {
    if (c.key.method != "poem") continue;
    const SummaryRecord& s = c.summary;
    rows.push_back({c.key.run_id(), c.key.method, c.key.seed, s.n_prs, s.prs_correct,
                    s.group1_size, s.group1_correct, s.group2_size, s.group2_correct});
  }
  return rows;
}

std::vector<PrsGroupRow> prs_groups_by_seed(const ExperimentResult& result) {
  std::vector<PrsGroupRow> rows;
  for (const PrsGroupRow& r : analyze_prs_groups(result)) {
    auto it = std::find_if(rows.begin(), rows.end(), [&](const PrsGroupRow& x) { return x.seed == r.seed; });
    if (it == rows.end()) {
      PrsGroupRow pooled = r;
      pooled.run_id = "poem|seed=" + std::to_string(r.seed);
      rows.push_back(pooled);
      continue;
    }
    it->n_prs += r.n_prs;
    it->prs_correct += r.prs_correct;
    it->group1_size += r.group1_size;
    it->group1_correct += r.group1_correct;
    it->group2_size += r.group2_size;
    it->group2_correct += r.group2_correct;
  }
  return rows;
}

double AccountingRow::forwards_per_batch() const { return ratio(forwards, batches); }

double AccountingRow::batches_per_second() const {
  return wall_us > 0.0 ? static_cast<double>(batches) / (wall_us * 1e-6) : 0.0;
}

bool AccountingRow::forward_bound_holds() const { return forwards <= (max_iters + 1) * batches; }

std::vector<AccountingRow> compute_accounting(const ExperimentResult& result) {
  std::vector<AccountingRow> rows;
  for (const CellResult& c : result.cells) {
    auto it = std::find_if(rows.begin(), rows.end(),
                           [&](const AccountingRow& r) { return r.method == c.key.method; });
    if (it == rows.end()) {
      AccountingRow fresh;
      fresh.method = c.key.method;
      rows.push_back(std::move(fresh));
      it = rows.end() - 1;
    }
    ++it->runs;
    it->batches += c.summary.batches;
    it->forwards += c.summary.forwards;
    it->backwards += c.summary.backwards;
    it->max_iters = std::max(it->max_iters, c.summary.max_iters);
    it->wall_us += c.wall_us;
  }
  return rows;
}

std::vector<SeedAccuracy> seed_accuracies(const ExperimentResult& result) {
  std::vector<SeedAccuracy> rows;
  for (const CellResult& c : result.cells) {
    auto it = std::find_if(rows.begin(), rows.end(), [&](const SeedAccuracy& r) {
      return r.method == c.key.method && r.entropy_factor == c.key.entropy_factor &&
             r.seed == c.key.seed;
    });
    if (it == rows.end()) {
      rows.push_back({c.key.method, c.key.entropy_factor, c.key.seed, 0.0, 0});
      it = rows.end() - 1;
    }
    it->accuracy += c.summary.accuracy;
    ++it->cells;
  }
  for (SeedAccuracy& r : rows) r.accuracy /= static_cast<double>(r.cells);
  return rows;
}

std::vector<SweepStats> sweep_stats(const ExperimentResult& result) {
  const auto per_seed = seed_accuracies(result);
  std::vector<SweepStats> out;
  for (const SeedAccuracy& r : per_seed) {
    auto it = std::find_if(out.begin(), out.end(), [&](const SweepStats& s) { return s.method == r.method; });
    if (it == out.end()) {
      SweepStats fresh;
      fresh.method = r.method;
      out.push_back(std::move(fresh));
      it = out.end() - 1;
    }
    if (std::find(it->factors.begin(), it->factors.end(), r.entropy_factor) == it->factors.end()) {
      it->factors.push_back(r.entropy_factor);
    }
  }
  for (SweepStats& s : out) {
    std::sort(s.factors.begin(), s.factors.end());
    std::map<std::uint64_t, std::vector<double>> by_seed;
    for (double f : s.factors) {
      std::vector<double> acc;
      for (const SeedAccuracy& r : per_seed) {
        if (r.method != s.method || r.entropy_factor != f) continue;
        acc.push_back(r.accuracy);
        by_seed[r.seed].push_back(r.accuracy);
      }
      s.mean_accuracy.push_back(mean_of(acc));
      s.std_over_seeds.push_back(sample_std(acc));
    }
    const auto [lo, hi] = std::minmax_element(s.mean_accuracy.begin(), s.mean_accuracy.end());
    s.range = *hi - *lo;
    s.std_across_factors = sample_std(s.mean_accuracy);
    for (const auto& [seed, acc] : by_seed) s.per_seed_std[seed] = sample_std(acc);
  }
  return out;
}

std::string Table::to_csv() const {
  std::string out;
  auto line = [&out](const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i > 0) out += ',';
      out += cells[i];
    }
    out += '\n';
  };
  line(header);
  for (const auto& r : rows) line(r);
  return out;
}

namespace {

Table summary_table(const ExperimentResult& result) {
  Table t;
  t.header = {"method", "scenario", "shift", "severity", "entropy_factor", "seeds",
              "accuracy_mean", "accuracy_std", "accuracy_pre", "accuracy_post"};
  for (const ReportRow& r : summarize(result)) {
    t.rows.push_back({r.method, r.scenario, r.shift, std::to_string(r.severity),
                      factor_str(r.entropy_factor), fmt(r.n_seeds), fmt(r.mean_accuracy),
                      fmt(r.std_accuracy), fmt(r.mean_accuracy_pre), fmt(r.mean_accuracy_post)});
  }
  return t;
}

Table prs_table(const ExperimentResult& result) {
  Table t;
  t.header = {"run_id", "seed", "n_prs", "prs_accuracy", "group1_size", "group1_accuracy",
              "group2_size", "group2_accuracy", "status"};
  for (const PrsGroupRow& r : analyze_prs_groups(result)) {
    t.rows.push_back({r.run_id, std::to_string(r.seed), fmt(r.n_prs), fmt(r.prs_accuracy()),
                      fmt(r.group1_size), fmt(r.group1_accuracy()), fmt(r.group2_size),
                      fmt(r.group2_accuracy()), r.prs_empty() ? "empty_prs" : "ok"});
  }
  return t;
}

Table accounting_table(const ExperimentResult& result) {
  Table t;
  t.header = {"method", "runs", "batches", "forwards", "backwards", "forwards_per_batch",
              "forward_bound", "wall_seconds", "batches_per_second"};
  for (const AccountingRow& r : compute_accounting(result)) {
    t.rows.push_back({r.method, fmt(r.runs), fmt(r.batches), fmt(r.forwards), fmt(r.backwards),
                      fmt(r.forwards_per_batch()), r.forward_bound_holds() ? "ok" : "violated",
                      r.wall_us > 0.0 ? fmt(r.wall_us * 1e-6) : "n/a",
                      r.wall_us > 0.0 ? fmt(r.batches_per_second()) : "n/a"});
  }
  return t;
}

Table sweep_table(const ExperimentResult& result) {
  const auto stats = sweep_stats(result);
  std::vector<double> factors;
  for (const SweepStats& s : stats) {
    for (double f : s.factors) {
      if (std::find(factors.begin(), factors.end(), f) == factors.end()) factors.push_back(f);
    }
  }
  std::sort(factors.begin(), factors.end());
  Table t;
  t.header = {"method"};
  for (double f : factors) t.header.push_back("factor_" + factor_str(f));
  t.header.insert(t.header.end(), {"range", "std_across_factors", "mean_seed_std"});
  for (const SweepStats& s : stats) {
    std::vector<std::string> row{s.method};
    for (double f : factors) {
      const auto it = std::find(s.factors.begin(), s.factors.end(), f);
      row.push_back(it == s.factors.end() ? "n/a" : fmt(s.mean_accuracy[it - s.factors.begin()]));
    }
    std::vector<double> seed_std;
    for (const auto& [seed, sd] : s.per_seed_std) seed_std.push_back(sd);
    row.push_back(fmt(s.range));
    row.push_back(fmt(s.std_across_factors));
    row.push_back(fmt(mean_of(seed_std)));
    t.rows.push_back(row);
  }
  return t;
}

Table bands_table(const ExperimentResult& result) {
  Table t;
  t.header = {"run_id", "entropy_decile", "grad_decile", "entropy_lo", "entropy_hi", "grad_lo",
              "grad_hi", "count", "prs_count"};
  for (const CellResult& c : result.cells) {
    if (!c.bands) continue;
    const BandsRecord& b = *c.bands;
    for (std::size_t e = 0; e < 10; ++e) {
      for (std::size_t g = 0; g < 10; ++g) {
        t.rows.push_back({c.key.run_id(), std::to_string(e), std::to_string(g),
                          fmt(b.entropy_edges[e]), fmt(b.entropy_edges[e + 1]), fmt(b.grad_edges[g]),
                          fmt(b.grad_edges[g + 1]), fmt(b.counts[e * 10 + g]),
                          fmt(b.prs_counts[e * 10 + g])});
      }
    }
  }
  return t;
}

}  // namespace

Table make_report(std::string_view kind, const ExperimentResult& result) {
  if (kind == "summary") return summary_table(result);
  if (kind == "prs") return prs_table(result);
  if (kind == "accounting") return accounting_table(result);
  if (kind == "sweep") return sweep_table(result);
  if (kind == "bands") return bands_table(result);
  throw ConfigError("unknown report kind '" + std::string(kind) + "'");
}

}  // namespace poem::harness
