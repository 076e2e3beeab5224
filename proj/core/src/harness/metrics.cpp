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

#include "poemtta/harness/metrics.hpp"

#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>

#include <json.hpp>

#include "poemtta/error.hpp"

namespace poem::harness {

using Json = nlohmann::ordered_json;

namespace {

std::string shortest(double v) {
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return ec == std::errc{} ? std::string(buf, ptr) : std::string("nan");
}

Json key_json(const CellKey& k) {
  return Json{{"run_id", k.run_id()}, {"method", k.method},   {"scenario", k.scenario},
              {"shift", k.shift},     {"severity", k.severity}, {"seed", k.seed},
              {"entropy_factor", k.entropy_factor}};
}

Json header(const char* type, const CellKey& k) {
  Json j{{"schema_version", kSchemaVersion}, {"type", type}};
  j.update(key_json(k));
  return j;
}

CellKey key_from(const Json& j) {
  CellKey k;
  k.method = j.at("method").get<std::string>();
  k.scenario = j.at("scenario").get<std::string>();
  k.shift = j.at("shift").get<std::string>();
  k.severity = j.at("severity").get<int>();
  k.seed = j.at("seed").get<std::uint64_t>();
  k.entropy_factor = j.at("entropy_factor").get<double>();
  return k;
}

#define POEM_FIELDS_BATCH(X)                                                               \
  X(batch) X(size) X(correct_pre) X(correct_post) X(n_selected) X(n_selected_final)        \
  X(n_prs) X(prs_correct) X(mean_entropy_pre) X(mean_entropy_post) X(grad_norm) X(update_rounds) \
  X(forwards) X(backwards)

#define POEM_FIELDS_SUMMARY(X)                                                              \
  X(batches) X(samples) X(accuracy) X(accuracy_pre) X(accuracy_post) X(forwards)            \
  X(backwards) X(update_rounds) X(n_prs) X(prs_correct) X(group1_size) X(group1_correct)    \
  X(group2_size) X(group2_correct) X(max_iters) X(source_clean_accuracy) X(train_accuracy) \
  X(seal_violations)

#define POEM_TO_JSON(f) j[#f] = r.f;
#define POEM_FROM_JSON(f) j.at(#f).get_to(r.f);

Json to_json(const CellKey& k, const BatchRecord& r) {
  Json j = header("batch", k);
  POEM_FIELDS_BATCH(POEM_TO_JSON)
  return j;
}

Json to_json(const CellKey& k, const SummaryRecord& r) {
  Json j = header("summary", k);
  POEM_FIELDS_SUMMARY(POEM_TO_JSON)
  return j;
}

Json to_json(const CellKey& k, const BandsRecord& r) {
  Json j = header("bands", k);
  j["entropy_edges"] = r.entropy_edges;
  j["grad_edges"] = r.grad_edges;
  j["counts"] = r.counts;
  j["prs_counts"] = r.prs_counts;
  return j;
}

BatchRecord batch_from(const Json& j) {
  BatchRecord r;
  POEM_FIELDS_BATCH(POEM_FROM_JSON)
  return r;
}

SummaryRecord summary_from(const Json& j) {
  SummaryRecord r;
  POEM_FIELDS_SUMMARY(POEM_FROM_JSON)
  return r;
}

BandsRecord bands_from(const Json& j) {
  BandsRecord r;
  j.at("entropy_edges").get_to(r.entropy_edges);
  j.at("grad_edges").get_to(r.grad_edges);
  j.at("counts").get_to(r.counts);
  j.at("prs_counts").get_to(r.prs_counts);
  return r;
}

#undef POEM_TO_JSON
#undef POEM_FROM_JSON
#undef POEM_FIELDS_BATCH
#undef POEM_FIELDS_SUMMARY

Json parse_line(const std::string& line, std::size_t line_no) {
  Json j = Json::parse(line, nullptr, false);
  if (j.is_discarded() || !j.is_object()) {
    throw IoError("metrics line " + std::to_string(line_no) + " is not a JSON object");
  }
  const auto it = j.find("schema_version");
  if (it == j.end() || !it->is_number_integer() || it->get<int>() != kSchemaVersion) {
    throw IoError("metrics line " + std::to_string(line_no) + " has an unsupported schema version");
  }
  return j;
}

}  // namespace

std::string CellKey::run_id() const {
  return method + "|" + scenario + "|" + shift + "|seed=" + std::to_string(seed) +
         "|factor=" + shortest(entropy_factor);
}

void write_metrics(std::ostream& out, const ExperimentResult& result) {
  for (const CellResult& cell : result.cells) {
    for (const BatchRecord& b : cell.batches) out << to_json(cell.key, b).dump() << '\n';
    if (cell.bands) out << to_json(cell.key, *cell.bands).dump() << '\n';
    out << to_json(cell.key, cell.summary).dump() << '\n';
  }
  if (!out) throw IoError("failed writing metrics");
}

ExperimentResult read_metrics(std::istream& in) {
  ExperimentResult result;
  CellResult current;
  bool open = false;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const Json j = parse_line(line, line_no);
    try {
      const CellKey key = key_from(j);
      if (open && !(key == current.key)) {
        throw IoError("metrics line " + std::to_string(line_no) + " starts a cell before the previous summary");
      }
      current.key = key;
      open = true;
      const auto type = j.at("type").get<std::string>();
      if (type == "batch") {
        current.batches.push_back(batch_from(j));
      } else if (type == "bands") {
        current.bands = bands_from(j);
      } else if (type == "summary") {
        current.summary = summary_from(j);
        result.cells.push_back(std::move(current));
        current = CellResult{};
        open = false;
      } else {
        throw IoError("metrics line " + std::to_string(line_no) + " has unknown type '" + type + "'");
      }
    } catch (const Json::exception& e) {
      throw IoError("metrics line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  if (open) throw IoError("metrics file ends without a summary record");
  return result;
}

void write_timing(std::ostream& out, const ExperimentResult& result) {
  for (const CellResult& cell : result.cells) {
    Json j{{"schema_version", kSchemaVersion},
           {"run_id", cell.key.run_id()},
           {"batches", cell.summary.batches},
           {"wall_us", cell.wall_us}};
    out << j.dump() << '\n';
  }
  if (!out) throw IoError("failed writing timing");
}

void read_timing(std::istream& in, ExperimentResult& result) {
  std::map<std::string, double> wall;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const Json j = parse_line(line, line_no);
    try {
      wall[j.at("run_id").get<std::string>()] = j.at("wall_us").get<double>();
    } catch (const Json::exception& e) {
      throw IoError("timing line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  for (CellResult& cell : result.cells) {
    const auto it = wall.find(cell.key.run_id());
    if (it != wall.end()) cell.wall_us = it->second;
  }
}

namespace {

template <typename Writer>
void write_atomically(const std::string& path, Writer&& write) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open '" + tmp + "' for writing");
    try {
      write(out);
    } catch (...) {
      out.close();
      std::remove(tmp.c_str());
      throw;
    }
    out.flush();
    if (!out) {
      std::remove(tmp.c_str());
      throw IoError("failed writing '" + tmp + "'");
    }
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::remove(tmp.c_str());
    throw IoError("cannot move metrics into '" + path + "': " + ec.message());
  }
}

}  // namespace

std::string timing_path_for(const std::string& metrics_path) { return metrics_path + ".timing"; }

void save_metrics(const std::string& path, const ExperimentResult& result) {
  write_atomically(path, [&](std::ostream& out) { write_metrics(out, result); });
  write_atomically(timing_path_for(path), [&](std::ostream& out) { write_timing(out, result); });
}

ExperimentResult load_metrics(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "'");
  ExperimentResult result = read_metrics(in);
  std::ifstream timing(timing_path_for(path), std::ios::binary);
  if (timing) read_timing(timing, result);
  return result;
}

}  // namespace poem::harness
