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

#include "poemtta/scenarios/table_io.hpp"

#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "poemtta/error.hpp"

namespace poem::scenarios {

namespace {

void put_real(std::ostream& out, double v) {
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  if (ec != std::errc{}) throw IoError("could not format a real value");
  out.write(buf, ptr - buf);
}

double get_real(std::istream& in) {
  std::string tok;
  if (!(in >> tok)) throw IoError("unexpected end of table");
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (ec != std::errc{} || ptr != tok.data() + tok.size()) {
    throw IoError("malformed real '" + tok + "'");
  }
  return v;
}

std::size_t get_count(std::istream& in, const char* what) {
  long long v = -1;
  if (!(in >> v) || v < 0) throw IoError(std::string("malformed ") + what);
  return static_cast<std::size_t>(v);
}

void write_row(std::ostream& out, std::span<const double> row) {
  for (double v : row) {
    out << ' ';
    put_real(out, v);
  }
  out << '\n';
}

}  // namespace

void write_dataset(std::ostream& out, const LabeledSet& data) {
  data.validate();
  out << data.size() << ' ' << data.dim() << ' ' << data.num_classes << '\n';
  for (std::size_t r = 0; r < data.size(); ++r) {
    out << data.y[r];
    write_row(out, data.x.row(r));
  }
  if (!out) throw IoError("failed writing dataset table");
}

LabeledSet read_dataset(std::istream& in) {
  const std::size_t n = get_count(in, "row count");
  const std::size_t d = get_count(in, "dimension");
  const std::size_t c = get_count(in, "class count");
  if (n == 0 || d == 0) throw IoError("dataset table is empty");
  LabeledSet out;
  out.num_classes = c;
  out.x = nn::Matrix(n, d);
  out.y.resize(n);
  for (std::size_t r = 0; r < n; ++r) {
    out.y[r] = get_count(in, "label");
    for (std::size_t k = 0; k < d; ++k) out.x(r, k) = get_real(in);
  }
  out.validate();
  return out;
}

void write_stream(std::ostream& out, const std::vector<Batch>& stream, std::size_t num_classes) {
  if (stream.empty()) throw IoError("cannot write an empty stream");
  std::size_t n = 0;
  for (const Batch& b : stream) n += b.x.rows();
  out << n << ' ' << stream.front().x.cols() << ' ' << num_classes << ' ' << stream.size() << '\n';
  for (const Batch& b : stream) {
    const auto labels = b.labels.reveal();
    for (std::size_t r = 0; r < b.x.rows(); ++r) {
      out << b.index << ' ' << labels[r];
      write_row(out, b.x.row(r));
    }
  }
  if (!out) throw IoError("failed writing stream table");
}

std::vector<Batch> read_stream(std::istream& in, std::size_t* num_classes) {
  const std::size_t n = get_count(in, "row count");
  const std::size_t d = get_count(in, "dimension");
  const std::size_t c = get_count(in, "class count");
  const std::size_t batches = get_count(in, "batch count");
  if (num_classes != nullptr) *num_classes = c;
  if (n == 0 || d == 0 || batches == 0) throw IoError("stream table is empty");

  std::vector<std::vector<double>> rows(batches);
  std::vector<std::vector<std::size_t>> labels(batches);
  for (std::size_t r = 0; r < n; ++r) {
    const std::size_t b = get_count(in, "batch index");
    if (b >= batches) throw IoError("batch index out of range");
    const std::size_t y = get_count(in, "label");
    if (y >= c) throw IoError("label out of range");
    labels[b].push_back(y);
    for (std::size_t k = 0; k < d; ++k) rows[b].push_back(get_real(in));
  }
  std::vector<Batch> out(batches);
  for (std::size_t b = 0; b < batches; ++b) {
    if (labels[b].empty()) throw IoError("stream table has an empty batch");
    out[b].index = b;
    out[b].x = nn::Matrix(labels[b].size(), d, std::move(rows[b]));
    out[b].labels = SealedLabels(std::move(labels[b]));
  }
  return out;
}

void save_dataset(const std::string& path, const LabeledSet& data) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  write_dataset(out, data);
}

LabeledSet load_dataset(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path + "'");
  return read_dataset(in);
}

}  // namespace poem::scenarios
