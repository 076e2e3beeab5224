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

#include <iosfwd>
#include <string>
#include <vector>

#include "poemtta/scenarios/stream.hpp"
#include "poemtta/scenarios/task.hpp"

namespace poem::scenarios {

// Whitespace-separated text tables; reals use the shortest representation
// that round-trips exactly.
//
// Dataset:   line 1 "n d C", then n lines "label x_1 ... x_d".
// Stream:    line 1 "n d C B" (B batches), then n lines
//            "batch label x_1 ... x_d" in stream order.
//
// Stream tables keep the labels in clear; they are fixtures, not inputs to
// the adaptation engine.
void write_dataset(std::ostream& out, const LabeledSet& data);
LabeledSet read_dataset(std::istream& in);

void write_stream(std::ostream& out, const std::vector<Batch>& stream, std::size_t num_classes);
std::vector<Batch> read_stream(std::istream& in, std::size_t* num_classes = nullptr);

void save_dataset(const std::string& path, const LabeledSet& data);
LabeledSet load_dataset(const std::string& path);

}  // namespace poem::scenarios
