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

#include "poemtta/nn/arch.hpp"
#include "poemtta/nn/layer.hpp"
#include "poemtta/nn/passes.hpp"
#include "poemtta/scenarios/task.hpp"

namespace poem::scenarios {

struct TrainOptions {
  std::size_t epochs = 12;
  double lr = 0.05;
  double momentum = 0.9;
  std::size_t batch_size = 64;
  std::uint64_t seed = 0;
};

struct TrainResult {
  nn::Network network;
  double train_accuracy = 0.0;  // running statistics, after training
  double final_loss = 0.0;      // mean minibatch loss of the last epoch
};

// Full-parameter minibatch training by cross-entropy and momentum SGD.
// Batch-norm running statistics are the average of the per-batch statistics
// seen during the final epoch. Throws TrainingError if the loss diverges.
TrainResult train_source_model(const LabeledSet& data, const nn::ArchSpec& arch,
                               const TrainOptions& options);

// Top-1 accuracy of a frozen network on a labeled set.
double accuracy(const nn::Network& net, const LabeledSet& data,
                nn::StatsMode mode = nn::StatsMode::kRunning);

}  // namespace poem::scenarios
