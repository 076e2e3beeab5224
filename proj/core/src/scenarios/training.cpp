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

#include "poemtta/scenarios/training.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "poemtta/error.hpp"
#include "poemtta/nn/loss.hpp"
#include "poemtta/nn/optim.hpp"
#include "poemtta/seed.hpp"

namespace poem::scenarios {

TrainResult train_source_model(const LabeledSet& data, const nn::ArchSpec& arch,
                               const TrainOptions& options) {
  data.validate();
  if (options.epochs == 0) throw ContractError("training needs at least one epoch");
  if (options.batch_size < 2) throw ContractError("training batch size must be at least 2");

  TrainResult result;
  result.network = nn::build_network(arch, data.dim(), data.num_classes,
                                     derive_seed(options.seed, "init"));
  nn::Network& net = result.network;
  for (nn::Param* p : nn::params_of(net.layers)) p->trainable = true;
  const auto params = nn::params_of(net.layers);

  // Per norm layer: running sums of batch means / variances over the last epoch.
  std::vector<nn::Matrix> mean_sum(net.layers.size());
  std::vector<nn::Matrix> var_sum(net.layers.size());
  std::size_t stat_batches = 0;

  std::mt19937_64 rng(derive_seed(options.seed, "minibatch"));
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), 0);

  for (std::size_t epoch = 0; epoch < options.epochs; ++epoch) {
    const bool last_epoch = epoch + 1 == options.epochs;
    std::shuffle(order.begin(), order.end(), rng);
    double loss_sum = 0.0;
    std::size_t loss_batches = 0;
    for (std::size_t start = 0; start < order.size(); start += options.batch_size) {
      const std::size_t end = std::min(order.size(), start + options.batch_size);
      // A trailing single sample cannot form batch statistics.
      if (end - start < 2) continue;
      std::span<const std::size_t> idx(order.data() + start, end - start);
      const nn::Matrix x = data.x.gather_rows(idx);
      std::vector<std::size_t> rows(idx.size());
      std::vector<std::size_t> labels(idx.size());
      for (std::size_t i = 0; i < idx.size(); ++i) {
        rows[i] = i;
        labels[i] = data.y[idx[i]];
      }

      auto fwd = nn::forward(net.layers, x, nn::StatsMode::kBatch);
      if (!fwd.output.all_finite()) {
        throw TrainingError("training logits diverged at epoch " + std::to_string(epoch));
      }
      const nn::Matrix probs = nn::softmax(fwd.output);
      const double loss = nn::mean_cross_entropy(probs, rows, labels);
      if (!std::isfinite(loss)) {
        throw TrainingError("training loss diverged at epoch " + std::to_string(epoch));
      }
      loss_sum += loss;
      ++loss_batches;

      const nn::Matrix dz = nn::softmax_backward(probs, nn::mean_cross_entropy_grad(probs, rows, labels));
      nn::backward(net.layers, fwd.trace, dz, nn::accept_trainable(), false);
      nn::sgd_step(params, options.lr, options.momentum);

      if (last_epoch) {
        for (std::size_t k = 0; k < net.layers.size(); ++k) {
          const auto* n = std::get_if<nn::NormLayer>(&net.layers[k]);
          if (n == nullptr || n->kind != nn::NormKind::kBatch) continue;
          if (mean_sum[k].empty()) {
            mean_sum[k] = fwd.trace.layers[k].mean;
            var_sum[k] = fwd.trace.layers[k].var;
          } else {
            mean_sum[k] += fwd.trace.layers[k].mean;
            var_sum[k] += fwd.trace.layers[k].var;
          }
        }
        ++stat_batches;
      }
    }
    if (last_epoch) result.final_loss = loss_sum / static_cast<double>(std::max<std::size_t>(1, loss_batches));
  }

  for (std::size_t k = 0; k < net.layers.size(); ++k) {
    auto* n = std::get_if<nn::NormLayer>(&net.layers[k]);
    if (n == nullptr || mean_sum[k].empty()) continue;
    n->running_mean = mean_sum[k];
    n->running_mean *= 1.0 / static_cast<double>(stat_batches);
    n->running_var = var_sum[k];
    n->running_var *= 1.0 / static_cast<double>(stat_batches);
  }

  for (nn::Param* p : params) {
    if (!p->value.all_finite()) throw TrainingError("training produced non-finite parameters");
    p->trainable = false;
    p->zero_grad();
    p->momentum_buf.fill(0.0);
  }
  result.train_accuracy = accuracy(net, data);
  return result;
}

double accuracy(const nn::Network& net, const LabeledSet& data, nn::StatsMode mode) {
  const nn::Matrix logits = nn::infer(net.layers, data.x, mode);
  const auto pred = nn::argmax_rows(logits);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) correct += pred[i] == data.y[i] ? 1 : 0;
  return static_cast<double>(correct) / static_cast<double>(data.size());
}

}  // namespace poem::scenarios
