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
#include <span>
#include <utility>
#include <variant>
#include <vector>

#include "poemtta/nn/layer.hpp"
#include "poemtta/nn/matrix.hpp"
#include "poemtta/nn/passes.hpp"
#include "poemtta/tta/config.hpp"

namespace poem::tta {

// Live adaptation state for the split model.
//
//   shallow        layers [0, split) of the source model; norm gamma/beta
//                  trainable, everything else frozen
//   source_branch  layers [split, end); fully frozen
//   adapt_branch   deep copy of source_branch; norm gamma/beta trainable
//
// Momentum buffers live inside each Param and persist across batches.
struct PoemState {
  std::vector<nn::Layer> shallow;
  std::vector<nn::Layer> source_branch;
  std::vector<nn::Layer> adapt_branch;
  std::size_t num_classes = 0;
  std::size_t input_width = 0;
  double entropy_threshold = 0.0;
  double fusion_alpha = 0.5;
};

// The unsplit source model as used by the entropy baselines; every norm
// layer's gamma/beta is trainable.
struct BaselineState {
  std::vector<nn::Layer> layers;
  std::size_t num_classes = 0;
  std::size_t input_width = 0;
  double entropy_threshold = 0.0;
};

struct Prediction {
  nn::Matrix probs_source;
  nn::Matrix probs_adapt;
  nn::Matrix probs_fused;
  std::vector<std::size_t> pseudo_labels;
};

struct SelectionResult {
  std::vector<double> entropies;
  std::vector<std::size_t> selected;  // ascending
  std::size_t iteration = 0;
};

struct AdaptTrace {
  // selections[0] is the initial selection, selections[t] follows round t.
  std::vector<SelectionResult> selections;
  Prediction initial;
  Prediction final;
  std::vector<std::size_t> potentially_reliable;  // S_final \ S_initial
  std::size_t update_rounds = 0;
  std::size_t forward_count = 0;     // full-batch (fused) forward passes
  std::size_t backward_count = 0;    // per-sample backward contributions
  std::size_t backward_passes = 0;   // backward sweeps over a segment chain
  std::vector<double> grad_norms;    // per update round, over updated params

  const std::vector<std::size_t>& initial_selection() const { return selections.front().selected; }
  const std::vector<std::size_t>& final_selection() const { return selections.back().selected; }
};

struct AdaptResult {
  Prediction prediction;
  AdaptTrace trace;
};

// Splits the source network at its split index and clones the branch.
// Throws ConfigError if no norm layer exists to adapt.
PoemState split_and_clone(const nn::Network& net, const AdaptConfig& cfg);

BaselineState make_baseline_state(const nn::Network& net, const AdaptConfig& cfg);

struct FusedForward {
  Prediction prediction;
  nn::ForwardTrace shallow_trace;
  nn::ForwardTrace source_trace;
  nn::ForwardTrace adapt_trace;
};

// phi = G(x); y_g = softmax(f_S(phi)); y_a = softmax(f_A(phi));
// y = alpha * y_g + (1 - alpha) * y_a; pseudo-labels = argmax y.
FusedForward predict_fused(const PoemState& state, const nn::Matrix& x, nn::StatsMode mode);

// { i : entropies[i] < threshold }, ascending.
SelectionResult select_reliable(std::span<const double> entropies, double threshold,
                                std::size_t iteration);

// One batch of the iterative re-selection loop. Returns the prediction from
// the last re-prediction (the initial one when no update happens).
AdaptResult adapt_batch_poem(PoemState& state, const nn::Matrix& x, const AdaptConfig& cfg);

// One entropy-minimization step over every sample; the returned prediction
// is the pre-update forward.
AdaptResult adapt_batch_tent(BaselineState& state, const nn::Matrix& x, const AdaptConfig& cfg);

// As tent, but the entropy is averaged only over samples below E0.
AdaptResult adapt_batch_threshold(BaselineState& state, const nn::Matrix& x,
                                  const AdaptConfig& cfg);

// Frozen source model with running statistics.
AdaptResult predict_no_adapt(const BaselineState& state, const nn::Matrix& x);

// (full-batch forwards, per-sample backward contributions)
std::pair<std::size_t, std::size_t> forward_backward_counters(const AdaptTrace& trace);

// Norm of d entropy(y_i) / d (shallow gamma, beta) for every sample i, at
// the current state, through the batch-statistics trace. Leaves parameter
// values and gradients as they were.
std::vector<double> sample_gradient_norms(PoemState& state, const nn::Matrix& x);

// Owns the state for one method and dispatches batches to it.
class Adapter {
 public:
  Adapter(const nn::Network& source, const AdaptConfig& cfg);

  AdaptResult adapt(const nn::Matrix& x);

  Method method() const { return cfg_.method; }
  const AdaptConfig& config() const { return cfg_; }
  double entropy_threshold() const;

  // nullptr unless method() == kPoem.
  PoemState* poem_state() { return std::get_if<PoemState>(&state_); }
  const BaselineState* baseline_state() const { return std::get_if<BaselineState>(&state_); }

 private:
  AdaptConfig cfg_;
  std::variant<PoemState, BaselineState> state_;
};

}  // namespace poem::tta
