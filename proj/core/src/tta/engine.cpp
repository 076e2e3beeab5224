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

#include "poemtta/tta/engine.hpp"

#include <algorithm>
#include <cmath>
#include <iterator>

#include "poemtta/error.hpp"
#include "poemtta/nn/loss.hpp"
#include "poemtta/nn/optim.hpp"

namespace poem::tta {

using nn::Layer;
using nn::Matrix;
using nn::Param;
using nn::StatsMode;

namespace {

std::vector<Layer> copy_layers(std::span<const Layer> src) { return {src.begin(), src.end()}; }

std::vector<std::size_t> all_rows(std::size_t n) {
  std::vector<std::size_t> rows(n);
  for (std::size_t i = 0; i < n; ++i) rows[i] = i;
  return rows;
}

std::vector<std::size_t> set_difference(const std::vector<std::size_t>& a,
                                        const std::vector<std::size_t>& b) {
  std::vector<std::size_t> out;
  std::set_difference(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
  return out;
}

void check_batch(const Matrix& x, std::size_t input_width) {
  if (x.empty()) throw ContractError("adaptation called on an empty batch");
  if (x.cols() != input_width) {
    throw ShapeError("batch has " + std::to_string(x.cols()) + " features, model expects " +
                     std::to_string(input_width));
  }
}

// y = alpha * a + (1 - alpha) * b, exactly a when alpha == 1 and exactly b
// when alpha == 0.
Matrix blend(const Matrix& a, const Matrix& b, double alpha) {
  if (alpha == 1.0) return a;
  if (alpha == 0.0) return b;
  Matrix out(a.rows(), a.cols());
  auto pa = a.data();
  auto pb = b.data();
  auto po = out.data();
  for (std::size_t i = 0; i < po.size(); ++i) po[i] = alpha * pa[i] + (1.0 - alpha) * pb[i];
  return out;
}

Prediction single_head_prediction(Matrix probs) {
  Prediction p;
  p.pseudo_labels = nn::argmax_rows(probs);
  p.probs_source = probs;
  p.probs_adapt = probs;
  p.probs_fused = std::move(probs);
  return p;
}

std::vector<Param*> concat(std::vector<Param*> a, const std::vector<Param*>& b) {
  a.insert(a.end(), b.begin(), b.end());
  return a;
}

// Gradient of `dfused` (dL/d fused probs) into the shallow layers, flowing
// through both branches without touching their parameters.
void backprop_fused_into_shallow(PoemState& s, const FusedForward& f, const Matrix& dfused) {
  const double alpha = s.fusion_alpha;
  Matrix dsrc = dfused;
  dsrc *= alpha;
  Matrix dadapt = dfused;
  dadapt *= 1.0 - alpha;
  const Matrix dz_src = nn::softmax_backward(f.prediction.probs_source, dsrc);
  const Matrix dz_adapt = nn::softmax_backward(f.prediction.probs_adapt, dadapt);
  Matrix dphi = *nn::backward(s.source_branch, f.source_trace, dz_src, nn::accept_none());
  dphi += *nn::backward(s.adapt_branch, f.adapt_trace, dz_adapt, nn::accept_none());
  nn::backward(s.shallow, f.shallow_trace, dphi, nn::accept_trainable(), false);
}

}  // namespace

PoemState split_and_clone(const nn::Network& net, const AdaptConfig& cfg) {
  cfg.validate();
  net.validate();
  PoemState s;
  s.shallow = copy_layers(net.shallow());
  s.source_branch = copy_layers(net.branch());
  if (!nn::has_norm_layer(s.shallow) && !nn::has_norm_layer(s.source_branch)) {
    throw ConfigError("network has no normalization layer to adapt");
  }
  nn::set_trainable_norm_affine_only(s.shallow, true);
  nn::set_trainable_norm_affine_only(s.source_branch, false);
  s.adapt_branch = s.source_branch;
  nn::set_trainable_norm_affine_only(s.adapt_branch, true);
  for (auto* seg : {&s.shallow, &s.source_branch, &s.adapt_branch}) {
    for (Param* p : nn::params_of(*seg)) {
      p->zero_grad();
      p->momentum_buf.fill(0.0);
    }
  }
  s.num_classes = net.num_classes;
  s.input_width = net.input_width;
  s.entropy_threshold = entropy_threshold(cfg.entropy_factor, net.num_classes);
  s.fusion_alpha = cfg.fusion_alpha;
  return s;
}

BaselineState make_baseline_state(const nn::Network& net, const AdaptConfig& cfg) {
  cfg.validate();
  net.validate();
  BaselineState s;
  s.layers = net.layers;
  nn::set_trainable_norm_affine_only(s.layers, true);
  for (Param* p : nn::params_of(s.layers)) {
    p->zero_grad();
    p->momentum_buf.fill(0.0);
  }
  s.num_classes = net.num_classes;
  s.input_width = net.input_width;
  s.entropy_threshold = entropy_threshold(cfg.entropy_factor, net.num_classes);
  return s;
}

FusedForward predict_fused(const PoemState& state, const Matrix& x, StatsMode mode) {
  check_batch(x, state.input_width);
  FusedForward out;
  auto g = nn::forward(state.shallow, x, mode);
  auto src = nn::forward(state.source_branch, g.output, mode);
  auto adapt = nn::forward(state.adapt_branch, g.output, mode);
  out.shallow_trace = std::move(g.trace);
  out.source_trace = std::move(src.trace);
  out.adapt_trace = std::move(adapt.trace);

  Prediction& p = out.prediction;
  p.probs_source = nn::softmax(src.output);
  p.probs_adapt = nn::softmax(adapt.output);
  p.probs_fused = blend(p.probs_source, p.probs_adapt, state.fusion_alpha);
  p.pseudo_labels = nn::argmax_rows(p.probs_fused);
  return out;
}

SelectionResult select_reliable(std::span<const double> entropies, double threshold,
                                std::size_t iteration) {
  SelectionResult r;
  r.entropies.assign(entropies.begin(), entropies.end());
  r.iteration = iteration;
  for (std::size_t i = 0; i < entropies.size(); ++i) {
    if (entropies[i] < threshold) r.selected.push_back(i);
  }
  return r;
}

AdaptResult adapt_batch_poem(PoemState& state, const Matrix& x, const AdaptConfig& cfg) {
  check_batch(x, state.input_width);
  const StatsMode mode = nn::stats_mode_for(x.rows());
  AdaptTrace trace;

  FusedForward fwd = predict_fused(state, x, mode);
  trace.forward_count = 1;
  trace.selections.push_back(select_reliable(nn::entropy_rows(fwd.prediction.probs_fused),
                                             state.entropy_threshold, 0));
  trace.initial = fwd.prediction;

  const auto shallow_params = nn::params_of(state.shallow);
  const auto adapt_params = nn::params_of(state.adapt_branch);
  const auto updated_params = concat(shallow_params, adapt_params);

  std::size_t t = 0;
  while (t < cfg.max_iters) {
    const std::vector<std::size_t>& selected = trace.selections.back().selected;
    if (selected.empty()) break;
    // Consecutive selections coincide: stop early.
    if (t > 0 && trace.selections[t - 1].selected == selected) break;

    nn::zero_grads(state.shallow);
    nn::zero_grads(state.adapt_branch);

    // Shallow norm affine params: minimize the mean fused entropy over S.
    backprop_fused_into_shallow(state, fwd, nn::mean_entropy_grad(fwd.prediction.probs_fused,
                                                                   selected));

    // Adapt-branch norm affine params: cross-entropy of the fused prediction
    // against the detached pseudo-labels of S, from the same forward.
    std::vector<std::size_t> labels;
    labels.reserve(selected.size());
    for (std::size_t i : selected) labels.push_back(fwd.prediction.pseudo_labels[i]);
    Matrix dfused = nn::mean_cross_entropy_grad(fwd.prediction.probs_fused, selected, labels);
    dfused *= 1.0 - state.fusion_alpha;
    const Matrix dz = nn::softmax_backward(fwd.prediction.probs_adapt, dfused);
    nn::backward(state.adapt_branch, fwd.adapt_trace, dz, nn::accept_trainable(), false);

    trace.grad_norms.push_back(nn::grad_norm(updated_params));
    trace.backward_count += selected.size();
    trace.backward_passes += 2;
    nn::sgd_step(shallow_params, cfg.lr_shallow, cfg.momentum);
    nn::sgd_step(adapt_params, cfg.lr_adapt, cfg.momentum);
    ++t;
    trace.update_rounds = t;

    fwd = predict_fused(state, x, mode);
    ++trace.forward_count;
    trace.selections.push_back(select_reliable(nn::entropy_rows(fwd.prediction.probs_fused),
                                               state.entropy_threshold, t));
  }

  trace.final = fwd.prediction;
  trace.potentially_reliable = set_difference(trace.final_selection(), trace.initial_selection());
  AdaptResult result{fwd.prediction, std::move(trace)};
  return result;
}

namespace {

AdaptResult entropy_step(BaselineState& state, const Matrix& x, const AdaptConfig& cfg,
                         bool filter_by_threshold) {
  check_batch(x, state.input_width);
  const StatsMode mode = nn::stats_mode_for(x.rows());
  auto fwd = nn::forward(state.layers, x, mode);
  AdaptTrace trace;
  trace.forward_count = 1;
  const Matrix probs = nn::softmax(fwd.output);
  const auto entropies = nn::entropy_rows(probs);
  SelectionResult sel = filter_by_threshold
                            ? select_reliable(entropies, state.entropy_threshold, 0)
                            : SelectionResult{entropies, all_rows(x.rows()), 0};
  trace.selections.push_back(sel);
  trace.initial = single_head_prediction(probs);
  trace.final = trace.initial;

  if (!sel.selected.empty()) {
    const auto params = nn::params_of(state.layers);
    nn::zero_grads(state.layers);
    const Matrix dz = nn::softmax_backward(probs, nn::mean_entropy_grad(probs, sel.selected));
    nn::backward(state.layers, fwd.trace, dz, nn::accept_trainable(), false);
    trace.grad_norms.push_back(nn::grad_norm(params));
    trace.backward_count = sel.selected.size();
    trace.backward_passes = 1;
    trace.update_rounds = 1;
    nn::sgd_step(params, cfg.lr_shallow, cfg.momentum);
  }
  // The selection after the update is not re-measured; the final selection
  // equals the initial one and no potentially reliable samples are tracked.
  return AdaptResult{trace.initial, std::move(trace)};
}

}  // namespace

AdaptResult adapt_batch_tent(BaselineState& state, const Matrix& x, const AdaptConfig& cfg) {
  return entropy_step(state, x, cfg, false);
}

AdaptResult adapt_batch_threshold(BaselineState& state, const Matrix& x, const AdaptConfig& cfg) {
  return entropy_step(state, x, cfg, true);
}

AdaptResult predict_no_adapt(const BaselineState& state, const Matrix& x) {
  check_batch(x, state.input_width);
  const Matrix probs = nn::softmax(nn::infer(state.layers, x, StatsMode::kRunning));
  AdaptTrace trace;
  trace.forward_count = 1;
  trace.selections.push_back(
      select_reliable(nn::entropy_rows(probs), state.entropy_threshold, 0));
  trace.initial = single_head_prediction(probs);
  trace.final = trace.initial;
  return AdaptResult{trace.initial, std::move(trace)};
}

std::pair<std::size_t, std::size_t> forward_backward_counters(const AdaptTrace& trace) {
  return {trace.forward_count, trace.backward_count};
}

std::vector<double> sample_gradient_norms(PoemState& state, const Matrix& x) {
  check_batch(x, state.input_width);
  const StatsMode mode = nn::stats_mode_for(x.rows());
  const FusedForward fwd = predict_fused(state, x, mode);
  const auto shallow_params = nn::params_of(state.shallow);

  std::vector<Matrix> saved;
  saved.reserve(shallow_params.size());
  for (Param* p : shallow_params) saved.push_back(p->grad);

  std::vector<double> norms(x.rows());
  for (std::size_t i = 0; i < x.rows(); ++i) {
    nn::zero_grads(state.shallow);
    const std::size_t row[] = {i};
    backprop_fused_into_shallow(state, fwd, nn::mean_entropy_grad(fwd.prediction.probs_fused, row));
    norms[i] = nn::grad_norm(shallow_params);
  }
  for (std::size_t k = 0; k < shallow_params.size(); ++k) shallow_params[k]->grad = saved[k];
  return norms;
}

Adapter::Adapter(const nn::Network& source, const AdaptConfig& cfg) : cfg_(cfg) {
  if (cfg.method == Method::kPoem) {
    state_ = split_and_clone(source, cfg);
  } else {
    state_ = make_baseline_state(source, cfg);
  }
}

double Adapter::entropy_threshold() const {
  return std::visit([](const auto& s) { return s.entropy_threshold; }, state_);
}

AdaptResult Adapter::adapt(const Matrix& x) {
  switch (cfg_.method) {
    case Method::kPoem: return adapt_batch_poem(std::get<PoemState>(state_), x, cfg_);
    case Method::kTent: return adapt_batch_tent(std::get<BaselineState>(state_), x, cfg_);
    case Method::kThresholdTent:
      return adapt_batch_threshold(std::get<BaselineState>(state_), x, cfg_);
    case Method::kNoAdapt: return predict_no_adapt(std::get<BaselineState>(state_), x);
  }
  throw ConfigError("unhandled method");
}

}  // namespace poem::tta
