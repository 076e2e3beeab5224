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

// Straight-line reference for one POEM adaptation stream on a tiny network.
// Gradients come from forward-mode dual numbers, one tangent per parameter,
// so nothing here shares code with the engine's reverse-mode passes.
//
// Network: x (2) -> dense 2x4 -> norm -> relu | dense 4x4 -> norm -> relu -> dense 4xC

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <vector>

namespace poem_oracle {

struct Dual {
  double v = 0.0;
  double d = 0.0;
};

inline Dual operator+(Dual a, Dual b) { return {a.v + b.v, a.d + b.d}; }
inline Dual operator-(Dual a, Dual b) { return {a.v - b.v, a.d - b.d}; }
inline Dual operator*(Dual a, Dual b) { return {a.v * b.v, a.d * b.v + a.v * b.d}; }
inline Dual operator/(Dual a, Dual b) { return {a.v / b.v, (a.d * b.v - a.v * b.d) / (b.v * b.v)}; }
inline Dual dexp(Dual a) { return {std::exp(a.v), std::exp(a.v) * a.d}; }
inline Dual dlog(Dual a) { return {std::log(a.v), a.d / a.v}; }
inline Dual dsqrt(Dual a) { return {std::sqrt(a.v), a.d / (2.0 * std::sqrt(a.v))}; }
inline Dual drelu(Dual a) { return a.v > 0.0 ? a : Dual{0.0, 0.0}; }
inline Dual cst(double v) { return {v, 0.0}; }

constexpr std::size_t kIn = 2;
constexpr std::size_t kHidden = 4;
constexpr double kEps = 1e-5;

enum class Norm { kBatch, kLayer };

struct NormParams {
  Norm kind = Norm::kBatch;
  std::array<double, kHidden> gamma{};
  std::array<double, kHidden> beta{};
};

struct Fixture {
  std::size_t classes = 3;
  std::size_t batch = 6;
  std::size_t batches = 2;
  std::size_t max_iters = 2;
  double lr = 0.1;
  double momentum = 0.9;
  double alpha = 0.5;
  double factor = 0.5;
  std::vector<double> w1, b1, w2, b2, w3, b3;  // row-major in x out
  NormParams n1, n2;
  std::vector<std::vector<double>> x;  // per batch, row-major batch x kIn
};

// splitmix64 mapped to [lo, hi).
class Stream {
 public:
  explicit Stream(std::uint64_t seed) : s_(seed) {}
  double uniform(double lo, double hi) {
    s_ += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = s_;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    z ^= z >> 31;
    return lo + (hi - lo) * static_cast<double>(z >> 11) / 9007199254740992.0;
  }
  std::vector<double> fill(std::size_t n, double lo, double hi) {
    std::vector<double> v(n);
    for (double& e : v) e = uniform(lo, hi);
    return v;
  }

 private:
  std::uint64_t s_;
};

struct Params {
  NormParams shallow;
  NormParams source;
  NormParams adapt;
};

using Rows = std::vector<std::vector<Dual>>;

inline Rows dense(const Rows& in, const std::vector<double>& w, const std::vector<double>& b,
                  std::size_t out) {
  Rows y(in.size(), std::vector<Dual>(out));
  for (std::size_t i = 0; i < in.size(); ++i) {
    for (std::size_t o = 0; o < out; ++o) {
      Dual acc = cst(b[o]);
      for (std::size_t k = 0; k < in[i].size(); ++k) acc = acc + in[i][k] * cst(w[k * out + o]);
      y[i][o] = acc;
    }
  }
  return y;
}

// Affine parameters as duals so any one of them can carry the tangent.
struct DualNorm {
  Norm kind;
  std::array<Dual, kHidden> gamma;
  std::array<Dual, kHidden> beta;
};

inline DualNorm lift(const NormParams& p) {
  DualNorm n{p.kind, {}, {}};
  for (std::size_t j = 0; j < kHidden; ++j) {
    n.gamma[j] = cst(p.gamma[j]);
    n.beta[j] = cst(p.beta[j]);
  }
  return n;
}

inline Rows norm_relu(const Rows& h, const DualNorm& p) {
  const std::size_t n = h.size();
  Rows y(n, std::vector<Dual>(kHidden));
  if (p.kind == Norm::kBatch) {
    for (std::size_t j = 0; j < kHidden; ++j) {
      Dual mean = cst(0.0);
      for (std::size_t i = 0; i < n; ++i) mean = mean + h[i][j];
      mean = mean / cst(static_cast<double>(n));
      Dual var = cst(0.0);
      for (std::size_t i = 0; i < n; ++i) var = var + (h[i][j] - mean) * (h[i][j] - mean);
      var = var / cst(static_cast<double>(n));
      const Dual sd = dsqrt(var + cst(kEps));
      for (std::size_t i = 0; i < n; ++i) y[i][j] = drelu(p.gamma[j] * (h[i][j] - mean) / sd + p.beta[j]);
    }
  } else {
    for (std::size_t i = 0; i < n; ++i) {
      Dual mean = cst(0.0);
      for (std::size_t j = 0; j < kHidden; ++j) mean = mean + h[i][j];
      mean = mean / cst(static_cast<double>(kHidden));
      Dual var = cst(0.0);
      for (std::size_t j = 0; j < kHidden; ++j) var = var + (h[i][j] - mean) * (h[i][j] - mean);
      var = var / cst(static_cast<double>(kHidden));
      const Dual sd = dsqrt(var + cst(kEps));
      for (std::size_t j = 0; j < kHidden; ++j) y[i][j] = drelu(p.gamma[j] * (h[i][j] - mean) / sd + p.beta[j]);
    }
  }
  return y;
}

inline Rows softmax(const Rows& z) {
  Rows p(z.size());
  for (std::size_t i = 0; i < z.size(); ++i) {
    double m = z[i][0].v;
    for (const Dual& v : z[i]) m = std::max(m, v.v);
    Dual sum = cst(0.0);
    std::vector<Dual> e(z[i].size());
    for (std::size_t c = 0; c < z[i].size(); ++c) {
      e[c] = dexp(z[i][c] - cst(m));
      sum = sum + e[c];
    }
    for (Dual& v : e) v = v / sum;
    p[i] = e;
  }
  return p;
}

// Fused class probabilities alpha * y_source + (1 - alpha) * y_adapt.
inline Rows fused(const Fixture& f, const std::vector<double>& x, const DualNorm& shallow,
                  const DualNorm& source, const DualNorm& adapt) {
  Rows in(f.batch, std::vector<Dual>(kIn));
  for (std::size_t i = 0; i < f.batch; ++i) {
    for (std::size_t k = 0; k < kIn; ++k) in[i][k] = cst(x[i * kIn + k]);
  }
  const Rows phi = norm_relu(dense(in, f.w1, f.b1, kHidden), shallow);
  const Rows h2 = dense(phi, f.w2, f.b2, kHidden);
  const Rows ys = softmax(dense(norm_relu(h2, source), f.w3, f.b3, f.classes));
  const Rows ya = softmax(dense(norm_relu(h2, adapt), f.w3, f.b3, f.classes));
  Rows y(f.batch, std::vector<Dual>(f.classes));
  for (std::size_t i = 0; i < f.batch; ++i) {
    for (std::size_t c = 0; c < f.classes; ++c) {
      y[i][c] = cst(f.alpha) * ys[i][c] + cst(1.0 - f.alpha) * ya[i][c];
    }
  }
  return y;
}

inline Dual entropy(const std::vector<Dual>& p) {
  Dual h = cst(0.0);
  for (const Dual& v : p) h = h - v * dlog(v);
  return h;
}

inline std::size_t argmax(const std::vector<Dual>& p) {
  std::size_t best = 0;
  for (std::size_t c = 1; c < p.size(); ++c) {
    if (p[c].v > p[best].v) best = c;
  }
  return best;
}

struct BatchOutcome {
  std::vector<std::vector<std::size_t>> selections;
  std::vector<std::size_t> prs;
  Params params;  // after the batch
};

inline std::vector<std::size_t> select(const Rows& y, double threshold) {
  std::vector<std::size_t> s;
  for (std::size_t i = 0; i < y.size(); ++i) {
    if (entropy(y[i]).v < threshold) s.push_back(i);
  }
  return s;
}

// Slot k in [0, 2*kHidden) addresses gamma[k] then beta[k - kHidden].
inline Dual& slot(DualNorm& n, std::size_t k) {
  return k < kHidden ? n.gamma[k] : n.beta[k - kHidden];
}
inline double& slot(NormParams& n, std::size_t k) {
  return k < kHidden ? n.gamma[k] : n.beta[k - kHidden];
}

inline std::vector<BatchOutcome> run(const Fixture& f) {
  const double threshold = f.factor * std::log(static_cast<double>(f.classes));
  Params p{f.n1, f.n2, f.n2};
  std::array<double, 2 * kHidden> buf_shallow{};
  std::array<double, 2 * kHidden> buf_adapt{};
  std::vector<BatchOutcome> out;

  for (std::size_t b = 0; b < f.batches; ++b) {
    const std::vector<double>& x = f.x[b];
    BatchOutcome o;
    Rows y = fused(f, x, lift(p.shallow), lift(p.source), lift(p.adapt));
    o.selections.push_back(select(y, threshold));
    for (std::size_t t = 0; t < f.max_iters; ++t) {
      const std::vector<std::size_t> s = o.selections.back();
      if (s.empty()) break;
      if (t > 0 && o.selections[t - 1] == s) break;
      std::vector<std::size_t> labels;
      for (std::size_t i : s) labels.push_back(argmax(y[i]));
      const double inv = 1.0 / static_cast<double>(s.size());

      std::array<double, 2 * kHidden> g_shallow{};
      std::array<double, 2 * kHidden> g_adapt{};
      for (std::size_t k = 0; k < 2 * kHidden; ++k) {
        DualNorm sh = lift(p.shallow);
        slot(sh, k).d = 1.0;
        const Rows yd = fused(f, x, sh, lift(p.source), lift(p.adapt));
        double l = 0.0;
        for (std::size_t i : s) l += entropy(yd[i]).d;
        g_shallow[k] = l * inv;
      }
      for (std::size_t k = 0; k < 2 * kHidden; ++k) {
        DualNorm ad = lift(p.adapt);
        slot(ad, k).d = 1.0;
        const Rows yd = fused(f, x, lift(p.shallow), lift(p.source), ad);
        double l = 0.0;
        for (std::size_t j = 0; j < s.size(); ++j) l -= dlog(yd[s[j]][labels[j]]).d;
        g_adapt[k] = l * inv;
      }
      for (std::size_t k = 0; k < 2 * kHidden; ++k) {
        buf_shallow[k] = f.momentum * buf_shallow[k] + g_shallow[k];
        slot(p.shallow, k) -= f.lr * buf_shallow[k];
        buf_adapt[k] = f.momentum * buf_adapt[k] + g_adapt[k];
        slot(p.adapt, k) -= f.lr * buf_adapt[k];
      }
      y = fused(f, x, lift(p.shallow), lift(p.source), lift(p.adapt));
      o.selections.push_back(select(y, threshold));
    }
    const auto& first = o.selections.front();
    for (std::size_t i : o.selections.back()) {
      if (!std::binary_search(first.begin(), first.end(), i)) o.prs.push_back(i);
    }
    o.params = p;
    out.push_back(o);
  }
  return out;
}

struct FixtureShape {
  std::size_t classes;
  std::size_t batch;
  Norm shallow_norm;
  Norm branch_norm;
  double alpha;
  double momentum;
  double factor;
  std::uint64_t seed;
};

inline Fixture make_fixture(const FixtureShape& s) {
  Fixture f;
  f.classes = s.classes;
  f.batch = s.batch;
  f.alpha = s.alpha;
  f.momentum = s.momentum;
  f.factor = s.factor;
  Stream r(s.seed);
  f.w1 = r.fill(kIn * kHidden, -1.0, 1.0);
  f.b1 = r.fill(kHidden, -0.2, 0.2);
  f.w2 = r.fill(kHidden * kHidden, -1.0, 1.0);
  f.b2 = r.fill(kHidden, -0.2, 0.2);
  f.w3 = r.fill(kHidden * s.classes, -1.5, 1.5);
  f.b3 = r.fill(s.classes, -0.2, 0.2);
  for (NormParams* n : {&f.n1, &f.n2}) {
    n->kind = n == &f.n1 ? s.shallow_norm : s.branch_norm;
    for (std::size_t j = 0; j < kHidden; ++j) {
      n->gamma[j] = r.uniform(0.8, 1.2);
      n->beta[j] = r.uniform(0.0, 0.3);
    }
  }
  for (std::size_t b = 0; b < f.batches; ++b) f.x.push_back(r.fill(s.batch * kIn, -2.0, 2.0));
  return f;
}

// The five pinned fixtures.
inline std::vector<FixtureShape> fixture_shapes() {
  return {
      {3, 6, Norm::kBatch, Norm::kBatch, 0.5, 0.9, 0.80, 101},
      {4, 16, Norm::kBatch, Norm::kBatch, 0.5, 0.9, 0.85, 202},
      {3, 8, Norm::kLayer, Norm::kLayer, 0.5, 0.9, 0.70, 303},
      {3, 10, Norm::kBatch, Norm::kLayer, 0.3, 0.9, 0.80, 404},
      {5, 12, Norm::kLayer, Norm::kBatch, 0.8, 0.0, 0.70, 505},
  };
}

}  // namespace poem_oracle
