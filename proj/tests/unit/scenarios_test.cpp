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

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <sstream>

#include <gtest/gtest.h>

#include "poemtta/error.hpp"
#include "poemtta/nn/arch.hpp"
#include "poemtta/scenarios/shift.hpp"
#include "poemtta/scenarios/stream.hpp"
#include "poemtta/scenarios/table_io.hpp"
#include "poemtta/scenarios/task.hpp"
#include "poemtta/scenarios/training.hpp"
#include "poemtta/seed.hpp"

namespace poem::scenarios {
namespace {

using nn::Matrix;

std::multiset<std::vector<double>> rows_with_labels(const Matrix& x, std::span<const std::size_t> y) {
  std::multiset<std::vector<double>> out;
  for (std::size_t r = 0; r < x.rows(); ++r) {
    std::vector<double> row(x.row(r).begin(), x.row(r).end());
    row.push_back(static_cast<double>(y[r]));
    out.insert(row);
  }
  return out;
}

double row_norm(std::span<const double> r) {
  double s = 0.0;
  for (double v : r) s += v * v;
  return std::sqrt(s);
}

TEST(Task, SameSeedIsBitwiseIdentical) {
  const auto a = make_source_task(3, 5, 7, 200);
  const auto b = make_source_task(3, 5, 7, 200);
  EXPECT_EQ(a.x, b.x);
  EXPECT_EQ(a.y, b.y);
  const auto c = make_source_task(4, 5, 7, 200);
  EXPECT_FALSE(a.x == c.x);
}

TEST(Task, BalancedClasses) {
  const auto a = make_source_task(1, 4, 8, 400);
  EXPECT_EQ(class_histogram(a), (std::vector<std::size_t>{100, 100, 100, 100}));
  const auto b = make_test_set(1, 3, 4, 100);
  EXPECT_EQ(class_histogram(b), (std::vector<std::size_t>{34, 33, 33}));
}

TEST(Task, RejectsInvalidSizes) {
  EXPECT_THROW(make_source_task(0, 1, 4, 100), ContractError);
  EXPECT_THROW(make_source_task(0, 3, 1, 100), ContractError);
  EXPECT_THROW(make_source_task(0, 3, 4, 29), ContractError);
}

TEST(Task, MeansAreEquidistant) {
  const auto g = make_task_geometry(9, 5, 12, 4.0);
  for (std::size_t a = 0; a < 5; ++a) {
    for (std::size_t b = a + 1; b < 5; ++b) {
      double d2 = 0.0;
      for (std::size_t k = 0; k < 12; ++k) d2 += std::pow(g.means(a, k) - g.means(b, k), 2);
      EXPECT_NEAR(std::sqrt(d2), 4.0, 1e-9);
    }
  }
  for (double s : g.scales) {
    EXPECT_GE(s, 0.5);
    EXPECT_LE(s, 1.0);
  }
}

TEST(Task, TestSetSharesGeometryButNotSamples) {
  const auto train = make_source_task(2, 3, 4, 300);
  const auto test = make_test_set(2, 3, 4, 300);
  EXPECT_FALSE(train.x == test.x);
  // Class means of both splits agree to sampling accuracy.
  for (std::size_t c = 0; c < 3; ++c) {
    for (std::size_t k = 0; k < 4; ++k) {
      double ma = 0.0, mb = 0.0;
      for (std::size_t i = 0; i < 300; ++i) {
        if (train.y[i] == c) ma += train.x(i, k) / 100.0;
        if (test.y[i] == c) mb += test.x(i, k) / 100.0;
      }
      EXPECT_NEAR(ma, mb, 0.35);
    }
  }
}

TEST(Training, WellSeparatedTwoClassProbeIsNearPerfect) {
  const auto train = make_source_task(5, 2, 2, 400, 6.0);
  const auto test = make_test_set(5, 2, 2, 2000, 6.0);
  TrainOptions opts;
  opts.seed = 1;
  const auto r = train_source_model(train, nn::ArchSpec::parse("8,bn,relu|8,bn,relu"), opts);
  EXPECT_GT(accuracy(r.network, test), 0.99);
}

TEST(Training, FourClassTaskReachesHighTrainAccuracy) {
  const auto train = make_source_task(6, 4, 8, 800);
  TrainOptions opts;
  opts.seed = 2;
  const auto r = train_source_model(train, nn::ArchSpec::parse(nn::kDefaultArch), opts);
  EXPECT_GE(r.train_accuracy, 0.95);
  EXPECT_TRUE(std::isfinite(r.final_loss));
}

TEST(Training, ZeroLearningRateKeepsInitialWeights) {
  const auto train = make_source_task(6, 3, 4, 120);
  const auto arch = nn::ArchSpec::parse("8,bn,relu|8,bn,relu");
  TrainOptions opts;
  opts.epochs = 1;
  opts.lr = 0.0;
  opts.seed = 3;
  const auto r = train_source_model(train, arch, opts);
  const auto init = nn::build_network(arch, 4, 3, derive_seed(opts.seed, "init"));
  for (std::size_t k = 0; k < init.layers.size(); ++k) {
    if (const auto* d = std::get_if<nn::DenseLayer>(&init.layers[k])) {
      EXPECT_EQ(std::get<nn::DenseLayer>(r.network.layers[k]).weight.value, d->weight.value);
    }
  }
}

TEST(Training, DeterministicAndFrozen) {
  const auto train = make_source_task(8, 3, 5, 150);
  TrainOptions opts;
  opts.epochs = 3;
  opts.seed = 4;
  const auto arch = nn::ArchSpec::parse("8,bn,relu|8,bn,relu");
  const auto a = train_source_model(train, arch, opts);
  const auto b = train_source_model(train, arch, opts);
  const auto pa = nn::const_params_of(a.network.layers);
  const auto pb = nn::const_params_of(b.network.layers);
  ASSERT_EQ(pa.size(), pb.size());
  for (std::size_t i = 0; i < pa.size(); ++i) {
    EXPECT_EQ(pa[i]->value, pb[i]->value);
    EXPECT_FALSE(pa[i]->trainable);
  }
  for (std::size_t k = 0; k < a.network.layers.size(); ++k) {
    if (const auto* n = std::get_if<nn::NormLayer>(&a.network.layers[k])) {
      EXPECT_EQ(n->running_var, std::get<nn::NormLayer>(b.network.layers[k]).running_var);
      for (double v : n->running_var.data()) EXPECT_GE(v, 0.0);
    }
  }
}

TEST(Training, DivergenceIsReported) {
  const auto train = make_source_task(8, 3, 5, 150);
  TrainOptions opts;
  opts.lr = 1e308;
  opts.seed = 5;
  EXPECT_THROW(train_source_model(train, nn::ArchSpec::parse("8|8"), opts), TrainingError);
}

TEST(Shift, ZeroMagnitudeIsIdentity) {
  const auto data = make_test_set(1, 3, 6, 60);
  for (ShiftKind kind : kAllShiftKinds) {
    const auto out = apply_shift(data, {kind, 5, 0.0}, 9);
    EXPECT_EQ(out.x, data.x) << to_string(kind);
    EXPECT_EQ(out.y, data.y);
  }
}

TEST(Shift, LabelsAndCountPreserved) {
  const auto data = make_test_set(2, 4, 6, 80);
  for (ShiftKind kind : kAllShiftKinds) {
    for (int sev = 1; sev <= 5; ++sev) {
      const auto out = apply_shift(data, {kind, sev}, 3);
      EXPECT_EQ(out.y, data.y);
      EXPECT_EQ(out.x.rows(), data.x.rows());
      EXPECT_EQ(out.x.cols(), data.x.cols());
      EXPECT_TRUE(out.x.all_finite());
    }
  }
}

TEST(Shift, RotationPreservesRowNorms) {
  const auto data = make_test_set(3, 4, 7, 80);
  const auto out = apply_shift(data, {ShiftKind::kRotation, 4}, 5);
  EXPECT_FALSE(out.x == data.x);
  for (std::size_t r = 0; r < data.x.rows(); ++r) {
    EXPECT_NEAR(row_norm(out.x.row(r)), row_norm(data.x.row(r)), 1e-9);
  }
}

TEST(Shift, FeatureScaleTouchesHalfTheCoordinates) {
  const auto data = make_test_set(3, 4, 8, 80);
  const auto out = apply_shift(data, {ShiftKind::kFeatureScale, 2}, 5);
  std::size_t scaled = 0;
  for (std::size_t k = 0; k < 8; ++k) {
    const double ratio = out.x(0, k) / data.x(0, k);
    if (std::abs(ratio - 1.6) < 1e-12) {
      ++scaled;
    } else {
      EXPECT_DOUBLE_EQ(ratio, 1.0);
    }
  }
  EXPECT_EQ(scaled, 4u);
}

TEST(Shift, MeanShiftIsAConstantOffset) {
  const auto data = make_test_set(3, 4, 8, 40);
  const auto out = apply_shift(data, {ShiftKind::kMeanShift, 3}, 5);
  std::vector<double> offset(8);
  for (std::size_t k = 0; k < 8; ++k) offset[k] = out.x(0, k) - data.x(0, k);
  EXPECT_NEAR(row_norm(offset), 0.4 * 3, 1e-9);
  for (std::size_t r = 1; r < 40; ++r) {
    for (std::size_t k = 0; k < 8; ++k) EXPECT_NEAR(out.x(r, k) - data.x(r, k), offset[k], 1e-9);
  }
}

TEST(Shift, GaussNoiseScaleMatchesSeverity) {
  const auto data = make_test_set(3, 4, 8, 4000);
  const auto out = apply_shift(data, {ShiftKind::kGaussNoise, 5}, 5);
  double ss = 0.0;
  for (std::size_t i = 0; i < out.x.size(); ++i) ss += std::pow(out.x.data()[i] - data.x.data()[i], 2);
  EXPECT_NEAR(std::sqrt(ss / static_cast<double>(out.x.size())), 1.0, 0.02);
}

TEST(Shift, SpecValidation) {
  EXPECT_THROW((ShiftSpec{ShiftKind::kRotation, 0}.validate()), ConfigError);
  EXPECT_THROW((ShiftSpec{ShiftKind::kRotation, 6}.validate()), ConfigError);
  EXPECT_THROW((ShiftSpec{ShiftKind::kRotation, 3, -1.0}.validate()), ConfigError);
  EXPECT_EQ((ShiftSpec{ShiftKind::kMeanShift, 2}.label()), "mean_shift@2");
  for (ShiftKind k : kAllShiftKinds) EXPECT_EQ(parse_shift_kind(to_string(k)), k);
  EXPECT_THROW(parse_shift_kind("blur"), ConfigError);
}

TEST(Shift, SourceAccuracyDegradesWithSeverity) {
  std::map<ShiftKind, int> monotone_seeds;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto train = make_source_task(seed, 4, 8, 400);
    TrainOptions opts;
    opts.epochs = 4;
    opts.seed = seed;
    const auto model = train_source_model(train, nn::ArchSpec::parse(nn::kDefaultArch), opts);
    const auto test = make_test_set(seed, 4, 8, 800);
    for (ShiftKind kind : kAllShiftKinds) {
      double prev = 1.0;
      bool monotone = true;
      for (int sev = 1; sev <= 5; ++sev) {
        const double acc = accuracy(model.network, apply_shift(test, {kind, sev}, derive_seed(seed, "shift")));
        monotone = monotone && acc <= prev;
        prev = acc;
      }
      monotone_seeds[kind] += monotone ? 1 : 0;
    }
  }
  for (ShiftKind kind : kAllShiftKinds) EXPECT_GE(monotone_seeds[kind], 8) << to_string(kind);
}

TEST(Stream, ImbalancedBatchesAreSingleClass) {
  const auto data = make_test_set(4, 4, 5, 256);
  StreamScenario sc;
  sc.regime = Regime::kImbalancedLabel;
  sc.batch_size = 64;
  sc.seed = 12;
  const auto stream = make_stream(data, sc);
  ASSERT_EQ(stream.size(), 4u);
  std::set<std::size_t> seen;
  for (const Batch& b : stream) {
    const auto labels = b.labels.reveal();
    EXPECT_TRUE(std::all_of(labels.begin(), labels.end(), [&](std::size_t y) { return y == labels[0]; }));
    seen.insert(labels[0]);
  }
  EXPECT_EQ(seen.size(), 4u);
}

TEST(Stream, SingleSampleBatches) {
  const auto data = make_test_set(4, 3, 5, 50);
  StreamScenario sc;
  sc.regime = Regime::kSingleSample;
  sc.batch_size = 1;
  const auto stream = make_stream(data, sc);
  ASSERT_EQ(stream.size(), 50u);
  for (const Batch& b : stream) EXPECT_EQ(b.x.rows(), 1u);
  sc.batch_size = 2;
  EXPECT_THROW(make_stream(data, sc), ConfigError);
}

TEST(Stream, SameSeedSameOrder) {
  const auto data = make_test_set(4, 3, 5, 100);
  StreamScenario sc;
  sc.batch_size = 16;
  sc.shifts = {{ShiftKind::kGaussNoise, 3}};
  sc.seed = 5;
  const auto a = make_stream(data, sc);
  const auto b = make_stream(data, sc);
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(a[i].x, b[i].x);
  sc.seed = 6;
  EXPECT_FALSE(make_stream(data, sc)[0].x == a[0].x);
  EXPECT_EQ(a.back().x.rows(), 100u % 16u);
}

TEST(Stream, IsAPermutationOfTheShiftedSet) {
  const auto data = make_test_set(4, 3, 5, 100);
  for (Regime regime : {Regime::kStandard, Regime::kImbalancedLabel}) {
    StreamScenario sc;
    sc.regime = regime;
    sc.batch_size = 16;
    sc.shifts = {{ShiftKind::kRotation, 2}};
    sc.seed = 8;
    const auto shifted = apply_shift(data, sc.shifts[0], shift_seed(sc.seed, 0));
    std::multiset<std::vector<double>> got;
    for (const Batch& b : make_stream(data, sc)) {
      const auto part = rows_with_labels(b.x, b.labels.reveal());
      got.insert(part.begin(), part.end());
    }
    EXPECT_EQ(got, rows_with_labels(shifted.x, shifted.y));
  }
}

TEST(Stream, MixedShiftCyclesThroughDomains) {
  const auto data = make_test_set(4, 3, 5, 160);
  StreamScenario sc;
  sc.regime = Regime::kMixedShift;
  sc.batch_size = 10;
  sc.shifts = {{ShiftKind::kGaussNoise, 5}, {ShiftKind::kRotation, 5}, {ShiftKind::kMeanShift, 5}};
  sc.seed = 2;
  const auto stream = make_stream(data, sc);
  ASSERT_EQ(stream.size(), 16u);
  for (std::size_t b = 0; b + 3 <= stream.size(); b += 3) {
    std::set<std::string> labels;
    for (std::size_t k = b; k < b + 3; ++k) labels.insert(stream[k].shift->label());
    EXPECT_EQ(labels.size(), 3u);
  }
  sc.shifts.clear();
  EXPECT_THROW(make_stream(data, sc), ConfigError);
}

TEST(Stream, OversizedBatchIsRejected) {
  const auto data = make_test_set(4, 3, 5, 40);
  StreamScenario sc;
  sc.batch_size = 41;
  EXPECT_THROW(make_stream(data, sc), ContractError);
}

TEST(Seal, RevealInsideAdaptationIsCounted) {
  SealedLabels::reset_violations();
  SealedLabels labels(std::vector<std::size_t>{1, 2});
  (void)labels.reveal();
  EXPECT_EQ(SealedLabels::violations(), 0u);
  {
    AdaptationScope scope;
    EXPECT_TRUE(AdaptationScope::active());
    (void)labels.reveal();
  }
  EXPECT_FALSE(AdaptationScope::active());
  EXPECT_EQ(SealedLabels::violations(), 1u);
  SealedLabels::reset_violations();
}

TEST(TableIo, DatasetRoundTripIsExact) {
  const auto data = apply_shift(make_test_set(1, 3, 4, 30), {ShiftKind::kGaussNoise, 5}, 1);
  std::stringstream buf;
  write_dataset(buf, data);
  const auto back = read_dataset(buf);
  EXPECT_EQ(back.x, data.x);
  EXPECT_EQ(back.y, data.y);
  EXPECT_EQ(back.num_classes, 3u);
}

TEST(TableIo, StreamRoundTripIsExact) {
  const auto data = make_test_set(1, 3, 4, 30);
  StreamScenario sc;
  sc.batch_size = 8;
  const auto stream = make_stream(data, sc);
  std::stringstream buf;
  write_stream(buf, stream, 3);
  std::size_t classes = 0;
  const auto back = read_stream(buf, &classes);
  EXPECT_EQ(classes, 3u);
  ASSERT_EQ(back.size(), stream.size());
  for (std::size_t b = 0; b < back.size(); ++b) {
    EXPECT_EQ(back[b].x, stream[b].x);
    const auto l1 = back[b].labels.reveal();
    const auto l2 = stream[b].labels.reveal();
    EXPECT_TRUE(std::equal(l1.begin(), l1.end(), l2.begin(), l2.end()));
  }
}

TEST(TableIo, MalformedInputIsRejected) {
  std::stringstream truncated("2 2 2\n0 1.0 2.0\n");
  EXPECT_THROW(read_dataset(truncated), IoError);
  std::stringstream garbage("2 2 2\n0 1.0 x\n1 0 0\n");
  EXPECT_THROW(read_dataset(garbage), IoError);
  std::stringstream bad_label("1 1 2 1\n0 5 1.0\n");
  EXPECT_THROW(read_stream(bad_label), IoError);
}

}  // namespace
}  // namespace poem::scenarios
