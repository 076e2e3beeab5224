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

#include <gtest/gtest.h>

#include "engine_check.hpp"

namespace poem_oracle {
namespace {

class OracleFixture : public ::testing::TestWithParam<std::size_t> {};

TEST_P(OracleFixture, EngineMatchesReference) {
  const auto rep = check_fixture(fixture_shapes()[GetParam()]);
  EXPECT_EQ(rep.selection_mismatches, 0u) << rep.first_failure;
  EXPECT_EQ(rep.prs_mismatches, 0u) << rep.first_failure;
  EXPECT_LE(rep.max_param_diff, 1e-10);
  EXPECT_TRUE(rep.source_untouched);
  EXPECT_GT(rep.batches, 0u);
  if (rep.update_rounds > 0) {
    EXPECT_GT(rep.max_param_move, 1e-4);
  }
}

INSTANTIATE_TEST_SUITE_P(Pinned, OracleFixture, ::testing::Range<std::size_t>(0, 5));

TEST(Oracle, FixturesExerciseTheLoop) {
  std::size_t rounds = 0;
  std::size_t prs = 0;
  std::size_t empty = 0;
  for (const auto& shape : fixture_shapes()) {
    const auto rep = check_fixture(shape);
    rounds += rep.update_rounds;
    prs += rep.prs_total;
    empty += rep.empty_selection_batches;
  }
  EXPECT_GT(rounds, 0u);
  EXPECT_GT(prs, 0u);
  EXPECT_GT(empty, 0u);
}

TEST(Oracle, DualNumbersMatchFiniteDifferences) {
  const Fixture f = make_fixture(fixture_shapes()[0]);
  const auto loss = [&](double g) {
    NormParams sh = f.n1;
    sh.gamma[2] = g;
    DualNorm d = lift(sh);
    d.gamma[2].d = 1.0;
    const Rows y = fused(f, f.x[0], d, lift(f.n2), lift(f.n2));
    Dual h = cst(0.0);
    for (const auto& row : y) h = h + entropy(row);
    return h;
  };
  const double g0 = f.n1.gamma[2];
  const double h = 1e-6;
  const double fd = (loss(g0 + h).v - loss(g0 - h).v) / (2.0 * h);
  EXPECT_NEAR(loss(g0).d, fd, 1e-6 * std::max(1.0, std::abs(fd)));
}

}  // namespace
}  // namespace poem_oracle
