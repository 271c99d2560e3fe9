/**
 * Copyright 2026 The hetmap Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 * http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */
#include <gtest/gtest.h>

#include <random>

#include "hetmap/lp.hpp"
#include "hetmap/milp_model.hpp"
#include "hetmap/solver.hpp"

namespace hetmap {
namespace {

constexpr double kInfty = std::numeric_limits<double>::infinity();

TEST(DualSimplex, SmallBoundedLp) {
  // min x + y  s.t.  x + 2y >= 4, 3x + y >= 6, 0 <= x,y <= 10  -> x=1.6, y=1.2
  DualSimplex lp({1.0, 1.0}, {0.0, 0.0}, {10.0, 10.0},
                 {LpRow{{{0, 1.0}, {1, 2.0}}, 4.0, kInfty}, LpRow{{{0, 3.0}, {1, 1.0}}, 6.0, kInfty}});
  ASSERT_EQ(lp.solve(), DualSimplex::Status::kOptimal);
  EXPECT_NEAR(lp.objective(), 2.8, 1e-9);
  EXPECT_NEAR(lp.value(0), 1.6, 1e-9);
  EXPECT_NEAR(lp.value(1), 1.2, 1e-9);
}

TEST(DualSimplex, DetectsInfeasibility) {
  DualSimplex lp({1.0}, {0.0}, {1.0}, {LpRow{{{0, 1.0}}, 2.0, kInfty}});
  EXPECT_EQ(lp.solve(), DualSimplex::Status::kInfeasible);
}

TEST(DualSimplex, WarmStartAfterBoundChange) {
  DualSimplex lp({1.0, 1.0}, {0.0, 0.0}, {10.0, 10.0},
                 {LpRow{{{0, 1.0}, {1, 2.0}}, 4.0, kInfty}, LpRow{{{0, 3.0}, {1, 1.0}}, 6.0, kInfty}});
  ASSERT_EQ(lp.solve(), DualSimplex::Status::kOptimal);
  lp.set_bounds(0, 0.0, 0.0);
  ASSERT_EQ(lp.solve(), DualSimplex::Status::kOptimal);
  EXPECT_NEAR(lp.objective(), 6.0, 1e-9);
  lp.set_bounds(0, 0.0, 10.0);
  ASSERT_EQ(lp.solve(), DualSimplex::Status::kOptimal);
  EXPECT_NEAR(lp.objective(), 2.8, 1e-9);
}

// Knapsack-style covering problems checked against exhaustive enumeration.
TEST(BranchAndBound, MatchesEnumerationOnRandomCovering) {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 40; ++trial) {
    const int n = 6;
    MilpModel m;
    std::vector<double> w(n);
    std::vector<double> c(n);
    for (int j = 0; j < n; ++j) {
      m.add_binary("y" + std::to_string(j));
      w[static_cast<size_t>(j)] = 1.0 + static_cast<double>(rng() % 9);
      c[static_cast<size_t>(j)] = 1.0 + static_cast<double>(rng() % 7);
    }
    LinExpr cover;
    LinExpr obj;
    for (int j = 0; j < n; ++j) {
      cover.emplace_back(j, w[static_cast<size_t>(j)]);
      obj.emplace_back(j, c[static_cast<size_t>(j)]);
    }
    double need = 5.0 + static_cast<double>(rng() % 15);
    m.add_constraint("cover", cover, Sense::kGe, need);
    m.add_constraint("pair", {{0, 1.0}, {1, 1.0}}, Sense::kLe, 1.0);
    m.set_objective(obj);

    double best = kInfty;
    for (int mask = 0; mask < (1 << n); ++mask) {
      if ((mask & 3) == 3) continue;
      double ww = 0.0;
      double cc = 0.0;
      for (int j = 0; j < n; ++j) {
        if (mask & (1 << j)) {
          ww += w[static_cast<size_t>(j)];
          cc += c[static_cast<size_t>(j)];
        }
      }
      if (ww >= need) best = std::min(best, cc);
    }
    auto r = solve(m, SolverOptions{10.0, ""});
    if (!std::isfinite(best)) {
      EXPECT_EQ(r.status, SolveStatus::kInfeasible);
    } else {
      ASSERT_EQ(r.status, SolveStatus::kOptimal);
      EXPECT_NEAR(r.objective, best, 1e-6);
      EXPECT_EQ(r.gap, 0.0);
    }
  }
}

}  // namespace
}  // namespace hetmap
