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

#include <filesystem>
#include <fstream>
#include <sstream>

#include "hetmap/formulation.hpp"
#include "hetmap/oracle.hpp"
#include "hetmap/solver.hpp"
#include "support.hpp"

namespace hetmap {
namespace {

using testing::make_problem;
using testing::tiny_problem;
using testing::TinySpec;

Problem chain2() {
  return make_problem({{"a", 4, 1, 10}, {"b", 6, 10, 2}}, {{"a", "b"}},
                      {{"x", 100, {1, 2}}, {"y", 100, {2}}}, {{"x", "y", 5.0}, {"y", "x", 5.0}},
                      {{"a", "x", 1, 3}, {"a", "x", 2, 5}, {"a", "y", 2, 8}, {"b", "x", 1, 4}, {"b", "x", 2, 7},
                       {"b", "y", 2, 2}},
                      2);
}

double solve_obj(const Problem& p, const BuildOptions& b = {}) {
  auto f = build_milp(p, b);
  auto r = solve(f, SolverOptions{60.0, ""});
  EXPECT_EQ(r.status, SolveStatus::kOptimal);
  auto s = extract_schedule(p, f, r.values);
  EXPECT_NO_THROW(validate_schedule(p, s));
  EXPECT_NEAR(s.objective, r.objective, 1e-6);
  return s.objective;
}

TEST(Formulation, ColumnCounts) {
  Problem p = chain2();
  auto f = build_milp(p);
  // x: 2*2*2, b: 2*(2+1), s: 4, C, no ordering pairs (a,b related)
  EXPECT_EQ(f.model.count(VarKind::kBinary), 8 + 6);
  EXPECT_EQ(f.model.count(VarKind::kContinuous), 5);
  EXPECT_EQ(f.ordering_pairs, 0);
  auto loose = build_milp(p, BuildOptions{Objective::kLatency, false, true});
  EXPECT_EQ(loose.ordering_pairs, 1);
  EXPECT_GT(loose.model.var_count(), f.model.var_count());
}

TEST(Formulation, GoldenLpText) {
  std::ifstream in(std::string(HETMAP_SOURCE_DIR) + "/tests/data/chain2.lp");
  ASSERT_TRUE(in) << "missing fixture";
  std::stringstream want;
  want << in.rdbuf();
  EXPECT_EQ(export_lp(build_milp(chain2()).model), want.str());
}

TEST(Formulation, HandInstanceOptimum) {
  // a on x as one batch (5), transfer 10/5 = 2, b on y as one batch (2)
  EXPECT_NEAR(solve_obj(chain2()), 9.0, 1e-6);
}

TEST(Formulation, ExtractionIgnoresStartNoise) {
  // z takes no time, so the solver may report a's start a hair before z's
  Problem p = make_problem({{"z", 0, 0, 4}, {"a", 1, 4, 1}}, {{"z", "a"}}, {{"x", 100, {1}}}, {},
                           {{"z", "x", 1, 0.0}, {"a", "x", 1, 2.0}}, 1);
  auto f = build_milp(p);
  auto r = solve(f, SolverOptions{10.0, ""});
  ASSERT_EQ(r.status, SolveStatus::kOptimal);
  auto values = r.values;
  values[static_cast<size_t>(f.s_var(0, 0))] = 1.0000006;
  values[static_cast<size_t>(f.s_var(1, 0))] = 1.0000004;
  auto s = extract_schedule(p, f, values);
  EXPECT_NEAR(validate_schedule(p, s), 2.0, 1e-9);
}

TEST(Formulation, MatchesOracle) {
  for (std::uint64_t seed = 1; seed <= 25; ++seed) {
    TinySpec spec;
    spec.tasks = 4 + static_cast<int>(seed % 3);
    spec.devices = 2 + static_cast<int>(seed % 2);
    spec.inputs = seed % 4 == 0 ? 2 : 1;
    spec.drop_links = seed % 5 == 0;
    Problem p = tiny_problem(seed, spec);
    EXPECT_NEAR(solve_obj(p), brute_force(p).schedule.objective, 1e-6) << "seed " << seed;
  }
}

TEST(Formulation, PruningAndLoadRowsKeepOptimum) {
  for (std::uint64_t seed = 40; seed < 52; ++seed) {
    TinySpec spec;
    spec.tasks = 5;
    spec.edge_p = 0.5;
    Problem p = tiny_problem(seed, spec);
    double base = solve_obj(p);
    EXPECT_NEAR(solve_obj(p, BuildOptions{Objective::kLatency, false, true}), base, 1e-6);
    EXPECT_NEAR(solve_obj(p, BuildOptions{Objective::kLatency, true, false}), base, 1e-6);
  }
}

TEST(Formulation, PinsAndTiesRespected) {
  TinySpec spec;
  spec.tasks = 4;
  Problem p = tiny_problem(3, spec);
  p.set_pin(0, 1);
  p.add_tie(1, 2);
  auto f = build_milp(p);
  auto r = solve(f, SolverOptions{});
  ASSERT_EQ(r.status, SolveStatus::kOptimal);
  auto s = extract_schedule(p, f, r.values);
  EXPECT_NO_THROW(validate_schedule(p, s));
  EXPECT_NEAR(s.objective, brute_force(p).schedule.objective, 1e-6);
}

TEST(Formulation, MemoryInfeasible) {
  Problem p = make_problem({{"a", 50, 10, 10}}, {}, {{"x", 10, {1}}}, {}, {{"a", "x", 1, 1}}, 1);
  auto r = solve(build_milp(p), SolverOptions{});
  EXPECT_EQ(r.status, SolveStatus::kInfeasible);
}

TEST(Formulation, EmbeddedCapEnforced) {
  TinySpec spec;
  spec.tasks = 17;
  spec.devices = 3;
  spec.inputs = 2;
  Problem p = tiny_problem(1, spec);
  try {
    solve(build_milp(p), SolverOptions{});
    FAIL() << "cap not enforced";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kCapExceeded);
  }
}

TEST(Symmetry, RejectsNonInterchangeableGroup) {
  TinySpec spec;
  spec.devices = 3;
  Problem p = tiny_problem(2, spec);
  auto f = build_milp(p);
  try {
    add_symmetry_constraints(f, p, device_groups({{0, 1}}), SymmetryCriterion::kTask);
    FAIL() << "expected kNotInterchangeable";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kNotInterchangeable);
  }
}

TEST(Symmetry, CriteriaKeepOptimum) {
  for (std::uint64_t seed = 1; seed <= 6; ++seed) {
    TinySpec spec;
    spec.tasks = 5;
    spec.devices = 3;
    spec.identical_devices = true;
    Problem p = tiny_problem(seed, spec);
    double base = solve_obj(p);
    for (auto c : {SymmetryCriterion::kBatch, SymmetryCriterion::kTask, SymmetryCriterion::kTime}) {
      auto f = build_milp(p);
      add_symmetry_constraints(f, p, device_groups({{0, 1, 2}}), c);
      auto r = solve(f, SolverOptions{});
      ASSERT_EQ(r.status, SolveStatus::kOptimal);
      EXPECT_NEAR(r.objective, base, 1e-6);
    }
  }
}

TEST(Solver, ExternalBackendAgrees) {
  std::string backend = std::string(HETMAP_SOURCE_DIR) + "/tools/scipy_milp_backend.py";
  if (std::system("python3 -c 'import scipy.optimize' >/dev/null 2>&1") != 0) GTEST_SKIP() << "no scipy";
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    TinySpec spec;
    spec.tasks = 5;
    Problem p = tiny_problem(seed, spec);
    auto f = build_milp(p);
    auto a = solve(f, SolverOptions{60.0, ""});
    auto b = solve(f, SolverOptions{60.0, backend});
    ASSERT_EQ(b.status, SolveStatus::kOptimal);
    EXPECT_NEAR(a.objective, b.objective, 1e-6);
    EXPECT_NO_THROW(validate_schedule(p, extract_schedule(p, f, b.values)));
  }
}

TEST(Solver, RejectsBadTimeout) {
  MilpModel m;
  EXPECT_THROW(solve(m, SolverOptions{0.0, ""}), Error);
}

}  // namespace
}  // namespace hetmap
