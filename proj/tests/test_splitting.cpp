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

#include <algorithm>
#include <set>

#include "hetmap/benchgen.hpp"
#include "hetmap/formulation.hpp"
#include "hetmap/oracle.hpp"
#include "hetmap/solver.hpp"
#include "hetmap/splitting.hpp"
#include "support.hpp"

namespace hetmap {
namespace {

using testing::make_problem;

DnnGraph graph_of(int n, std::vector<std::pair<int, int>> edges) {
  std::vector<TaskNode> tasks;
  for (int i = 0; i < n; ++i) tasks.push_back(TaskNode{"v" + std::to_string(i), 1, 1, 1});
  return DnnGraph(std::move(tasks), std::move(edges));
}

// two triangles 0-1-2 and 3-4-5 joined by the bridge 2 -> 3
DnnGraph two_triangles() { return graph_of(6, {{0, 1}, {0, 2}, {1, 2}, {2, 3}, {3, 4}, {3, 5}, {4, 5}}); }

// triangles sharing vertex 2
DnnGraph bowtie() { return graph_of(5, {{0, 1}, {0, 2}, {1, 2}, {2, 3}, {2, 4}, {3, 4}}); }

Problem uniform_problem(const DnnGraph& g, int K, double bw) {
  std::vector<Device> devs;
  for (int u = 0; u < K; ++u) devs.push_back(Device{"d" + std::to_string(u), 1e9, {1}});
  HardwareSystem hw(devs);
  for (int u = 0; u < K; ++u) {
    for (int v = 0; v < K; ++v) {
      if (u != v) hw.set_bandwidth(u, v, bw);
    }
  }
  LatencyTable t;
  for (int i = 0; i < g.size(); ++i) {
    for (int u = 0; u < K; ++u) t.set(g.id(i), hw.id(u), 1, 1.0 + ((i * 7 + u * 3) % 5));
  }
  return Problem(g, hw, t, 1);
}

TEST(Bridges, PathEveryEdge) {
  auto rep = find_bridges_and_articulation_points(graph_of(4, {{0, 1}, {1, 2}, {2, 3}}));
  EXPECT_EQ(rep.bridges.size(), 3u);
  EXPECT_EQ(rep.articulation, (std::vector<int>{1, 2}));
  EXPECT_TRUE(rep.connected());
}

TEST(Bridges, TwoTriangles) {
  auto rep = find_bridges_and_articulation_points(two_triangles());
  ASSERT_EQ(rep.bridges.size(), 1u);
  EXPECT_EQ(rep.bridges[0], (std::pair<int, int>{2, 3}));
  EXPECT_EQ(rep.articulation, (std::vector<int>{2, 3}));
}

TEST(Bridges, BowtieHasNoBridge) {
  auto rep = find_bridges_and_articulation_points(bowtie());
  EXPECT_TRUE(rep.bridges.empty());
  EXPECT_EQ(rep.articulation, (std::vector<int>{2}));
}

TEST(Bridges, Disconnected) {
  auto rep = find_bridges_and_articulation_points(graph_of(4, {{0, 1}, {2, 3}}));
  EXPECT_EQ(rep.components, 2);
  EXPECT_FALSE(rep.connected());
}

TEST(DummyTransform, TurnsArticulationIntoBridge) {
  Problem p = uniform_problem(bowtie(), 2, 2.0);
  auto t = articulation_to_bridge_transform(p, 2);
  EXPECT_EQ(t.problem.task_count(), 6);
  auto rep = find_bridges_and_articulation_points(t.problem.graph());
  ASSERT_EQ(rep.bridges.size(), 1u);
  EXPECT_EQ(t.problem.ties().size(), 1u);
  EXPECT_EQ(t.old_index_of_new.back(), -1);
  EXPECT_NEAR(brute_force(t.problem).schedule.objective, brute_force(p).schedule.objective, 1e-9);
}

TEST(DummyTransform, RejectsNonArticulation) {
  Problem p = uniform_problem(bowtie(), 2, 2.0);
  try {
    articulation_to_bridge_transform(p, 0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kNotArticulation);
  }
}

TEST(KEdge, SingleChannelSplitsAtBridges) {
  auto d = k_edge_components(two_triangles(), 1);
  ASSERT_EQ(d.size(), 2);
  EXPECT_EQ(d.modules[0], (std::vector<int>{0, 1, 2}));
  EXPECT_EQ(d.cuts[0].size(), 1u);
  EXPECT_TRUE(d.chain);
  EXPECT_EQ(d.max_channels(), 1);
}

TEST(KEdge, WiderBudgetKeepsTwoChannelCut) {
  // two 4-cliques joined by two edges: a 2-channel cut, no bridge
  std::vector<std::pair<int, int>> e;
  for (int a = 0; a < 4; ++a) {
    for (int b = a + 1; b < 4; ++b) {
      e.emplace_back(a, b);
      e.emplace_back(a + 4, b + 4);
    }
  }
  e.emplace_back(2, 4);
  e.emplace_back(3, 5);
  DnnGraph g = graph_of(8, e);
  EXPECT_EQ(k_edge_components(g, 1).size(), 1);
  auto d = k_edge_components(g, 2);
  ASSERT_EQ(d.size(), 2);
  EXPECT_EQ(d.cuts[0].size(), 2u);
  EXPECT_THROW(k_edge_components(g, 0), Error);
}

std::set<int> truth_modules_of(const StackedGraph& sg, const std::vector<int>& mod) {
  std::set<int> owners;
  for (int v : mod) owners.insert(sg.truth.module_of[static_cast<size_t>(v)]);
  return owners;
}

TEST(KEdge, RefinesGeneratedModules) {
  for (int c = 1; c <= 3; ++c) {
    for (std::uint64_t seed = 1; seed <= 8; ++seed) {
      auto sg = gen_stacked(ModuleModel::er(0.4), 8, 4, c, ChannelMode::kSdep, seed);
      auto d = k_edge_components(sg.graph, c);
      EXPECT_LE(d.max_channels(), c);
      EXPECT_GE(d.size(), c == 1 ? 4 : 2) << "c " << c << " seed " << seed;
      for (const auto& mod : d.modules) EXPECT_EQ(truth_modules_of(sg, mod).size(), 1u) << "c " << c;
    }
  }
}

TEST(KEdge, DecompositionFromModulesValidates) {
  DnnGraph g = two_triangles();
  auto d = decomposition_from_modules(g, {{3, 4, 5}, {0, 1, 2}});
  EXPECT_EQ(d.modules[0], (std::vector<int>{0, 1, 2}));
  EXPECT_EQ(d.module_of[4], 1);
  EXPECT_THROW(decomposition_from_modules(g, {{0, 1, 2}, {3, 4}}), Error);
}

Problem stacked_problem(std::uint64_t seed, int n, int count, int K) {
  auto sg = gen_stacked(ModuleModel::er(0.5), n, count, 1, ChannelMode::kSdep, seed);
  auto specs = default3_devices();
  specs.resize(static_cast<size_t>(K));
  auto prof = synth_profile(sg.graph, specs, seed);
  return Problem(sg.graph, prof.hardware, prof.latency, 1);
}

TEST(MilpSplit, MatchesFullModelOnSingleChannelStacks) {
  for (std::uint64_t seed = 1; seed <= 6; ++seed) {
    Problem p = stacked_problem(seed, 3, 3, 2);
    auto d = k_edge_components(p.graph(), 1);
    auto res = milp_split(p, d, milp_module_solver(SolverOptions{}));
    EXPECT_FALSE(res.quasi_optimal);
    EXPECT_NO_THROW(validate_schedule(p, res.schedule));
    auto f = build_milp(p);
    auto r = solve(f, SolverOptions{});
    ASSERT_EQ(r.status, SolveStatus::kOptimal);
    EXPECT_NEAR(res.schedule.objective, r.objective, 1e-6) << "seed " << seed;
  }
}

TEST(MilpSplit, OracleAndMilpModuleSolversAgree) {
  for (std::uint64_t seed = 10; seed <= 13; ++seed) {
    Problem p = stacked_problem(seed, 3, 2, 2);
    auto d = k_edge_components(p.graph(), 1);
    auto a = milp_split(p, d, milp_module_solver(SolverOptions{}));
    auto b = milp_split(p, d, oracle_module_solver());
    EXPECT_NEAR(a.schedule.objective, b.schedule.objective, 1e-6);
  }
}

TEST(MilpSplit, SingleModuleIsTheModuleOptimum) {
  Problem p = uniform_problem(bowtie(), 2, 2.0);
  auto d = k_edge_components(p.graph(), 1);
  ASSERT_EQ(d.size(), 1);
  auto res = milp_split(p, d, oracle_module_solver());
  EXPECT_NEAR(res.schedule.objective, brute_force(p).schedule.objective, 1e-9);
}

TEST(MilpSplit, MultiChannelStaysValid) {
  for (std::uint64_t seed = 1; seed <= 4; ++seed) {
    auto sg = gen_stacked(ModuleModel::er(0.5), 4, 3, 2, ChannelMode::kSdep, seed);
    auto specs = default3_devices();
    specs.resize(2);
    auto prof = synth_profile(sg.graph, specs, seed);
    Problem p(sg.graph, prof.hardware, prof.latency, 1);
    auto d = k_edge_components(p.graph(), 2);
    auto res = milp_split(p, d, milp_module_solver(SolverOptions{}));
    EXPECT_NO_THROW(validate_schedule(p, res.schedule));
    auto f = build_milp(p);
    auto r = solve(f, SolverOptions{});
    ASSERT_TRUE(r.has_solution());
    EXPECT_GE(res.schedule.objective, r.objective - 1e-6);
  }
}

TEST(Decomposition, JsonListsIds) {
  DnnGraph g = two_triangles();
  auto doc = decomposition_to_json(g, k_edge_components(g, 1));
  EXPECT_EQ(doc["modules"].size(), 2u);
  EXPECT_EQ(doc["cuts"][0][0][0], "v2");
}

}  // namespace
}  // namespace hetmap
