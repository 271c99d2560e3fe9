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

#include <cmath>

#include <set>

#include "hetmap/benchgen.hpp"
#include "hetmap/bounds.hpp"
#include "hetmap/splitting.hpp"

namespace hetmap {
namespace {

TEST(Module, ShapeAndSizes) {
  for (auto model : {ModuleModel::er(0.2), ModuleModel::ws(4, 0.3), ModuleModel::ba(2)}) {
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
      DnnGraph g = gen_module(model, 12, seed);
      ASSERT_EQ(g.size(), 14);
      EXPECT_EQ(g.id(0), "in");
      EXPECT_EQ(g.id(13), "out");
      EXPECT_EQ(g.topological_order().size(), 14u);  // acyclic, or the constructor throws
      for (int i = 1; i <= 12; ++i) {
        EXPECT_FALSE(g.predecessors(i).empty());
        EXPECT_FALSE(g.successors(i).empty());
        EXPECT_GE(g.task(i).om, 1e5);
        EXPECT_LE(g.task(i).om, 2e6);
        EXPECT_GE(g.task(i).wm, 1e5);
        EXPECT_LE(g.task(i).wm, 1e7);
      }
      EXPECT_EQ(g.task(0).wm, 0.0);
      EXPECT_EQ(g.task(13).wm, 0.0);
      for (auto [a, b] : g.edges()) EXPECT_LT(a, b);
    }
  }
}

TEST(Module, WattsStrogatzKeepsNodesConnected) {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    DnnGraph g = gen_module(ModuleModel::ws(2, 0.9), 10, seed);
    for (int i = 1; i <= 10; ++i) {
      int internal = 0;
      for (int j : g.successors(i)) internal += j != 11;
      for (int j : g.predecessors(i)) internal += j != 0;
      EXPECT_GE(internal, 1) << "seed " << seed << " node " << i;
    }
  }
}

TEST(Module, Deterministic) {
  EXPECT_EQ(save_graph(gen_module(ModuleModel::er(0.3), 9, 77)), save_graph(gen_module(ModuleModel::er(0.3), 9, 77)));
  EXPECT_NE(save_graph(gen_module(ModuleModel::er(0.3), 9, 77)), save_graph(gen_module(ModuleModel::er(0.3), 9, 78)));
}

TEST(Module, RejectsBadParameters) {
  EXPECT_THROW(gen_module(ModuleModel::er(1.5), 5, 1), Error);
  EXPECT_THROW(gen_module(ModuleModel::ws(3, 0.1), 6, 1), Error);
  EXPECT_THROW(gen_module(ModuleModel::ba(6), 6, 1), Error);
  EXPECT_THROW(gen_module(ModuleModel::er(0.5), 1, 1), Error);
}

void check_stack(const StackedGraph& sg, int count, int c) {
  const DnnGraph& g = sg.graph;
  ASSERT_EQ(sg.truth.size(), count);
  EXPECT_EQ(static_cast<int>(sg.channels.size()), c * (count - 1));
  for (int t = 0; t + 1 < count; ++t) {
    const auto& cut = sg.truth.cuts[static_cast<size_t>(t)];
    ASSERT_EQ(static_cast<int>(cut.size()), c);
    const auto& left = sg.truth.modules[static_cast<size_t>(t)];
    const auto& right = sg.truth.modules[static_cast<size_t>(t + 1)];
    std::set<int> covered_left;
    std::set<int> covered_right;
    for (auto [a, b] : cut) {
      EXPECT_EQ(sg.truth.module_of[static_cast<size_t>(a)], t);
      EXPECT_EQ(sg.truth.module_of[static_cast<size_t>(b)], t + 1);
      for (int v : pre_subgraph(g, a, left)) covered_left.insert(v);
      for (int v : dep_subgraph(g, b, right)) covered_right.insert(v);
    }
    EXPECT_EQ(covered_left.size(), left.size()) << "boundary " << t;
    EXPECT_EQ(covered_right.size(), right.size()) << "boundary " << t;
  }
}

TEST(Stacked, SdepBoundariesCoverModules) {
  for (int c = 1; c <= 4; ++c) {
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
      check_stack(gen_stacked(ModuleModel::er(0.2), 10, 4, c, ChannelMode::kSdep, seed), 4, c);
    }
  }
}

TEST(Stacked, WdepBoundariesCoverModules) {
  for (int c = 1; c <= 3; ++c) {
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
      check_stack(gen_stacked(ModuleModel::ba(2), 8, 3, c, ChannelMode::kWdep, seed), 3, c);
    }
  }
}

TEST(Stacked, SingleChannelIsOutToIn) {
  auto sg = gen_stacked(ModuleModel::er(0.3), 5, 3, 1, ChannelMode::kSdep, 4);
  ASSERT_EQ(sg.channels.size(), 2u);
  EXPECT_EQ(sg.graph.id(sg.channels[0].first), "m0_out");
  EXPECT_EQ(sg.graph.id(sg.channels[0].second), "m1_in");
  EXPECT_TRUE(is_virtual_task("m1_in"));
  EXPECT_FALSE(is_virtual_task("m1_n0"));
}

TEST(Stacked, SdepDrawsAreNested) {
  // raising c keeps the earlier channel endpoints
  auto a = gen_stacked(ModuleModel::er(0.3), 10, 2, 2, ChannelMode::kSdep, 9);
  auto b = gen_stacked(ModuleModel::er(0.3), 10, 2, 3, ChannelMode::kSdep, 9);
  std::set<std::pair<std::string, std::string>> small;
  std::set<std::pair<std::string, std::string>> large;
  for (auto [x, y] : a.channels) small.insert({a.graph.id(x), a.graph.id(y)});
  for (auto [x, y] : b.channels) large.insert({b.graph.id(x), b.graph.id(y)});
  for (const auto& e : small) EXPECT_TRUE(large.count(e)) << e.first << " -> " << e.second;
}

TEST(Stacked, Deterministic) {
  auto a = gen_stacked(ModuleModel::ws(4, 0.2), 8, 3, 2, ChannelMode::kWdep, 5);
  auto b = gen_stacked(ModuleModel::ws(4, 0.2), 8, 3, 2, ChannelMode::kWdep, 5);
  EXPECT_EQ(save_graph(a.graph), save_graph(b.graph));
}

TEST(Profile, ZeroNoiseKeepsDeviceFactors) {
  DnnGraph g = gen_module(ModuleModel::er(0.3), 6, 2);
  ProfileOptions opt;
  opt.noise_sigma = 0.0;
  auto prof = synth_profile(g, default3_devices(), 3, opt);
  for (int i = 1; i <= 6; ++i) {
    double ref = *prof.latency.get(g.id(i), "a100", 1);
    EXPECT_GE(ref, 1.0);
    EXPECT_LE(ref, 10.0);
    EXPECT_NEAR(*prof.latency.get(g.id(i), "cpu", 1) / ref, 7.10, 1e-12);
    EXPECT_NEAR(*prof.latency.get(g.id(i), "t4", 1) / ref, 1.26, 1e-12);
  }
  EXPECT_EQ(*prof.latency.get("in", "cpu", 1), 0.0);
  EXPECT_EQ(*prof.latency.get("out", "a100", 1), 0.0);
}

TEST(Profile, CompleteForEveryBatchSize) {
  auto sg = gen_stacked(ModuleModel::er(0.2), 6, 3, 2, ChannelMode::kSdep, 1);
  auto prof = synth_profile(sg.graph, default3_devices({1, 2, 4}), 1);
  EXPECT_EQ(prof.latency.entry_count(), static_cast<size_t>(sg.graph.size()) * 3 * 3);
  EXPECT_NO_THROW(Problem(sg.graph, prof.hardware, prof.latency, 4));
  EXPECT_DOUBLE_EQ(prof.hardware.bandwidth(0, 2), 1.2e7);
  double one = *prof.latency.get(sg.graph.id(3), "t4", 1);
  EXPECT_NEAR(*prof.latency.get(sg.graph.id(3), "t4", 4) / one, std::pow(4.0, 0.8), 1e-12);
}

TEST(Transformer, GroupsAndCompression) {
  auto ts = gen_transformer_stack(4, 6, 4);
  EXPECT_EQ(ts.graph.size(), 12);
  EXPECT_EQ(ts.hardware.size(), 30);
  EXPECT_EQ(ts.groups.size(), 7u);  // six accelerator groups and one node group
  EXPECT_DOUBLE_EQ(ts.compression_factor, std::pow(4.0, 6) * 720.0);
  Problem p(ts.graph, ts.hardware, ts.latency, 1);
  for (const auto& group : ts.groups) {
    for (size_t k = 0; k + 1 < group.size(); ++k) EXPECT_TRUE(blocks_interchangeable(p, group[k], group[k + 1]));
  }
}

TEST(Transformer, BridgesSeparateLayers) {
  auto ts = gen_transformer_stack(5, 1, 2);
  auto d = k_edge_components(ts.graph, 1);
  EXPECT_EQ(d.size(), 5);
  for (const auto& mod : d.modules) EXPECT_EQ(mod.size(), 3u);
  EXPECT_DOUBLE_EQ(ts.compression_factor, 2.0);
  EXPECT_THROW(gen_transformer_stack(0, 1, 1), Error);
}

}  // namespace
}  // namespace hetmap
