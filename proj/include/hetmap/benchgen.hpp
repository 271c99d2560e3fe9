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
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "hetmap/error.hpp"
#include "hetmap/formulation.hpp"
#include "hetmap/graph.hpp"
#include "hetmap/hardware.hpp"
#include "hetmap/rng.hpp"
#include "hetmap/splitting.hpp"

namespace hetmap {

enum class GraphModel { kER, kWS, kBA };

struct ModuleModel {
  GraphModel kind = GraphModel::kER;
  double p = 0.2;  // ER edge probability, WS rewiring probability
  int k = 4;       // WS ring degree
  int m = 5;       // BA attachments per node

  static ModuleModel er(double p) { return {GraphModel::kER, p, 0, 0}; }
  static ModuleModel ws(int k, double p) { return {GraphModel::kWS, p, k, 0}; }
  static ModuleModel ba(int m) { return {GraphModel::kBA, 0.0, 0, m}; }
};

enum class ChannelMode { kSdep, kWdep };

/// Virtual module endpoints carry no cost; they are recognised by id.
inline bool is_virtual_task(const std::string& id) {
  auto ends = [&](const std::string& s) {
    return id.size() >= s.size() && id.compare(id.size() - s.size(), s.size(), s) == 0;
  };
  return id == "in" || id == "out" || ends("_in") || ends("_out");
}

namespace gen_detail {

inline std::uint64_t mix(std::uint64_t seed, std::uint64_t salt) {
  // splitmix64 step
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (salt + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

inline double log_uniform(Rng& r, double lo, double hi) {
  return std::exp(r.uniform(std::log(lo), std::log(hi)));
}

using EdgeSet = std::set<std::pair<int, int>>;

inline void add_undirected(EdgeSet& e, int a, int b) { e.insert({std::min(a, b), std::max(a, b)}); }

inline EdgeSet erdos_renyi(int n, double p, Rng& r) {
  EdgeSet e;
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      if (r.coin(p)) e.insert({i, j});
    }
  }
  return e;
}

inline EdgeSet watts_strogatz(int n, int k, double p, Rng& r) {
  EdgeSet e;
  for (int j = 1; j <= k / 2; ++j) {
    for (int u = 0; u < n; ++u) add_undirected(e, u, (u + j) % n);
  }
  auto has = [&](int a, int b) { return e.count({std::min(a, b), std::max(a, b)}) > 0; };
  auto degree = [&](int u) {
    int d = 0;
    for (const auto& [a, b] : e) d += (a == u || b == u) ? 1 : 0;
    return d;
  };
  for (int j = 1; j <= k / 2; ++j) {
    for (int u = 0; u < n; ++u) {
      int v = (u + j) % n;
      if (!r.coin(p)) continue;
      if (!has(u, v) || degree(u) >= n - 1) continue;
      int w = r.index(n);
      while (w == u || has(u, w)) w = r.index(n);
      e.erase({std::min(u, v), std::max(u, v)});
      add_undirected(e, u, w);
    }
  }
  return e;
}

inline EdgeSet barabasi_albert(int n, int m, Rng& r) {
  EdgeSet e;
  // star on m+1 nodes to start
  std::vector<int> repeated;
  for (int v = 1; v <= m; ++v) {
    e.insert({0, v});
    repeated.push_back(0);
    repeated.push_back(v);
  }
  for (int src = m + 1; src < n; ++src) {
    std::set<int> targets;
    while (static_cast<int>(targets.size()) < m) targets.insert(repeated[static_cast<size_t>(r.index(static_cast<int>(repeated.size())))]);
    for (int t : targets) {
      add_undirected(e, t, src);
      repeated.push_back(t);
      repeated.push_back(src);
    }
  }
  return e;
}

inline void shuffle(std::vector<int>& v, Rng& r) {
  for (size_t k = v.size(); k > 1; --k) std::swap(v[k - 1], v[static_cast<size_t>(r.index(static_cast<int>(k)))]);
}

}  // namespace gen_detail

/// Random module: an undirected graph by the chosen model, oriented from
/// lower to higher index, plus a virtual "in" feeding every source and a
/// virtual "out" fed by every sink. Tensor sizes are drawn log-uniformly.
inline DnnGraph gen_module(const ModuleModel& model, int n, std::uint64_t seed) {
  if (n < 2) throw Error(ErrorCode::kInvalidValue, "module needs n >= 2");
  Rng r(seed);
  gen_detail::EdgeSet und;
  switch (model.kind) {
    case GraphModel::kER:
      if (!(model.p >= 0.0 && model.p <= 1.0)) throw Error(ErrorCode::kInvalidValue, "ER needs 0 <= p <= 1");
      und = gen_detail::erdos_renyi(n, model.p, r);
      break;
    case GraphModel::kWS:
      if (model.k < 2 || model.k % 2 != 0 || model.k >= n || !(model.p >= 0.0 && model.p <= 1.0)) {
        throw Error(ErrorCode::kInvalidValue, "WS needs even 2 <= k < n and 0 <= p <= 1");
      }
      und = gen_detail::watts_strogatz(n, model.k, model.p, r);
      break;
    case GraphModel::kBA:
      if (model.m < 1 || model.m >= n) throw Error(ErrorCode::kInvalidValue, "BA needs 1 <= m < n");
      und = gen_detail::barabasi_albert(n, model.m, r);
      break;
  }

  std::vector<TaskNode> tasks;
  tasks.push_back({"in", 0.0, 0.0, 0.0});
  for (int k = 0; k < n; ++k) tasks.push_back({"n" + std::to_string(k), 0.0, 0.0, 0.0});
  tasks.push_back({"out", 0.0, 0.0, 0.0});
  const int out = n + 1;
  for (auto& t : tasks) {
    t.om = gen_detail::log_uniform(r, 1e5, 2e6);
    if (t.id != "in" && t.id != "out") t.wm = gen_detail::log_uniform(r, 1e5, 1e7);
  }

  std::vector<std::pair<int, int>> edges;
  std::vector<int> indeg(static_cast<size_t>(n), 0);
  std::vector<int> outdeg(static_cast<size_t>(n), 0);
  for (const auto& [a, b] : und) {
    edges.emplace_back(a + 1, b + 1);
    ++outdeg[static_cast<size_t>(a)];
    ++indeg[static_cast<size_t>(b)];
  }
  for (int v = 0; v < n; ++v) {
    if (indeg[static_cast<size_t>(v)] == 0) edges.emplace_back(0, v + 1);
    if (outdeg[static_cast<size_t>(v)] == 0) edges.emplace_back(v + 1, out);
  }
  std::sort(edges.begin(), edges.end());
  // input tensor = everything arriving
  for (const auto& [a, b] : edges) tasks[static_cast<size_t>(b)].im += tasks[static_cast<size_t>(a)].om;
  tasks[0].im = tasks[0].om;
  return DnnGraph(std::move(tasks), std::move(edges), "module");
}

struct StackedGraph {
  DnnGraph graph;
  ModuleDecomposition truth;
  std::vector<std::pair<int, int>> channels;  // cross-module edges
};

namespace gen_detail {

inline std::pair<int, int> single_source_sink(const DnnGraph& g) {
  int src = -1;
  int snk = -1;
  for (int i = 0; i < g.size(); ++i) {
    if (g.predecessors(i).empty()) {
      if (src >= 0) throw Error(ErrorCode::kInvalidValue, "module has several sources");
      src = i;
    }
    if (g.successors(i).empty()) {
      if (snk >= 0) throw Error(ErrorCode::kInvalidValue, "module has several sinks");
      snk = i;
    }
  }
  if (src < 0 || snk < 0 || src == snk) throw Error(ErrorCode::kInvalidValue, "module needs one source and one sink");
  return {src, snk};
}

/// Union of pre(O) (or dep(I)) within `mod` covers `mod`.
inline bool covers(const DnnGraph& g, const std::vector<int>& ends, const std::vector<int>& mod, bool backward) {
  std::vector<char> within(static_cast<size_t>(g.size()), 0);
  for (int v : mod) within[static_cast<size_t>(v)] = 1;
  std::vector<char> hit(static_cast<size_t>(g.size()), 0);
  for (int e : ends) {
    for (int v : reachable_within(g, e, within, backward)) hit[static_cast<size_t>(v)] = 1;
  }
  return std::all_of(mod.begin(), mod.end(), [&](int v) { return hit[static_cast<size_t>(v)] != 0; });
}

}  // namespace gen_detail

/// Chains single-input single-output modules with c channel edges per
/// boundary. sdep: the virtual output of M_t feeds the virtual input of
/// M_{t+1}; the other c-1 channels join random internal nodes. Endpoint
/// draws are nested in c for a fixed seed. wdep: both endpoint sets are
/// drawn uniformly over the whole module and redrawn until the graph stays
/// single-input single-output.
inline StackedGraph stack_modules(const std::vector<DnnGraph>& modules, int c, ChannelMode mode, std::uint64_t seed) {
  if (c < 1) throw Error(ErrorCode::kInvalidValue, "channel count must be >= 1");
  if (modules.empty()) throw Error(ErrorCode::kInvalidValue, "no modules to stack");
  std::vector<TaskNode> tasks;
  std::vector<std::pair<int, int>> edges;
  std::vector<std::vector<int>> groups;
  std::vector<std::pair<int, int>> ends;  // global (source, sink) per module
  for (size_t t = 0; t < modules.size(); ++t) {
    const DnnGraph& m = modules[t];
    auto [src, snk] = gen_detail::single_source_sink(m);
    const int base = static_cast<int>(tasks.size());
    std::vector<int> grp;
    for (int i = 0; i < m.size(); ++i) {
      TaskNode node = m.task(i);
      node.id = "m" + std::to_string(t) + "_" + node.id;
      tasks.push_back(std::move(node));
      grp.push_back(base + i);
    }
    for (const auto& [a, b] : m.edges()) edges.emplace_back(base + a, base + b);
    groups.push_back(std::move(grp));
    ends.emplace_back(base + src, base + snk);
  }

  std::vector<std::pair<int, int>> channels;
  for (size_t t = 0; t + 1 < modules.size(); ++t) {
    Rng r(gen_detail::mix(seed, t));
    const auto& left = groups[t];
    const auto& right = groups[t + 1];
    const int out_t = ends[t].second;
    const int in_next = ends[t + 1].first;
    std::vector<int> O;
    std::vector<int> I;
    if (c == 1) {
      O = {out_t};
      I = {in_next};
    } else if (mode == ChannelMode::kSdep) {
      std::vector<int> lo;
      std::vector<int> hi;
      for (int v : left) {
        if (v != out_t && v != ends[t].first) lo.push_back(v);
      }
      for (int v : right) {
        if (v != in_next && v != ends[t + 1].second) hi.push_back(v);
      }
      if (static_cast<int>(lo.size()) < c - 1 || static_cast<int>(hi.size()) < c - 1) {
        throw Error(ErrorCode::kInvalidValue, "module too small for " + std::to_string(c) + " channels");
      }
      gen_detail::shuffle(lo, r);
      gen_detail::shuffle(hi, r);
      O = {out_t};
      I = {in_next};
      O.insert(O.end(), lo.begin(), lo.begin() + (c - 1));
      I.insert(I.end(), hi.begin(), hi.begin() + (c - 1));
    } else {
      std::vector<int> lo;
      std::vector<int> hi;
      for (int v : left) {
        if (v != ends[t].first) lo.push_back(v);
      }
      for (int v : right) {
        if (v != ends[t + 1].second) hi.push_back(v);
      }
      if (static_cast<int>(lo.size()) < c || static_cast<int>(hi.size()) < c) {
        throw Error(ErrorCode::kInvalidValue, "module too small for " + std::to_string(c) + " channels");
      }
      bool ok = false;
      for (int attempt = 0; attempt < 10000 && !ok; ++attempt) {
        gen_detail::shuffle(lo, r);
        gen_detail::shuffle(hi, r);
        O.assign(lo.begin(), lo.begin() + c);
        I.assign(hi.begin(), hi.begin() + c);
        ok = std::count(O.begin(), O.end(), out_t) > 0 && std::count(I.begin(), I.end(), in_next) > 0;
      }
      if (!ok) throw Error(ErrorCode::kInfeasible, "no single-input single-output endpoint draw found");
    }
    for (int k = 0; k < c; ++k) channels.emplace_back(O[static_cast<size_t>(k)], I[static_cast<size_t>(k)]);
  }
  edges.insert(edges.end(), channels.begin(), channels.end());
  std::sort(edges.begin(), edges.end());
  DnnGraph g(std::move(tasks), std::move(edges), "stack");

  // coverage: every module task reachable from a chosen input and reaching a chosen output
  for (size_t t = 0; t + 1 < modules.size(); ++t) {
    std::vector<int> O;
    std::vector<int> I;
    for (const auto& [a, b] : channels) {
      if (std::binary_search(groups[t].begin(), groups[t].end(), a)) {
        O.push_back(a);
        I.push_back(b);
      }
    }
    if (!gen_detail::covers(g, O, groups[t], true) || !gen_detail::covers(g, I, groups[t + 1], false)) {
      throw Error(ErrorCode::kInfeasible, "channel endpoints do not cover module " + std::to_string(t));
    }
  }
  StackedGraph out{g, decomposition_from_modules(g, groups), std::move(channels)};
  return out;
}

/// Generates `count` modules of one model and stacks them; module t uses a
/// seed derived from (seed, t).
inline StackedGraph gen_stacked(const ModuleModel& model, int n, int count, int c, ChannelMode mode,
                                std::uint64_t seed) {
  std::vector<DnnGraph> mods;
  for (int t = 0; t < count; ++t) mods.push_back(gen_module(model, n, gen_detail::mix(seed, 1000 + static_cast<std::uint64_t>(t))));
  return stack_modules(mods, c, mode, seed);
}

// ---------------------------------------------------------------------------
// Synthetic device profiles

struct DeviceSpec {
  std::string id;
  double factor = 1.0;        // slowdown relative to the reference device
  double memory = 16e9;       // bytes
  std::vector<int> batch_sizes{1};
  double bandwidth = 1.2e7;   // bytes/ms; a link runs at the slower end
};

struct ProfileOptions {
  double base_lo = 1.0;   // ms, reference device, one input
  double base_hi = 10.0;
  double noise_sigma = 0.1;
  double batch_exponent = 0.8;
};

struct Profile {
  HardwareSystem hardware;
  LatencyTable latency;
};

/// CPU / T4 / A100 with the measured RWNN slowdowns.
inline std::vector<DeviceSpec> default3_devices(std::vector<int> batch_sizes = {1}) {
  return {{"cpu", 7.10, 64e9, batch_sizes, 1.2e7},
          {"t4", 1.26, 16e9, batch_sizes, 1.2e7},
          {"a100", 1.0, 40e9, batch_sizes, 1.2e7}};
}

/// t(i,u,b) = base_i * factor_u * noise_iu * b^e. Virtual tasks get 0.
inline Profile synth_profile(const DnnGraph& g, const std::vector<DeviceSpec>& specs, std::uint64_t seed,
                             const ProfileOptions& opt = {}) {
  std::vector<Device> devs;
  for (const auto& s : specs) devs.push_back({s.id, s.memory, s.batch_sizes});
  Profile out{HardwareSystem(std::move(devs)), {}};
  for (size_t u = 0; u < specs.size(); ++u) {
    for (size_t v = 0; v < specs.size(); ++v) {
      if (u != v) {
        out.hardware.set_bandwidth(static_cast<int>(u), static_cast<int>(v),
                                   std::min(specs[u].bandwidth, specs[v].bandwidth));
      }
    }
  }
  Rng r(seed);
  for (int i = 0; i < g.size(); ++i) {
    const double base = gen_detail::log_uniform(r, opt.base_lo, opt.base_hi);
    const bool zero = is_virtual_task(g.id(i));
    for (const auto& s : specs) {
      const double noise = std::exp(opt.noise_sigma * r.normal());
      for (int b : s.batch_sizes) {
        double ms = zero ? 0.0 : base * s.factor * noise * std::pow(static_cast<double>(b), opt.batch_exponent);
        out.latency.set(g.id(i), s.id, b, ms);
      }
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Transformer stack on a multi-node system

struct TransformerOptions {
  double attn_ms = 4.0;
  double mlp_ms = 6.0;
  double add_ms = 0.2;
  double cpu_factor = 20.0;
  double activation_bytes = 1e6;
  double layer_weight_bytes = 3.6e9;
  double gpu_memory = 80e9;
  double cpu_memory = 512e9;
  double nvlink = 3e8;    // bytes/ms, accelerators of one node
  double pcie = 1.6e7;    // CPU to accelerator inside a node
  double network = 2.5e7; // any two devices on different nodes
  std::vector<int> batch_sizes{1};
  double batch_exponent = 0.8;
};

struct TransformerStack {
  DnnGraph graph;
  HardwareSystem hardware;
  LatencyTable latency;
  std::vector<DeviceBlocks> groups;  // per-node accelerators, then whole nodes
  double compression_factor = 1.0;
};

/// Blocks of (attn -> mlp, attn -> add, mlp -> add) chained add -> attn.
/// Node n holds device "n<n>_cpu" then "n<n>_gpu<k>".
inline TransformerStack gen_transformer_stack(int layers, int nodes, int devices_per_node,
                                              const TransformerOptions& opt = {}) {
  if (layers < 1 || nodes < 1 || devices_per_node < 1) {
    throw Error(ErrorCode::kInvalidValue, "layers, nodes and devices_per_node must be >= 1");
  }
  std::vector<TaskNode> tasks;
  std::vector<std::pair<int, int>> edges;
  const double a = opt.activation_bytes;
  for (int k = 0; k < layers; ++k) {
    const std::string b = "b" + std::to_string(k) + "_";
    const int base = static_cast<int>(tasks.size());
    tasks.push_back({b + "attn", opt.layer_weight_bytes / 3.0, a, a});
    tasks.push_back({b + "mlp", opt.layer_weight_bytes * 2.0 / 3.0, a, a});
    tasks.push_back({b + "add", 0.0, 2.0 * a, a});
    edges.emplace_back(base, base + 1);
    edges.emplace_back(base, base + 2);
    edges.emplace_back(base + 1, base + 2);
    if (k > 0) edges.emplace_back(base - 1, base);
  }
  TransformerStack out;
  out.graph = DnnGraph(std::move(tasks), std::move(edges), "transformer");

  std::vector<Device> devs;
  std::vector<int> node_of;
  for (int n = 0; n < nodes; ++n) {
    const std::string pre = "n" + std::to_string(n) + "_";
    devs.push_back({pre + "cpu", opt.cpu_memory, opt.batch_sizes});
    node_of.push_back(n);
    for (int k = 0; k < devices_per_node; ++k) {
      devs.push_back({pre + "gpu" + std::to_string(k), opt.gpu_memory, opt.batch_sizes});
      node_of.push_back(n);
    }
  }
  out.hardware = HardwareSystem(devs);
  const int K = out.hardware.size();
  const int per = devices_per_node + 1;
  for (int u = 0; u < K; ++u) {
    for (int v = 0; v < K; ++v) {
      if (u == v) continue;
      double bw = opt.network;
      if (node_of[static_cast<size_t>(u)] == node_of[static_cast<size_t>(v)]) {
        bool cpu_side = u % per == 0 || v % per == 0;
        bw = cpu_side ? opt.pcie : opt.nvlink;
      }
      out.hardware.set_bandwidth(u, v, bw);
    }
  }
  for (int i = 0; i < out.graph.size(); ++i) {
    const std::string& id = out.graph.id(i);
    double ms = opt.add_ms;
    if (id.ends_with("_attn")) ms = opt.attn_ms;
    if (id.ends_with("_mlp")) ms = opt.mlp_ms;
    for (int u = 0; u < K; ++u) {
      const double f = u % per == 0 ? opt.cpu_factor : 1.0;
      for (int b : opt.batch_sizes) {
        out.latency.set(id, out.hardware.id(u), b, ms * f * std::pow(static_cast<double>(b), opt.batch_exponent));
      }
    }
  }

  if (devices_per_node >= 2) {
    for (int n = 0; n < nodes; ++n) {
      DeviceBlocks g;
      for (int k = 1; k <= devices_per_node; ++k) g.push_back({n * per + k});
      out.groups.push_back(std::move(g));
    }
  }
  if (nodes >= 2) {
    DeviceBlocks g;
    for (int n = 0; n < nodes; ++n) {
      std::vector<int> block;
      for (int k = 0; k < per; ++k) block.push_back(n * per + k);
      g.push_back(std::move(block));
    }
    out.groups.push_back(std::move(g));
  }
  // dpn^nodes * nodes!
  double f = std::pow(static_cast<double>(devices_per_node), nodes);
  for (int n = 2; n <= nodes; ++n) f *= n;
  out.compression_factor = f;
  return out;
}

}  // namespace hetmap
