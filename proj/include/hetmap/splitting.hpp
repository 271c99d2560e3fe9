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
#include <chrono>
#include <functional>
#include <map>
#include <numeric>
#include <optional>
#include <queue>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

#include "hetmap/error.hpp"
#include "hetmap/formulation.hpp"
#include "hetmap/graph.hpp"
#include "hetmap/oracle.hpp"
#include "hetmap/problem.hpp"
#include "hetmap/schedule.hpp"
#include "hetmap/solver.hpp"

namespace hetmap {

// ---------------------------------------------------------------------------
// Bridges and articulation points on the undirected shadow

struct BridgeReport {
  std::vector<std::pair<int, int>> bridges;  // directed edges of g
  std::vector<int> articulation;             // ascending
  int components = 0;
  bool connected() const { return components <= 1; }
};

/// Tarjan low-link, iterative. Disconnected graphs are handled component by
/// component; `components` reports how many there were.
inline BridgeReport find_bridges_and_articulation_points(const DnnGraph& g) {
  const int n = g.size();
  // adjacency as (neighbor, edge id)
  std::vector<std::vector<std::pair<int, int>>> adj(static_cast<size_t>(n));
  const auto& edges = g.edges();
  for (size_t e = 0; e < edges.size(); ++e) {
    adj[static_cast<size_t>(edges[e].first)].emplace_back(edges[e].second, static_cast<int>(e));
    adj[static_cast<size_t>(edges[e].second)].emplace_back(edges[e].first, static_cast<int>(e));
  }
  std::vector<int> disc(static_cast<size_t>(n), -1);
  std::vector<int> low(static_cast<size_t>(n), 0);
  std::vector<char> is_art(static_cast<size_t>(n), 0);
  BridgeReport out;
  int timer = 0;
  struct Frame {
    int v;
    int parent_edge;
    size_t next;
    int children;
  };
  for (int root = 0; root < n; ++root) {
    if (disc[static_cast<size_t>(root)] >= 0) continue;
    ++out.components;
    std::vector<Frame> stack{{root, -1, 0, 0}};
    disc[static_cast<size_t>(root)] = low[static_cast<size_t>(root)] = timer++;
    while (!stack.empty()) {
      Frame& f = stack.back();
      const auto& nb = adj[static_cast<size_t>(f.v)];
      if (f.next < nb.size()) {
        auto [w, e] = nb[f.next++];
        if (e == f.parent_edge) continue;
        if (disc[static_cast<size_t>(w)] < 0) {
          disc[static_cast<size_t>(w)] = low[static_cast<size_t>(w)] = timer++;
          ++f.children;
          stack.push_back({w, e, 0, 0});
        } else {
          low[static_cast<size_t>(f.v)] = std::min(low[static_cast<size_t>(f.v)], disc[static_cast<size_t>(w)]);
        }
        continue;
      }
      Frame done = f;
      stack.pop_back();
      if (stack.empty()) {
        if (done.children > 1) is_art[static_cast<size_t>(done.v)] = 1;
        continue;
      }
      Frame& parent = stack.back();
      auto pv = static_cast<size_t>(parent.v);
      auto cv = static_cast<size_t>(done.v);
      low[pv] = std::min(low[pv], low[cv]);
      if (low[cv] > disc[pv]) out.bridges.push_back(edges[static_cast<size_t>(done.parent_edge)]);
      if (stack.size() > 1 && low[cv] >= disc[pv]) is_art[pv] = 1;
    }
  }
  std::sort(out.bridges.begin(), out.bridges.end());
  for (int v = 0; v < n; ++v) {
    if (is_art[static_cast<size_t>(v)]) out.articulation.push_back(v);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Dummy-node transform

struct DummyTransform {
  Problem problem;
  int original = -1;  // v in the new indexing
  int dummy = -1;     // v' in the new indexing
  std::vector<int> old_index_of_new;  // -1 for the dummy
  bool successor_side = true;         // v -> v' (else v' -> v)
};

/// Splits articulation vertex v so the cut becomes a bridge. One lobe of
/// G - v whose neighbours of v are all successors (or all predecessors) is
/// rerouted through a zero-latency dummy tied to v's device.
///
/// The dummy copies om of v on the successor side, otherwise transfers out
/// of the dummy would become free.
inline DummyTransform articulation_to_bridge_transform(const Problem& p, int v) {
  const DnnGraph& g = p.graph();
  auto rep = find_bridges_and_articulation_points(g);
  if (!std::binary_search(rep.articulation.begin(), rep.articulation.end(), v)) {
    throw Error(ErrorCode::kNotArticulation, g.id(v) + " is not an articulation point");
  }
  const int n = g.size();
  // lobes of G - v
  std::vector<int> lobe(static_cast<size_t>(n), -1);
  int lobes = 0;
  for (int s = 0; s < n; ++s) {
    if (s == v || lobe[static_cast<size_t>(s)] >= 0) continue;
    std::vector<int> stack{s};
    lobe[static_cast<size_t>(s)] = lobes;
    while (!stack.empty()) {
      int x = stack.back();
      stack.pop_back();
      for (auto nbrs : {g.successors(x), g.predecessors(x)}) {
        for (int w : nbrs) {
          if (w != v && lobe[static_cast<size_t>(w)] < 0) {
            lobe[static_cast<size_t>(w)] = lobes;
            stack.push_back(w);
          }
        }
      }
    }
    ++lobes;
  }
  // lobes adjacent to v, classified by edge direction
  std::vector<int> succ_only(static_cast<size_t>(lobes), 1);
  std::vector<int> pred_only(static_cast<size_t>(lobes), 1);
  std::vector<int> touches(static_cast<size_t>(lobes), 0);
  for (int w : g.successors(v)) {
    touches[static_cast<size_t>(lobe[static_cast<size_t>(w)])] = 1;
    pred_only[static_cast<size_t>(lobe[static_cast<size_t>(w)])] = 0;
  }
  for (int w : g.predecessors(v)) {
    touches[static_cast<size_t>(lobe[static_cast<size_t>(w)])] = 1;
    succ_only[static_cast<size_t>(lobe[static_cast<size_t>(w)])] = 0;
  }
  int pick = -1;
  bool successor_side = true;
  // Prefer the successor lobe containing the largest index (downstream end).
  for (int pass = 0; pass < 2 && pick < 0; ++pass) {
    int best_key = -1;
    for (int l = 0; l < lobes; ++l) {
      if (!touches[static_cast<size_t>(l)]) continue;
      if (pass == 0 ? !succ_only[static_cast<size_t>(l)] : !pred_only[static_cast<size_t>(l)]) continue;
      int key = 0;
      for (int x = 0; x < n; ++x) {
        if (lobe[static_cast<size_t>(x)] == l) key = std::max(key, x);
      }
      if (key > best_key) {
        best_key = key;
        pick = l;
        successor_side = pass == 0;
      }
    }
  }
  int adjacent = static_cast<int>(std::count(touches.begin(), touches.end(), 1));
  if (pick < 0 || adjacent < 2) {
    throw Error(ErrorCode::kNotArticulation, "no one-sided lobe at " + g.id(v));
  }

  std::vector<TaskNode> tasks(g.tasks().begin(), g.tasks().end());
  std::string name = g.id(v) + "__dummy";
  while (g.index_of(name)) name += "_";
  TaskNode dummy{name, 0.0, 0.0, successor_side ? g.task(v).om : 0.0};
  tasks.push_back(dummy);
  const int d = n;
  std::vector<std::pair<int, int>> edges;
  for (auto [a, b] : g.edges()) {
    if (successor_side && a == v && lobe[static_cast<size_t>(b)] == pick) a = d;
    if (!successor_side && b == v && lobe[static_cast<size_t>(a)] == pick) b = d;
    edges.emplace_back(a, b);
  }
  if (successor_side) {
    edges.emplace_back(v, d);
  } else {
    edges.emplace_back(d, v);
  }
  std::vector<int> old_index(static_cast<size_t>(n + 1));
  std::iota(old_index.begin(), old_index.end(), 0);
  old_index.back() = -1;
  DummyTransform out{p.with_graph(DnnGraph(std::move(tasks), std::move(edges), g.name()), old_index), v, d,
                     old_index, successor_side};
  out.problem.add_tie(v, d);
  if (p.pin(v) >= 0) out.problem.set_pin(d, p.pin(v));
  return out;
}

// ---------------------------------------------------------------------------
// Module decomposition

struct ModuleDecomposition {
  std::vector<std::vector<int>> modules;  // task indices, chain order
  std::vector<int> module_of;             // task -> module position
  // cuts[t]: edges from modules 0..t into modules t+1.. (prefix cut)
  std::vector<std::vector<std::pair<int, int>>> cuts;
  bool chain = true;  // reduced graph is a simple path

  int size() const { return static_cast<int>(modules.size()); }
  int max_channels() const {
    size_t c = 0;
    for (const auto& cut : cuts) c = std::max(c, cut.size());
    return static_cast<int>(c);
  }
};

namespace split_detail {

/// Topologically orders groups of tasks (ties by smallest member) and fills
/// the cut lists. Groups must partition the graph and induce an acyclic
/// reduced graph.
inline ModuleDecomposition order_modules(const DnnGraph& g, std::vector<std::vector<int>> groups) {
  const int n = g.size();
  const int q = static_cast<int>(groups.size());
  std::vector<int> group_of(static_cast<size_t>(n), -1);
  for (int k = 0; k < q; ++k) {
    auto& grp = groups[static_cast<size_t>(k)];
    std::sort(grp.begin(), grp.end());
    if (grp.empty()) throw Error(ErrorCode::kInvalidValue, "empty module");
    for (int i : grp) {
      if (i < 0 || i >= n || group_of[static_cast<size_t>(i)] >= 0) {
        throw Error(ErrorCode::kInvalidValue, "modules must partition the tasks");
      }
      group_of[static_cast<size_t>(i)] = k;
    }
  }
  for (int i = 0; i < n; ++i) {
    if (group_of[static_cast<size_t>(i)] < 0) throw Error(ErrorCode::kInvalidValue, "modules must cover every task");
  }
  std::vector<std::vector<int>> out(static_cast<size_t>(q));
  std::vector<int> indeg(static_cast<size_t>(q), 0);
  std::vector<std::vector<int>> succ(static_cast<size_t>(q));
  for (auto [a, b] : g.edges()) {
    int x = group_of[static_cast<size_t>(a)];
    int y = group_of[static_cast<size_t>(b)];
    if (x == y) continue;
    succ[static_cast<size_t>(x)].push_back(y);
  }
  for (auto& s : succ) {
    std::sort(s.begin(), s.end());
    s.erase(std::unique(s.begin(), s.end()), s.end());
    for (int y : s) ++indeg[static_cast<size_t>(y)];
  }
  using Key = std::pair<int, int>;  // (smallest task, group)
  std::priority_queue<Key, std::vector<Key>, std::greater<>> ready;
  for (int k = 0; k < q; ++k) {
    if (indeg[static_cast<size_t>(k)] == 0) ready.emplace(groups[static_cast<size_t>(k)].front(), k);
  }
  std::vector<int> order;
  while (!ready.empty()) {
    int k = ready.top().second;
    ready.pop();
    order.push_back(k);
    for (int y : succ[static_cast<size_t>(k)]) {
      if (--indeg[static_cast<size_t>(y)] == 0) ready.emplace(groups[static_cast<size_t>(y)].front(), y);
    }
  }
  if (static_cast<int>(order.size()) != q) throw Error(ErrorCode::kCycle, "reduced module graph has a cycle");

  ModuleDecomposition d;
  d.module_of.assign(static_cast<size_t>(n), -1);
  std::vector<int> pos(static_cast<size_t>(q));
  for (int t = 0; t < q; ++t) {
    pos[static_cast<size_t>(order[static_cast<size_t>(t)])] = t;
    d.modules.push_back(groups[static_cast<size_t>(order[static_cast<size_t>(t)])]);
    for (int i : d.modules.back()) d.module_of[static_cast<size_t>(i)] = t;
  }
  d.cuts.assign(static_cast<size_t>(std::max(0, q - 1)), {});
  for (auto [a, b] : g.edges()) {
    int x = d.module_of[static_cast<size_t>(a)];
    int y = d.module_of[static_cast<size_t>(b)];
    for (int t = x; t < y; ++t) d.cuts[static_cast<size_t>(t)].emplace_back(a, b);
  }
  for (auto& cut : d.cuts) std::sort(cut.begin(), cut.end());
  for (int k = 0; k < q; ++k) {
    for (int y : succ[static_cast<size_t>(k)]) {
      if (pos[static_cast<size_t>(y)] != pos[static_cast<size_t>(k)] + 1) d.chain = false;
    }
  }
  for (int t = 0; t + 1 < q; ++t) {
    if (d.cuts[static_cast<size_t>(t)].empty()) d.chain = false;
  }
  return d;
}

/// Stoer-Wagner on the undirected shadow restricted to `nodes`, stopping as
/// soon as a cut of weight <= c shows up. Returns one side of such a cut.
inline std::optional<std::vector<int>> small_cut(const DnnGraph& g, const std::vector<int>& nodes, int c) {
  const int m = static_cast<int>(nodes.size());
  if (m < 2) return std::nullopt;
  std::vector<int> local(static_cast<size_t>(g.size()), -1);
  for (int k = 0; k < m; ++k) local[static_cast<size_t>(nodes[static_cast<size_t>(k)])] = k;
  std::vector<std::vector<int>> w(static_cast<size_t>(m), std::vector<int>(static_cast<size_t>(m), 0));
  for (auto [a, b] : g.edges()) {
    int x = local[static_cast<size_t>(a)];
    int y = local[static_cast<size_t>(b)];
    if (x < 0 || y < 0) continue;
    ++w[static_cast<size_t>(x)][static_cast<size_t>(y)];
    ++w[static_cast<size_t>(y)][static_cast<size_t>(x)];
  }
  std::vector<std::vector<int>> members(static_cast<size_t>(m));
  for (int k = 0; k < m; ++k) members[static_cast<size_t>(k)] = {nodes[static_cast<size_t>(k)]};
  std::vector<int> alive(static_cast<size_t>(m));
  std::iota(alive.begin(), alive.end(), 0);
  while (alive.size() > 1) {
    std::vector<int> key(static_cast<size_t>(m), 0);
    std::vector<char> added(static_cast<size_t>(m), 0);
    int prev = -1;
    int last = -1;
    for (size_t step = 0; step < alive.size(); ++step) {
      int sel = -1;
      for (int v : alive) {
        if (!added[static_cast<size_t>(v)] && (sel < 0 || key[static_cast<size_t>(v)] > key[static_cast<size_t>(sel)])) sel = v;
      }
      if (sel < 0) break;
      added[static_cast<size_t>(sel)] = 1;
      prev = last;
      last = sel;
      for (int v : alive) {
        if (!added[static_cast<size_t>(v)]) key[static_cast<size_t>(v)] += w[static_cast<size_t>(sel)][static_cast<size_t>(v)];
      }
    }
    if (key[static_cast<size_t>(last)] <= c) return members[static_cast<size_t>(last)];
    // merge last into prev
    auto& into = members[static_cast<size_t>(prev)];
    const auto& from = members[static_cast<size_t>(last)];
    into.insert(into.end(), from.begin(), from.end());
    for (int v : alive) {
      w[static_cast<size_t>(prev)][static_cast<size_t>(v)] += w[static_cast<size_t>(last)][static_cast<size_t>(v)];
      w[static_cast<size_t>(v)][static_cast<size_t>(prev)] = w[static_cast<size_t>(prev)][static_cast<size_t>(v)];
    }
    w[static_cast<size_t>(prev)][static_cast<size_t>(prev)] = 0;
    alive.erase(std::find(alive.begin(), alive.end(), last));
  }
  return std::nullopt;
}

inline std::vector<std::vector<int>> connected_parts(const DnnGraph& g, const std::vector<int>& nodes) {
  std::vector<int> mark(static_cast<size_t>(g.size()), -2);
  for (int v : nodes) mark[static_cast<size_t>(v)] = -1;
  std::vector<std::vector<int>> parts;
  for (int s : nodes) {
    if (mark[static_cast<size_t>(s)] != -1) continue;
    int id = static_cast<int>(parts.size());
    parts.emplace_back();
    std::vector<int> stack{s};
    mark[static_cast<size_t>(s)] = id;
    while (!stack.empty()) {
      int x = stack.back();
      stack.pop_back();
      parts.back().push_back(x);
      for (auto nbrs : {g.successors(x), g.predecessors(x)}) {
        for (int y : nbrs) {
          if (mark[static_cast<size_t>(y)] == -1) {
            mark[static_cast<size_t>(y)] = id;
            stack.push_back(y);
          }
        }
      }
    }
  }
  return parts;
}

inline void pieces(const DnnGraph& g, std::vector<int> nodes, int c, std::vector<std::vector<int>>& out) {
  std::vector<std::vector<int>> work{std::move(nodes)};
  while (!work.empty()) {
    auto cur = std::move(work.back());
    work.pop_back();
    auto parts = connected_parts(g, cur);
    if (parts.size() > 1) {
      for (auto& part : parts) work.push_back(std::move(part));
      continue;
    }
    // peel vertices whose degree inside cur is <= c
    bool peeled = false;
    std::vector<char> in(static_cast<size_t>(g.size()), 0);
    for (int v : cur) in[static_cast<size_t>(v)] = 1;
    for (int v : cur) {
      int deg = 0;
      for (auto nbrs : {g.successors(v), g.predecessors(v)}) {
        for (int y : nbrs) deg += in[static_cast<size_t>(y)];
      }
      if (deg <= c && cur.size() > 1) {
        out.push_back({v});
        std::vector<int> rest;
        for (int x : cur) {
          if (x != v) rest.push_back(x);
        }
        work.push_back(std::move(rest));
        peeled = true;
        break;
      }
    }
    if (peeled) continue;
    auto side = small_cut(g, cur, c);
    if (!side) {
      out.push_back(std::move(cur));
      continue;
    }
    std::vector<char> mark(static_cast<size_t>(g.size()), 0);
    for (int v : *side) mark[static_cast<size_t>(v)] = 1;
    std::vector<int> rest;
    for (int v : cur) {
      if (!mark[static_cast<size_t>(v)]) rest.push_back(v);
    }
    work.push_back(std::move(*side));
    work.push_back(std::move(rest));
  }
}

}  // namespace split_detail

/// Checks and orders a caller-supplied partition (e.g. generator ground truth).
inline ModuleDecomposition decomposition_from_modules(const DnnGraph& g, std::vector<std::vector<int>> modules) {
  return split_detail::order_modules(g, std::move(modules));
}

/// Modules as the (c+1)-edge-connected pieces of the undirected shadow, with
/// cyclically linked pieces merged and consecutive pieces fused until every
/// prefix cut carries at most c edges. c = 1 reduces to the bridge split.
inline ModuleDecomposition k_edge_components(const DnnGraph& g, int c) {
  if (c < 1) throw Error(ErrorCode::kInvalidValue, "channel budget must be >= 1");
  const int n = g.size();
  if (n == 0) return {};
  std::vector<std::vector<int>> raw;
  if (c == 1) {
    // 2-edge-connected components: drop bridges, take connected parts
    auto rep = find_bridges_and_articulation_points(g);
    std::vector<std::pair<int, int>> kept;
    for (const auto& e : g.edges()) {
      if (!std::binary_search(rep.bridges.begin(), rep.bridges.end(), e)) kept.push_back(e);
    }
    DnnGraph h(std::vector<TaskNode>(g.tasks().begin(), g.tasks().end()), std::move(kept));
    std::vector<int> all(static_cast<size_t>(n));
    std::iota(all.begin(), all.end(), 0);
    raw = split_detail::connected_parts(h, all);
  } else {
    std::vector<int> all(static_cast<size_t>(n));
    std::iota(all.begin(), all.end(), 0);
    split_detail::pieces(g, std::move(all), c, raw);
  }

  // merge pieces lying on a cycle of the reduced graph
  std::vector<int> piece_of(static_cast<size_t>(n));
  for (size_t k = 0; k < raw.size(); ++k) {
    for (int v : raw[k]) piece_of[static_cast<size_t>(v)] = static_cast<int>(k);
  }
  {
    std::vector<TaskNode> nodes;
    for (size_t k = 0; k < raw.size(); ++k) nodes.push_back(TaskNode{std::to_string(k), 0, 0, 0});
    std::vector<std::pair<int, int>> pe;
    for (auto [a, b] : g.edges()) {
      int x = piece_of[static_cast<size_t>(a)];
      int y = piece_of[static_cast<size_t>(b)];
      if (x != y) pe.emplace_back(x, y);
    }
    std::sort(pe.begin(), pe.end());
    pe.erase(std::unique(pe.begin(), pe.end()), pe.end());
    // reachability over pieces (may be cyclic, so no DnnGraph)
    const size_t q = raw.size();
    std::vector<std::vector<int>> adj(q);
    for (auto [x, y] : pe) adj[static_cast<size_t>(x)].push_back(y);
    std::vector<std::vector<char>> reach(q, std::vector<char>(q, 0));
    for (size_t s = 0; s < q; ++s) {
      std::vector<int> stack{static_cast<int>(s)};
      reach[s][s] = 1;
      while (!stack.empty()) {
        int x = stack.back();
        stack.pop_back();
        for (int y : adj[static_cast<size_t>(x)]) {
          if (!reach[s][static_cast<size_t>(y)]) {
            reach[s][static_cast<size_t>(y)] = 1;
            stack.push_back(y);
          }
        }
      }
    }
    std::vector<int> rep(q, -1);
    std::vector<std::vector<int>> merged;
    for (size_t s = 0; s < q; ++s) {
      if (rep[s] >= 0) continue;
      rep[s] = static_cast<int>(merged.size());
      merged.push_back(raw[s]);
      for (size_t t = s + 1; t < q; ++t) {
        if (rep[t] < 0 && reach[s][t] && reach[t][s]) {
          rep[t] = rep[s];
          merged.back().insert(merged.back().end(), raw[t].begin(), raw[t].end());
        }
      }
    }
    raw = std::move(merged);
  }

  auto fine = split_detail::order_modules(g, std::move(raw));
  // fuse across prefix cuts wider than c
  std::vector<std::vector<int>> fused;
  std::vector<int> current;
  for (int t = 0; t < fine.size(); ++t) {
    const auto& mod = fine.modules[static_cast<size_t>(t)];
    current.insert(current.end(), mod.begin(), mod.end());
    bool last = t + 1 == fine.size();
    if (last || static_cast<int>(fine.cuts[static_cast<size_t>(t)].size()) <= c) {
      fused.push_back(std::move(current));
      current.clear();
    }
  }
  return split_detail::order_modules(g, std::move(fused));
}

inline nlohmann::json decomposition_to_json(const DnnGraph& g, const ModuleDecomposition& d) {
  nlohmann::json doc;
  doc["chain"] = d.chain;
  doc["modules"] = nlohmann::json::array();
  for (const auto& mod : d.modules) {
    nlohmann::json ids = nlohmann::json::array();
    for (int i : mod) ids.push_back(g.id(i));
    doc["modules"].push_back(std::move(ids));
  }
  doc["cuts"] = nlohmann::json::array();
  for (const auto& cut : d.cuts) {
    nlohmann::json edges = nlohmann::json::array();
    for (auto [a, b] : cut) edges.push_back({g.id(a), g.id(b)});
    doc["cuts"].push_back(std::move(edges));
  }
  return doc;
}

// ---------------------------------------------------------------------------
// Module solvers

struct ModuleSolve {
  std::optional<Schedule> schedule;  // none when infeasible or nothing found
  double bound = 0.0;                // valid lower bound on the module optimum
  bool optimal = false;
  long nodes = 0;
};

using ModuleSolver = std::function<ModuleSolve(const Problem&)>;

/// Module optimum through the MILP (embedded or external backend).
inline ModuleSolver milp_module_solver(SolverOptions opt, BuildOptions build = {}) {
  return [opt, build](const Problem& p) {
    ModuleSolve out;
    auto f = build_milp(p, build);
    auto r = solve(f, opt);
    out.nodes = r.nodes;
    if (r.status == SolveStatus::kInfeasible) {
      out.optimal = true;
      out.bound = kInf;
      return out;
    }
    if (r.has_solution()) {
      out.schedule = extract_schedule(p, f, r.values);
      out.optimal = r.status == SolveStatus::kOptimal;
      out.bound = out.optimal ? out.schedule->objective : std::min(r.bound, out.schedule->objective);
    } else {
      out.bound = std::max(0.0, r.bound);
    }
    return out;
  };
}

/// Module optimum by enumeration (oracle-scale modules only).
inline ModuleSolver oracle_module_solver() {
  return [](const Problem& p) {
    ModuleSolve out;
    out.optimal = true;
    try {
      out.schedule = brute_force(p).schedule;
      out.bound = out.schedule->objective;
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kInfeasible) throw;
      out.bound = kInf;
    }
    return out;
  };
}

// ---------------------------------------------------------------------------
// MILP-SPLIT

struct SplitOptions {
  int max_pin_combos = 81;  // solves per module; covers 4 endpoints on 3 devices
};

struct SplitResult {
  Schedule schedule;
  bool quasi_optimal = false;  // timed-out module or approximate DP
  int module_solves = 0;
  double wall_s = 0.0;
};

namespace split_detail {

/// Device where task i runs fastest per input at full load (ties: lowest id).
inline int fastest_device(const Problem& p, int i) {
  int best = -1;
  double best_t = kInf;
  for (int u = 0; u < p.device_count(); ++u) {
    auto sizes = p.batch_sizes(u);
    auto lat = p.latencies(i, u);
    for (size_t k = 0; k < sizes.size(); ++k) {
      double per = lat[k] / sizes[k];
      if (per < best_t - 1e-12 || (std::abs(per - best_t) <= 1e-12 && p.hardware().id(u) < p.hardware().id(best))) {
        best_t = per;
        best = u;
      }
    }
  }
  return best < 0 ? 0 : best;
}

struct ModuleOption {
  std::vector<int> pinned;   // global task ids pinned (sorted by task)
  std::vector<int> devices;  // aligned with pinned
  ModuleSolve result;
  std::vector<int> keep;     // sub index -> global index
};

struct DpEntry {
  double value = kInf;
  int option = -1;
  std::vector<int> prev_state;
  double offset = 0.0;
};

}  // namespace split_detail

/// Combines per-module optima along the chain by dynamic programming over
/// the devices of cut endpoints. Modules run back to back: module t+1 starts
/// once module t and the channel transfers into it are done.
inline SplitResult milp_split(const Problem& p, const ModuleDecomposition& d, const ModuleSolver& solver,
                              const SplitOptions& opt = {}) {
  using namespace split_detail;
  auto t0 = std::chrono::steady_clock::now();
  const DnnGraph& g = p.graph();
  const int K = p.device_count();
  const int q = d.size();
  SplitResult res;
  if (q == 0) {
    res.schedule.input_count = p.inputs();
    return res;
  }
  std::vector<int> tie_of(static_cast<size_t>(p.task_count()), -1);
  for (auto [a, b] : p.ties()) {
    tie_of[static_cast<size_t>(a)] = b;
    tie_of[static_cast<size_t>(b)] = a;
  }

  // frontier (sources of prefix-cut edges) after each module
  std::vector<std::vector<int>> frontier(static_cast<size_t>(q));
  for (int t = 0; t + 1 < q; ++t) {
    for (auto [a, b] : d.cuts[static_cast<size_t>(t)]) frontier[static_cast<size_t>(t)].push_back(a);
    auto& f = frontier[static_cast<size_t>(t)];
    std::sort(f.begin(), f.end());
    f.erase(std::unique(f.begin(), f.end()), f.end());
  }

  std::map<std::vector<int>, DpEntry> layer{{{}, DpEntry{0.0, -1, {}, 0.0}}};
  std::vector<std::map<std::vector<int>, DpEntry>> layers;
  std::vector<std::vector<ModuleOption>> options(static_cast<size_t>(q));
  std::vector<int> state_device(static_cast<size_t>(p.task_count()), -1);

  for (int t = 0; t < q; ++t) {
    const auto& mod = d.modules[static_cast<size_t>(t)];
    std::vector<char> in_mod(static_cast<size_t>(p.task_count()), 0);
    for (int i : mod) in_mod[static_cast<size_t>(i)] = 1;
    // endpoints of this module
    std::vector<int> ends;
    for (int i : mod) {
      bool boundary = false;
      for (int j : g.predecessors(i)) boundary |= d.module_of[static_cast<size_t>(j)] < t;
      for (int j : g.successors(i)) boundary |= d.module_of[static_cast<size_t>(j)] > t;
      if (tie_of[static_cast<size_t>(i)] >= 0 && !in_mod[static_cast<size_t>(tie_of[static_cast<size_t>(i)])]) boundary = true;
      if (boundary) ends.push_back(i);
    }
    // endpoints beyond the budget get their fastest device
    std::vector<int> free_ends;
    std::vector<int> fixed_ends;
    long combos = 1;
    for (int i : ends) {
      if (p.pin(i) >= 0) {
        fixed_ends.push_back(i);
        continue;
      }
      if (combos * K <= opt.max_pin_combos) {
        combos *= K;
        free_ends.push_back(i);
      } else {
        fixed_ends.push_back(i);
        res.quasi_optimal = true;
      }
    }
    std::vector<int> pinned = free_ends;
    pinned.insert(pinned.end(), fixed_ends.begin(), fixed_ends.end());
    auto [sub_base, keep] = p.subproblem(mod);
    std::vector<int> local(static_cast<size_t>(p.task_count()), -1);
    for (size_t k = 0; k < keep.size(); ++k) local[static_cast<size_t>(keep[k])] = static_cast<int>(k);

    std::vector<int> digits(free_ends.size(), 0);
    for (long c = 0; c < combos; ++c) {
      long rest = c;
      for (size_t k = 0; k < free_ends.size(); ++k) {
        digits[k] = static_cast<int>(rest % K);
        rest /= K;
      }
      ModuleOption o;
      o.pinned = pinned;
      o.devices = digits;
      for (int i : fixed_ends) o.devices.push_back(p.pin(i) >= 0 ? p.pin(i) : fastest_device(p, i));
      // ties inside the module must agree
      bool ok = true;
      for (size_t a = 0; a < o.pinned.size() && ok; ++a) {
        int partner = tie_of[static_cast<size_t>(o.pinned[a])];
        for (size_t b = 0; b < o.pinned.size(); ++b) {
          if (o.pinned[b] == partner && o.devices[b] != o.devices[a]) ok = false;
        }
      }
      if (!ok) continue;
      Problem sub = sub_base;
      for (size_t k = 0; k < o.pinned.size(); ++k) sub.set_pin(local[static_cast<size_t>(o.pinned[k])], o.devices[k]);
      o.result = solver(sub);
      ++res.module_solves;
      if (!o.result.optimal) res.quasi_optimal = true;
      o.keep = keep;
      options[static_cast<size_t>(t)].push_back(std::move(o));
    }

    // transitions
    std::map<std::vector<int>, DpEntry> next;
    const std::vector<int> empty;
    const auto& prev_front = t > 0 ? frontier[static_cast<size_t>(t - 1)] : empty;
    const auto& next_front = t + 1 < q ? frontier[static_cast<size_t>(t)] : empty;
    auto& opts = options[static_cast<size_t>(t)];
    for (const auto& [state, entry] : layer) {
      if (!std::isfinite(entry.value)) continue;
      for (size_t oi = 0; oi < opts.size(); ++oi) {
        const auto& o = opts[oi];
        if (!o.result.schedule) continue;
        // device of every relevant task under (state, option)
        auto dev = [&](int i) -> int {
          auto it = std::lower_bound(prev_front.begin(), prev_front.end(), i);
          if (it != prev_front.end() && *it == i) return state[static_cast<size_t>(it - prev_front.begin())];
          for (size_t k = 0; k < o.pinned.size(); ++k) {
            if (o.pinned[k] == i) return o.devices[k];
          }
          return -1;
        };
        bool ok = true;
        for (int i : mod) {
          int partner = tie_of[static_cast<size_t>(i)];
          if (partner >= 0 && !in_mod[static_cast<size_t>(partner)] && d.module_of[static_cast<size_t>(partner)] < t) {
            if (dev(partner) != dev(i)) ok = false;
          }
        }
        if (!ok) continue;
        // channel transfers into this module, grouped by device pair
        std::map<std::pair<int, int>, double> volume;
        for (int j : mod) {
          for (int i : g.predecessors(j)) {
            if (d.module_of[static_cast<size_t>(i)] >= t) continue;
            int u = dev(i);
            int v = dev(j);
            if (u < 0 || v < 0) {
              ok = false;
              break;
            }
            if (u == v) continue;
            if (!p.hardware().linked(u, v)) {
              ok = false;
              break;
            }
            volume[{u, v}] += g.task(i).om;
          }
          if (!ok) break;
        }
        if (!ok) continue;
        double comm = 0.0;
        for (const auto& [uv, bytes] : volume) comm = std::max(comm, bytes / p.hardware().bandwidth(uv.first, uv.second));
        double offset = entry.value + comm;
        double value = offset + o.result.schedule->objective;
        std::vector<int> key;
        for (int i : next_front) {
          int x = dev(i);
          if (x < 0) {
            // unpinned endpoint (only possible past the caps): read it off
            for (const auto& b : o.result.schedule->batches) {
              if (o.keep[static_cast<size_t>(b.task)] == i) x = b.device;
            }
          }
          key.push_back(x);
        }
        auto& slot = next[key];
        if (value < slot.value - 1e-12) slot = DpEntry{value, static_cast<int>(oi), state, offset};
      }
    }
    layers.push_back(layer);
    layer = std::move(next);
    if (layer.empty()) throw Error(ErrorCode::kInfeasible, "no feasible pinning for module " + std::to_string(t));
  }
  layers.push_back(layer);

  // backtrack
  auto best = std::min_element(layer.begin(), layer.end(),
                               [](const auto& a, const auto& b) { return a.second.value < b.second.value; });
  std::vector<int> state = best->first;
  Schedule out;
  out.input_count = p.inputs();
  for (int t = q - 1; t >= 0; --t) {
    const DpEntry& e = layers[static_cast<size_t>(t + 1)].at(state);
    const auto& o = options[static_cast<size_t>(t)][static_cast<size_t>(e.option)];
    for (const auto& b : o.result.schedule->batches) {
      Batch nb = b;
      nb.task = o.keep[static_cast<size_t>(b.task)];
      nb.start += e.offset;
      nb.end += e.offset;
      out.batches.push_back(std::move(nb));
    }
    state = e.prev_state;
  }
  finalize(out);
  out.quasi_optimal = res.quasi_optimal || !d.chain || d.max_channels() > 1 || p.inputs() > 1;
  res.quasi_optimal = out.quasi_optimal;
  res.schedule = std::move(out);
  res.wall_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return res;
}

}  // namespace hetmap
