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
#include <functional>
#include <optional>
#include <queue>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

#include "hetmap/error.hpp"
#include "json.hpp"

namespace hetmap {

/// One coarse-grained DNN operation. Sizes are in bytes.
struct TaskNode {
  std::string id;
  double wm = 0.0;  // weights
  double im = 0.0;  // input tensor
  double om = 0.0;  // output tensor; also the weight of every out-edge

  bool operator==(const TaskNode&) const = default;
};

using EdgeById = std::pair<std::string, std::string>;

/// Weighted DAG of tasks. Validated on construction and immutable afterwards;
/// tasks are addressed by their position in `tasks()`.
class DnnGraph {
 public:
  DnnGraph() = default;

  DnnGraph(std::vector<TaskNode> tasks, const std::vector<EdgeById>& edges,
           std::string name = {})
      : tasks_(std::move(tasks)), name_(std::move(name)) {
    index_tasks();
    std::vector<std::pair<int, int>> indexed;
    indexed.reserve(edges.size());
    for (const auto& [src, dst] : edges) {
      auto s = index_of(src);
      auto d = index_of(dst);
      if (!s || !d) {
        throw Error(ErrorCode::kDanglingEdge,
                    "edge references unknown task: " + src + " -> " + dst);
      }
      indexed.emplace_back(*s, *d);
    }
    set_edges(std::move(indexed));
  }

  DnnGraph(std::vector<TaskNode> tasks, std::vector<std::pair<int, int>> edges,
           std::string name = {})
      : tasks_(std::move(tasks)), name_(std::move(name)) {
    index_tasks();
    for (const auto& [s, d] : edges) {
      if (s < 0 || d < 0 || s >= size() || d >= size()) {
        throw Error(ErrorCode::kDanglingEdge, "edge index out of range");
      }
    }
    set_edges(std::move(edges));
  }

  int size() const { return static_cast<int>(tasks_.size()); }
  const std::string& name() const { return name_; }
  std::span<const TaskNode> tasks() const { return tasks_; }
  const TaskNode& task(int i) const { return tasks_[static_cast<size_t>(i)]; }
  const std::string& id(int i) const { return task(i).id; }
  const std::vector<std::pair<int, int>>& edges() const { return edges_; }
  std::span<const int> successors(int i) const { return succ_[static_cast<size_t>(i)]; }
  std::span<const int> predecessors(int i) const { return pred_[static_cast<size_t>(i)]; }

  std::optional<int> index_of(std::string_view id) const {
    auto it = index_.find(std::string(id));
    if (it == index_.end()) return std::nullopt;
    return it->second;
  }

  int require_index(std::string_view id) const {
    auto i = index_of(id);
    if (!i) throw Error(ErrorCode::kUnknownReference, "unknown task: " + std::string(id));
    return *i;
  }

  bool has_edge(int s, int d) const {
    const auto& out = succ_[static_cast<size_t>(s)];
    return std::find(out.begin(), out.end(), d) != out.end();
  }

  /// Kahn order, one valid topological order (ties by index).
  const std::vector<int>& topological_order() const { return topo_; }

  /// Induced subgraph on `subset` (kept in ascending index order). The
  /// returned vector maps new index -> old index.
  std::pair<DnnGraph, std::vector<int>> induced(std::span<const int> subset) const {
    std::vector<int> keep(subset.begin(), subset.end());
    std::sort(keep.begin(), keep.end());
    keep.erase(std::unique(keep.begin(), keep.end()), keep.end());
    std::vector<int> remap(tasks_.size(), -1);
    std::vector<TaskNode> tasks;
    tasks.reserve(keep.size());
    for (size_t k = 0; k < keep.size(); ++k) {
      remap[static_cast<size_t>(keep[k])] = static_cast<int>(k);
      tasks.push_back(task(keep[k]));
    }
    std::vector<std::pair<int, int>> edges;
    for (const auto& [s, d] : edges_) {
      int ns = remap[static_cast<size_t>(s)];
      int nd = remap[static_cast<size_t>(d)];
      if (ns >= 0 && nd >= 0) edges.emplace_back(ns, nd);
    }
    return {DnnGraph(std::move(tasks), std::move(edges), name_), std::move(keep)};
  }

 private:
  void index_tasks() {
    index_.clear();
    for (size_t i = 0; i < tasks_.size(); ++i) {
      const auto& t = tasks_[i];
      for (double v : {t.wm, t.im, t.om}) {
        if (!(v >= 0.0) || !std::isfinite(v)) {
          throw Error(ErrorCode::kInvalidValue, "task " + t.id + " has a negative or non-finite size");
        }
      }
      if (!index_.emplace(t.id, static_cast<int>(i)).second) {
        throw Error(ErrorCode::kDuplicateTask, "duplicate task id: " + t.id);
      }
    }
  }

  void set_edges(std::vector<std::pair<int, int>> edges) {
    edges_ = std::move(edges);
    succ_.assign(tasks_.size(), {});
    pred_.assign(tasks_.size(), {});
    std::unordered_set<std::uint64_t> seen;
    for (const auto& [s, d] : edges_) {
      if (s == d) throw Error(ErrorCode::kCycle, "cycle detected: self-loop on " + id(s));
      auto key = (static_cast<std::uint64_t>(s) << 32) | static_cast<std::uint32_t>(d);
      if (!seen.insert(key).second) {
        throw Error(ErrorCode::kDuplicateEdge, "duplicate edge: " + id(s) + " -> " + id(d));
      }
      succ_[static_cast<size_t>(s)].push_back(d);
      pred_[static_cast<size_t>(d)].push_back(s);
    }
    for (auto& v : succ_) std::sort(v.begin(), v.end());
    for (auto& v : pred_) std::sort(v.begin(), v.end());

    std::vector<int> indeg(tasks_.size());
    for (const auto& [s, d] : edges_) ++indeg[static_cast<size_t>(d)];
    std::priority_queue<int, std::vector<int>, std::greater<>> ready;
    for (int i = 0; i < size(); ++i) {
      if (indeg[static_cast<size_t>(i)] == 0) ready.push(i);
    }
    topo_.clear();
    while (!ready.empty()) {
      int i = ready.top();
      ready.pop();
      topo_.push_back(i);
      for (int j : successors(i)) {
        if (--indeg[static_cast<size_t>(j)] == 0) ready.push(j);
      }
    }
    if (static_cast<int>(topo_.size()) != size()) {
      throw Error(ErrorCode::kCycle, "cycle detected");
    }
  }

  std::vector<TaskNode> tasks_;
  std::vector<std::pair<int, int>> edges_;
  std::vector<std::vector<int>> succ_;
  std::vector<std::vector<int>> pred_;
  std::vector<int> topo_;
  std::unordered_map<std::string, int> index_;
  std::string name_;
};

/// Dense reachability relation over task indices (one bit row per task).
class Reachability {
 public:
  explicit Reachability(int n = 0)
      : n_(n), words_((static_cast<size_t>(n) + 63) / 64), bits_(static_cast<size_t>(n) * words_) {}

  int size() const { return n_; }

  bool reaches(int from, int to) const {
    return (bits_[row(from) + static_cast<size_t>(to) / 64] >> (to % 64)) & 1U;
  }

  void set(int from, int to) {
    bits_[row(from) + static_cast<size_t>(to) / 64] |= std::uint64_t{1} << (to % 64);
  }

  void merge_row(int into, int from) {
    for (size_t w = 0; w < words_; ++w) bits_[row(into) + w] |= bits_[row(from) + w];
  }

  /// Either direction.
  bool related(int a, int b) const { return reaches(a, b) || reaches(b, a); }

  std::vector<std::pair<int, int>> pairs() const {
    std::vector<std::pair<int, int>> out;
    for (int i = 0; i < n_; ++i) {
      for (int j = 0; j < n_; ++j) {
        if (reaches(i, j)) out.emplace_back(i, j);
      }
    }
    return out;
  }

  bool operator==(const Reachability&) const = default;

 private:
  size_t row(int i) const { return static_cast<size_t>(i) * words_; }

  int n_;
  size_t words_;
  std::vector<std::uint64_t> bits_;
};

/// Transitive closure of a DAG: the acyclic case of Purdom's algorithm,
/// merging successor rows in reverse topological order.
inline Reachability transitive_closure(const DnnGraph& g) {
  Reachability r(g.size());
  const auto& order = g.topological_order();
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    int i = *it;
    for (int j : g.successors(i)) {
      r.set(i, j);
      r.merge_row(i, j);
    }
  }
  return r;
}

/// Kahn's method with ties broken by ascending task id (string order).
inline std::vector<int> bfs_topological_order(const DnnGraph& g) {
  std::vector<int> indeg(static_cast<size_t>(g.size()));
  for (const auto& [s, d] : g.edges()) ++indeg[static_cast<size_t>(d)];
  auto later = [&g](int a, int b) { return g.id(a) > g.id(b); };
  std::priority_queue<int, std::vector<int>, decltype(later)> ready(later);
  for (int i = 0; i < g.size(); ++i) {
    if (indeg[static_cast<size_t>(i)] == 0) ready.push(i);
  }
  std::vector<int> order;
  order.reserve(static_cast<size_t>(g.size()));
  while (!ready.empty()) {
    int i = ready.top();
    ready.pop();
    order.push_back(i);
    for (int j : g.successors(i)) {
      if (--indeg[static_cast<size_t>(j)] == 0) ready.push(j);
    }
  }
  return order;
}

/// Tasks reachable from `from` (including itself when it is in `within`),
/// restricted to `within`.
inline std::vector<int> reachable_within(const DnnGraph& g, int from,
                                         const std::vector<char>& within, bool reverse) {
  std::vector<char> seen(static_cast<size_t>(g.size()), 0);
  std::vector<int> stack{from};
  seen[static_cast<size_t>(from)] = 1;
  std::vector<int> out;
  while (!stack.empty()) {
    int v = stack.back();
    stack.pop_back();
    if (within[static_cast<size_t>(v)]) out.push_back(v);
    auto next = reverse ? g.predecessors(v) : g.successors(v);
    for (int w : next) {
      if (!seen[static_cast<size_t>(w)]) {
        seen[static_cast<size_t>(w)] = 1;
        stack.push_back(w);
      }
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

// ---------------------------------------------------------------------------
// JSON: {"tasks":[{"id","wm","im","om"}...], "edges":[[src,dst]...], "name"?}

inline DnnGraph graph_from_json(const nlohmann::json& doc) {
  try {
    std::vector<TaskNode> tasks;
    for (const auto& t : doc.at("tasks")) {
      tasks.push_back(TaskNode{t.at("id").get<std::string>(), t.value("wm", 0.0),
                               t.value("im", 0.0), t.value("om", 0.0)});
    }
    std::vector<EdgeById> edges;
    if (doc.contains("edges")) {
      for (const auto& e : doc.at("edges")) {
        if (!e.is_array() || e.size() != 2) {
          throw Error(ErrorCode::kParse, "edge must be a [src, dst] pair");
        }
        edges.emplace_back(e[0].get<std::string>(), e[1].get<std::string>());
      }
    }
    return DnnGraph(std::move(tasks), edges, doc.value("name", std::string{}));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kParse, std::string("graph document: ") + e.what());
  }
}

inline DnnGraph load_graph(std::string_view text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kParse, std::string("graph document: ") + e.what());
  }
  return graph_from_json(doc);
}

inline nlohmann::json graph_to_json(const DnnGraph& g) {
  nlohmann::json doc;
  doc["tasks"] = nlohmann::json::array();
  for (const auto& t : g.tasks()) {
    doc["tasks"].push_back({{"id", t.id}, {"wm", t.wm}, {"im", t.im}, {"om", t.om}});
  }
  doc["edges"] = nlohmann::json::array();
  for (const auto& [s, d] : g.edges()) doc["edges"].push_back({g.id(s), g.id(d)});
  if (!g.name().empty()) doc["name"] = g.name();
  return doc;
}

inline std::string save_graph(const DnnGraph& g) { return graph_to_json(g).dump(1); }

}  // namespace hetmap
