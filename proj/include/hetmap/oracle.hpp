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
#include <limits>
#include <string>
#include <vector>

#include "hetmap/error.hpp"
#include "hetmap/graph.hpp"
#include "hetmap/problem.hpp"
#include "hetmap/schedule.hpp"

namespace hetmap {

inline constexpr int kOracleMaxTasks = 8;
inline constexpr int kOracleMaxDevices = 3;
inline constexpr int kOracleMaxInputs = 2;

struct OracleResult {
  Schedule schedule;
  /// Device of every (task, input), tasks in BFS topological order, inputs
  /// ascending. The oracle returns the lexicographically smallest optimum.
  std::vector<int> assignment;
  long assignments_explored = 0;
};

namespace oracle_detail {

struct Part {
  int device;
  unsigned mask;  // bit l-1 set when input l is in this batch
  double dur;
};

struct Option {
  std::vector<int> dev;  // per input
  std::vector<Part> parts;
  double longest = 0.0;  // longest batch
};

class Search {
 public:
  explicit Search(const Problem& p) : p_(p), n_(p.task_count()), k_(p.device_count()), L_(p.inputs()) {
    order_ = bfs_topological_order(p.graph());
    pos_.assign(static_cast<size_t>(n_), 0);
    for (int k = 0; k < n_; ++k) pos_[static_cast<size_t>(order_[static_cast<size_t>(k)])] = k;
    build_options();
    min_longest_.assign(static_cast<size_t>(n_), 0.0);
    for (int i = 0; i < n_; ++i) {
      double best = std::numeric_limits<double>::infinity();
      for (const auto& o : options_[static_cast<size_t>(i)]) best = std::min(best, o.longest);
      min_longest_[static_cast<size_t>(i)] = best;
    }
    choice_.assign(static_cast<size_t>(n_), -1);
    load_.assign(static_cast<size_t>(k_), 0.0);
    mem_.assign(static_cast<size_t>(k_), 0.0);
  }

  void run() { assign(0); }

  bool found() const { return std::isfinite(best_); }
  double best() const { return best_; }
  long explored() const { return explored_; }
  const std::vector<int>& best_choice() const { return best_choice_; }
  const std::vector<double>& best_starts() const { return best_starts_; }
  const Option& option(int task, int idx) const {
    return options_[static_cast<size_t>(task)][static_cast<size_t>(idx)];
  }
  const std::vector<int>& order() const { return order_; }

 private:
  void build_options() {
    options_.resize(static_cast<size_t>(n_));
    int combos = 1;
    for (int l = 0; l < L_; ++l) combos *= k_;
    for (int i = 0; i < n_; ++i) {
      for (int code = 0; code < combos; ++code) {
        Option o;
        o.dev.resize(static_cast<size_t>(L_));
        int c = code;
        for (int l = L_ - 1; l >= 0; --l) {
          o.dev[static_cast<size_t>(l)] = c % k_;
          c /= k_;
        }
        bool ok = true;
        for (int u = 0; u < k_ && ok; ++u) {
          unsigned mask = 0;
          int count = 0;
          for (int l = 0; l < L_; ++l) {
            if (o.dev[static_cast<size_t>(l)] == u) {
              mask |= 1U << l;
              ++count;
            }
          }
          if (count == 0) continue;
          if (p_.pin(i) >= 0 && p_.pin(i) != u) ok = false;
          auto t = p_.latency(i, u, count);
          if (!t) {
            ok = false;
          } else {
            o.parts.push_back(Part{u, mask, *t});
            o.longest = std::max(o.longest, *t);
          }
        }
        if (ok) options_[static_cast<size_t>(i)].push_back(std::move(o));
      }
    }
  }

  const Option& chosen(int i) const {
    return options_[static_cast<size_t>(i)][static_cast<size_t>(choice_[static_cast<size_t>(i)])];
  }

  /// Checks links, ties, memory and the load / path bounds for the prefix
  /// ending at position k.
  bool prefix_ok(int k) {
    int i = order_[static_cast<size_t>(k)];
    const Option& o = chosen(i);
    for (int h : p_.graph().predecessors(i)) {
      const Option& oh = chosen(h);
      for (int l = 0; l < L_; ++l) {
        if (!p_.hardware().linked(oh.dev[static_cast<size_t>(l)], o.dev[static_cast<size_t>(l)])) return false;
      }
    }
    for (const auto& [a, b] : p_.ties()) {
      int other = a == i ? b : b == i ? a : -1;
      if (other < 0 || pos_[static_cast<size_t>(other)] > k) continue;
      if (chosen(other).dev != o.dev) return false;
    }
    for (int u = 0; u < k_; ++u) {
      if (mem_[static_cast<size_t>(u)] > p_.hardware().device(u).memory * (1.0 + 1e-12)) return false;
      if (load_[static_cast<size_t>(u)] >= best_ - 1e-9) return false;
    }
    // Longest path with fixed tasks at their longest batch and free ones at
    // their smallest possible longest batch.
    std::vector<double> finish(static_cast<size_t>(n_), 0.0);
    double cp = 0.0;
    for (int t : p_.graph().topological_order()) {
      double start = 0.0;
      for (int h : p_.graph().predecessors(t)) start = std::max(start, finish[static_cast<size_t>(h)]);
      double dur = pos_[static_cast<size_t>(t)] <= k ? chosen(t).longest : min_longest_[static_cast<size_t>(t)];
      finish[static_cast<size_t>(t)] = start + dur;
      cp = std::max(cp, finish[static_cast<size_t>(t)]);
    }
    return cp < best_ - 1e-9;
  }

  void assign(int k) {
    if (k == n_) {
      ++explored_;
      sequence();
      return;
    }
    int i = order_[static_cast<size_t>(k)];
    const auto& task = p_.graph().task(i);
    for (int idx = 0; idx < static_cast<int>(options_[static_cast<size_t>(i)].size()); ++idx) {
      choice_[static_cast<size_t>(i)] = idx;
      const Option& o = chosen(i);
      for (const auto& part : o.parts) {
        int cnt = __builtin_popcount(part.mask);
        load_[static_cast<size_t>(part.device)] += part.dur;
        mem_[static_cast<size_t>(part.device)] += (task.im + task.om) * cnt + task.wm;
      }
      if (prefix_ok(k)) assign(k + 1);
      for (const auto& part : o.parts) {
        int cnt = __builtin_popcount(part.mask);
        load_[static_cast<size_t>(part.device)] -= part.dur;
        mem_[static_cast<size_t>(part.device)] -= (task.im + task.om) * cnt + task.wm;
      }
    }
    choice_[static_cast<size_t>(i)] = -1;
  }

  // --- sequencing -----------------------------------------------------------

  struct Item {
    int task;
    int device;
    unsigned mask;
    double dur;
  };

  void sequence() {
    items_.clear();
    first_item_.assign(static_cast<size_t>(n_), 0);
    for (int i = 0; i < n_; ++i) {
      first_item_[static_cast<size_t>(i)] = static_cast<int>(items_.size());
      for (const auto& part : chosen(i).parts) items_.push_back(Item{i, part.device, part.mask, part.dur});
    }
    first_item_.push_back(static_cast<int>(items_.size()));
    // Tail: time that must still elapse after a batch of i ends.
    tail_.assign(static_cast<size_t>(n_), 0.0);
    const auto& topo = p_.graph().topological_order();
    for (auto it = topo.rbegin(); it != topo.rend(); ++it) {
      double t = 0.0;
      for (int j : p_.graph().successors(*it)) t = std::max(t, chosen(j).longest + tail_[static_cast<size_t>(j)]);
      tail_[static_cast<size_t>(*it)] = t;
    }
    placed_.assign(items_.size(), 0);
    start_.assign(items_.size(), 0.0);
    end_.assign(items_.size(), 0.0);
    left_.assign(static_cast<size_t>(n_), 0);
    for (int i = 0; i < n_; ++i) left_[static_cast<size_t>(i)] = static_cast<int>(chosen(i).parts.size());
    free_.assign(static_cast<size_t>(k_), 0.0);
    remaining_ = load_;
    dfs(0, 0.0, 0.0);
  }

  double ready(const Item& x) const {
    double r = 0.0;
    for (int h : p_.graph().predecessors(x.task)) {
      for (int y = first_item_[static_cast<size_t>(h)]; y < first_item_[static_cast<size_t>(h) + 1]; ++y) {
        const Item& iy = items_[static_cast<size_t>(y)];
        double at = end_[static_cast<size_t>(y)];
        if (iy.device != x.device && (iy.mask & x.mask) != 0U) {
          at += p_.graph().task(h).om / p_.hardware().bandwidth(iy.device, x.device);
        }
        r = std::max(r, at);
      }
    }
    return r;
  }

  void dfs(size_t count, double last_start, double bound_so_far) {
    if (count == items_.size()) {
      double c = 0.0;
      for (double e : end_) c = std::max(c, e);
      if (c < best_ - 1e-9) {
        best_ = c;
        best_choice_ = choice_;
        best_starts_ = start_;
      }
      return;
    }
    for (size_t x = 0; x < items_.size(); ++x) {
      if (placed_[x]) continue;
      const Item& it = items_[x];
      bool eligible = true;
      for (int h : p_.graph().predecessors(it.task)) {
        if (left_[static_cast<size_t>(h)] > 0) eligible = false;
      }
      if (!eligible) continue;
      double s = std::max(free_[static_cast<size_t>(it.device)], ready(it));
      if (s < last_start - 1e-12) continue;
      double e = s + it.dur;
      double lb = std::max(bound_so_far, e + tail_[static_cast<size_t>(it.task)]);
      auto du = static_cast<size_t>(it.device);
      double old_free = free_[du];
      free_[du] = e;
      remaining_[du] -= it.dur;
      double load_lb = lb;
      for (int u = 0; u < k_; ++u) {
        load_lb = std::max(load_lb, free_[static_cast<size_t>(u)] + remaining_[static_cast<size_t>(u)]);
      }
      if (load_lb < best_ - 1e-9) {
        placed_[x] = 1;
        start_[x] = s;
        end_[x] = e;
        --left_[static_cast<size_t>(it.task)];
        dfs(count + 1, s, lb);
        ++left_[static_cast<size_t>(it.task)];
        placed_[x] = 0;
        end_[x] = 0.0;
      }
      free_[du] = old_free;
      remaining_[du] += it.dur;
    }
  }

  const Problem& p_;
  int n_;
  int k_;
  int L_;
  std::vector<int> order_;
  std::vector<int> pos_;
  std::vector<std::vector<Option>> options_;
  std::vector<double> min_longest_;
  std::vector<int> choice_;
  std::vector<double> load_;
  std::vector<double> mem_;
  double best_ = std::numeric_limits<double>::infinity();
  std::vector<int> best_choice_;
  std::vector<double> best_starts_;
  long explored_ = 0;

  std::vector<Item> items_;
  std::vector<int> first_item_;
  std::vector<double> tail_;
  std::vector<char> placed_;
  std::vector<double> start_;
  std::vector<double> end_;
  std::vector<int> left_;
  std::vector<double> free_;
  std::vector<double> remaining_;
};

}  // namespace oracle_detail

/// Exhaustive optimum for tiny instances: every per-input device vector of
/// every task, then every batch order per device. Uses the same task-level
/// barrier as the other schedulers.
inline OracleResult brute_force(const Problem& p) {
  if (p.task_count() > kOracleMaxTasks || p.device_count() > kOracleMaxDevices || p.inputs() > kOracleMaxInputs) {
    throw Error(ErrorCode::kCapExceeded, "oracle caps: |V| <= 8, |K| <= 3, L <= 2");
  }
  oracle_detail::Search search(p);
  search.run();
  if (!search.found()) throw Error(ErrorCode::kInfeasible, "no feasible schedule exists");

  OracleResult res;
  res.assignments_explored = search.explored();
  const auto& choice = search.best_choice();
  const auto& starts = search.best_starts();
  Schedule& s = res.schedule;
  s.input_count = p.inputs();
  size_t item = 0;
  for (int i = 0; i < p.task_count(); ++i) {
    const auto& o = search.option(i, choice[static_cast<size_t>(i)]);
    for (const auto& part : o.parts) {
      Batch b;
      b.task = i;
      b.device = part.device;
      for (int l = 0; l < p.inputs(); ++l) {
        if (part.mask & (1U << l)) b.inputs.push_back(l + 1);
      }
      b.start = starts[item++];
      b.end = b.start + part.dur;
      s.batches.push_back(std::move(b));
    }
  }
  finalize(s);
  for (int i : search.order()) {
    const auto& o = search.option(i, choice[static_cast<size_t>(i)]);
    res.assignment.insert(res.assignment.end(), o.dev.begin(), o.dev.end());
  }
  return res;
}

}  // namespace hetmap
