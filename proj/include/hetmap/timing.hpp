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
#include <limits>
#include <utility>
#include <vector>

#include "hetmap/problem.hpp"
#include "hetmap/schedule.hpp"

namespace hetmap {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// Incremental schedule construction under the task-level barrier model used
/// by every scheduler here: each batch of j waits for every batch of each
/// parent i, plus om_i/beta when the two batches share an input and sit on
/// different devices.
class BarrierBuilder {
 public:
  explicit BarrierBuilder(const Problem& p)
      : p_(&p),
        per_task_(static_cast<size_t>(p.task_count())),
        busy_(static_cast<size_t>(p.device_count())),
        mem_(static_cast<size_t>(p.device_count()), 0.0) {
    sched_.input_count = p.inputs();
  }

  const Problem& problem() const { return *p_; }

  /// Barrier-ready time of a batch of j on v holding `inputs`; +inf when a
  /// needed link is missing.
  double ready(int j, int v, const std::vector<int>& inputs) const {
    double t = 0.0;
    for (int i : p_->graph().predecessors(j)) {
      for (int bi : per_task_[static_cast<size_t>(i)]) {
        const auto& b = sched_.batches[static_cast<size_t>(bi)];
        double at = b.end;
        if (b.device != v && shares_input(b.inputs, inputs)) at += p_->comm_time(i, b.device, v);
        t = std::max(t, at);
      }
    }
    return t;
  }

  double device_free(int v) const {
    const auto& lane = busy_[static_cast<size_t>(v)];
    return lane.empty() ? 0.0 : lane.back().second;
  }

  /// Earliest start >= ready on v for `duration`; with insertion the first
  /// idle gap that fits is used, otherwise the end of the lane.
  double earliest_slot(int v, double ready_at, double duration, bool insertion) const {
    const auto& lane = busy_[static_cast<size_t>(v)];
    if (!insertion) return std::max(ready_at, device_free(v));
    double t = ready_at;
    for (const auto& [s, e] : lane) {
      if (t + duration <= s + kTimeTol && (duration > 0.0 || t <= s)) return t;
      t = std::max(t, e);
    }
    return t;
  }

  /// Extra memory a batch would need on v.
  double memory_delta(int j, int v, int size) const {
    const auto& t = p_->graph().task(j);
    double d = (t.im + t.om) * size;
    bool has_weights = false;
    for (int bi : per_task_[static_cast<size_t>(j)]) {
      if (sched_.batches[static_cast<size_t>(bi)].device == v) has_weights = true;
    }
    if (!has_weights) d += t.wm;
    return d;
  }

  bool fits_memory(int j, int v, int size) const {
    double cap = p_->hardware().device(v).memory;
    return mem_[static_cast<size_t>(v)] + memory_delta(j, v, size) <= cap * (1.0 + 1e-12);
  }

  void place(int j, int v, std::vector<int> inputs, double start) {
    double dur = p_->latency(j, v, static_cast<int>(inputs.size())).value();
    mem_[static_cast<size_t>(v)] += memory_delta(j, v, static_cast<int>(inputs.size()));
    Batch b{j, v, std::move(inputs), start, start + dur};
    auto& lane = busy_[static_cast<size_t>(v)];
    auto at = std::lower_bound(lane.begin(), lane.end(), std::make_pair(b.start, b.end));
    lane.insert(at, {b.start, b.end});
    per_task_[static_cast<size_t>(j)].push_back(static_cast<int>(sched_.batches.size()));
    sched_.batches.push_back(std::move(b));
  }

  /// Appends at the end of v's lane; false when the batch is unsupported,
  /// unreachable (missing link) or over memory.
  bool append(int j, int v, std::vector<int> inputs, bool insertion = false) {
    auto dur = p_->latency(j, v, static_cast<int>(inputs.size()));
    if (!dur) return false;
    if (!fits_memory(j, v, static_cast<int>(inputs.size()))) return false;
    double r = ready(j, v, inputs);
    if (r == kInf) return false;
    place(j, v, std::move(inputs), earliest_slot(v, r, *dur, insertion));
    return true;
  }

  double current_makespan() const { return makespan(sched_); }

  Schedule finish() && {
    finalize(sched_);
    return std::move(sched_);
  }

  const Schedule& partial() const { return sched_; }

  static bool shares_input(const std::vector<int>& a, const std::vector<int>& b) {
    size_t x = 0;
    size_t y = 0;
    while (x < a.size() && y < b.size()) {
      if (a[x] == b[y]) return true;
      if (a[x] < b[y]) {
        ++x;
      } else {
        ++y;
      }
    }
    return false;
  }

 private:
  const Problem* p_;
  Schedule sched_;
  std::vector<std::vector<int>> per_task_;
  std::vector<std::vector<std::pair<double, double>>> busy_;
  std::vector<double> mem_;
};

}  // namespace hetmap
