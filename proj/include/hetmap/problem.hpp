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
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "hetmap/error.hpp"
#include "hetmap/graph.hpp"
#include "hetmap/hardware.hpp"

namespace hetmap {

/// A scheduling instance: graph, hardware, latency lookups and the number of
/// inputs L. Optionally carries device pins (task must run all its inputs on
/// one device) and ties (two tasks must share devices input by input).
///
/// Latencies are copied into a dense table on construction; an entry is
/// required for every (task, device, size) with size supported and size <= L.
class Problem {
 public:
  Problem(DnnGraph graph, HardwareSystem hw, const LatencyTable& table, int inputs)
      : graph_(std::make_shared<const DnnGraph>(std::move(graph))),
        hw_(std::make_shared<const HardwareSystem>(std::move(hw))),
        inputs_(inputs) {
    if (inputs_ < 1) throw Error(ErrorCode::kInvalidValue, "input count L must be >= 1");
    const int n = graph_->size();
    const int k = hw_->size();
    latency_.assign(static_cast<size_t>(n) * static_cast<size_t>(k), {});
    for (int i = 0; i < n; ++i) {
      for (int u = 0; u < k; ++u) {
        auto& row = latency_[slot(i, u)];
        for (int b : hw_->device(u).batch_sizes) {
          if (b > inputs_) break;
          auto ms = table.get(graph_->id(i), hw_->id(u), b);
          if (!ms) {
            throw Error(ErrorCode::kMissingLatency, "missing latency for (" + graph_->id(i) + ", " +
                                                        hw_->id(u) + ", " + std::to_string(b) + ")");
          }
          row.push_back(*ms);
        }
      }
    }
    pins_.assign(static_cast<size_t>(n), -1);
  }

  const DnnGraph& graph() const { return *graph_; }
  const HardwareSystem& hardware() const { return *hw_; }
  int inputs() const { return inputs_; }
  int task_count() const { return graph_->size(); }
  int device_count() const { return hw_->size(); }

  /// Supported sizes on u that are usable with L inputs (ascending).
  std::span<const int> batch_sizes(int u) const {
    const auto& all = hw_->device(u).batch_sizes;
    auto end = std::upper_bound(all.begin(), all.end(), inputs_);
    return {all.data(), static_cast<size_t>(end - all.begin())};
  }

  bool supports(int u, int size) const {
    auto sizes = batch_sizes(u);
    return std::binary_search(sizes.begin(), sizes.end(), size);
  }

  /// Latency of a batch of `size` inputs of task i on u, if the size is supported.
  std::optional<double> latency(int i, int u, int size) const {
    auto sizes = batch_sizes(u);
    auto it = std::lower_bound(sizes.begin(), sizes.end(), size);
    if (it == sizes.end() || *it != size) return std::nullopt;
    return latency_[slot(i, u)][static_cast<size_t>(it - sizes.begin())];
  }

  /// Latencies aligned with batch_sizes(u).
  std::span<const double> latencies(int i, int u) const { return latency_[slot(i, u)]; }

  /// om_i / beta(u, v); 0 on the same device, +inf without a link.
  double comm_time(int i, int u, int v) const {
    return hw_->transfer_time(graph_->task(i).om, u, v);
  }

  double min_latency(int i) const {
    double best = std::numeric_limits<double>::infinity();
    for (int u = 0; u < device_count(); ++u) {
      for (double t : latencies(i, u)) best = std::min(best, t);
    }
    return best;
  }

  double max_latency(int i) const {
    double worst = 0.0;
    for (int u = 0; u < device_count(); ++u) {
      for (double t : latencies(i, u)) worst = std::max(worst, t);
    }
    return worst;
  }

  int pin(int i) const { return pins_[static_cast<size_t>(i)]; }
  const std::vector<int>& pins() const { return pins_; }
  const std::vector<std::pair<int, int>>& ties() const { return ties_; }

  void set_pin(int i, int device) {
    if (device < -1 || device >= device_count()) throw Error(ErrorCode::kInvalidValue, "pin device out of range");
    pins_[static_cast<size_t>(i)] = device;
  }

  void add_tie(int a, int b) { ties_.emplace_back(a, b); }

  /// Induced subproblem on `tasks`; pins and ties inside the subset are kept.
  /// The second element maps new task index -> index in this problem.
  std::pair<Problem, std::vector<int>> subproblem(std::span<const int> tasks) const {
    auto [sub_graph, keep] = graph_->induced(tasks);
    Problem sub(*this);
    sub.graph_ = std::make_shared<const DnnGraph>(std::move(sub_graph));
    std::vector<int> remap(static_cast<size_t>(task_count()), -1);
    sub.latency_.clear();
    sub.pins_.clear();
    for (size_t k = 0; k < keep.size(); ++k) {
      remap[static_cast<size_t>(keep[k])] = static_cast<int>(k);
      for (int u = 0; u < device_count(); ++u) sub.latency_.push_back(latency_[slot(keep[k], u)]);
      sub.pins_.push_back(pin(keep[k]));
    }
    sub.ties_.clear();
    for (const auto& [a, b] : ties_) {
      int na = remap[static_cast<size_t>(a)];
      int nb = remap[static_cast<size_t>(b)];
      if (na >= 0 && nb >= 0) sub.ties_.emplace_back(na, nb);
    }
    return {std::move(sub), std::move(keep)};
  }

  /// Same instance with a different input count; latency rows are rebuilt
  /// from the original table so a larger L needs its entries present.
  Problem with_inputs(int inputs, const LatencyTable& table) const {
    Problem p(*graph_, *hw_, table, inputs);
    p.pins_ = pins_;
    p.ties_ = ties_;
    return p;
  }

  /// Reduce L without a table (only valid for L' <= L).
  Problem with_fewer_inputs(int inputs) const {
    if (inputs < 1 || inputs > inputs_) throw Error(ErrorCode::kInvalidValue, "with_fewer_inputs needs 1 <= L' <= L");
    Problem p(*this);
    p.inputs_ = inputs;
    for (int i = 0; i < task_count(); ++i) {
      for (int u = 0; u < device_count(); ++u) {
        auto& row = p.latency_[slot(i, u)];
        row.resize(p.batch_sizes(u).size());
      }
    }
    return p;
  }

  /// Adds a task with zero latency on every device (used for dummy nodes).
  /// Returns the new problem; the graph must already contain the task.
  Problem with_graph(DnnGraph graph, const std::vector<int>& old_index_of_new) const {
    Problem p(*this);
    std::vector<int> back(static_cast<size_t>(task_count()), -1);
    p.latency_.clear();
    p.pins_.clear();
    for (size_t k = 0; k < old_index_of_new.size(); ++k) {
      int old = old_index_of_new[k];
      if (old >= 0) back[static_cast<size_t>(old)] = static_cast<int>(k);
      for (int u = 0; u < device_count(); ++u) {
        if (old >= 0) {
          p.latency_.push_back(latency_[slot(old, u)]);
        } else {
          p.latency_.emplace_back(batch_sizes(u).size(), 0.0);
        }
      }
      p.pins_.push_back(old >= 0 ? pin(old) : -1);
    }
    p.ties_.clear();
    for (const auto& [a, b] : ties_) {
      p.ties_.emplace_back(back[static_cast<size_t>(a)], back[static_cast<size_t>(b)]);
    }
    p.graph_ = std::make_shared<const DnnGraph>(std::move(graph));
    return p;
  }

 private:
  size_t slot(int i, int u) const {
    return static_cast<size_t>(i) * static_cast<size_t>(hw_->size()) + static_cast<size_t>(u);
  }

  std::shared_ptr<const DnnGraph> graph_;
  std::shared_ptr<const HardwareSystem> hw_;
  int inputs_ = 1;
  std::vector<std::vector<double>> latency_;
  std::vector<int> pins_;
  std::vector<std::pair<int, int>> ties_;
};

}  // namespace hetmap
