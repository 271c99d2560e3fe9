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

// Small random instances for tests. Deliberately separate from benchgen so
// test oracles do not inherit its assumptions.

#include <algorithm>
#include <cmath>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "hetmap/graph.hpp"
#include "hetmap/hardware.hpp"
#include "hetmap/problem.hpp"
#include "hetmap/schedule.hpp"

namespace hetmap::testing {

struct TinySpec {
  int tasks = 5;
  int devices = 2;
  int inputs = 1;
  double edge_p = 0.35;
  bool mixed_batches = true;
  bool drop_links = false;
  bool identical_devices = false;
};

inline Problem tiny_problem(std::uint64_t seed, const TinySpec& spec) {
  std::mt19937_64 rng(seed);
  auto uni = [&](double a, double b) { return a + (b - a) * (static_cast<double>(rng() >> 11) * 0x1.0p-53); };
  auto coin = [&](double p) { return uni(0.0, 1.0) < p; };

  std::vector<TaskNode> tasks;
  for (int i = 0; i < spec.tasks; ++i) {
    tasks.push_back(TaskNode{"t" + std::to_string(i), std::floor(uni(0, 50)), std::floor(uni(0, 20)),
                             std::floor(uni(1, 40))});
  }
  std::vector<std::pair<int, int>> edges;
  for (int i = 0; i < spec.tasks; ++i) {
    for (int j = i + 1; j < spec.tasks; ++j) {
      if (coin(spec.edge_p)) edges.emplace_back(i, j);
    }
  }
  DnnGraph g(std::move(tasks), std::move(edges), "tiny");

  std::vector<Device> devices;
  for (int u = 0; u < spec.devices; ++u) {
    std::vector<int> sizes{1, 2};
    if (spec.mixed_batches && !spec.identical_devices && spec.inputs > 1) {
      int pick = static_cast<int>(rng() % 3);
      sizes = pick == 0 ? std::vector<int>{1} : pick == 1 ? std::vector<int>{2} : std::vector<int>{1, 2};
    }
    devices.push_back(Device{"d" + std::to_string(u), 1e6, sizes});
  }
  // At least one device must accept size 1 or L so every task can run.
  if (spec.inputs > 1) devices[0].batch_sizes = {1, 2};
  HardwareSystem hw(devices);
  double bw = uni(2.0, 10.0);
  for (int u = 0; u < spec.devices; ++u) {
    for (int v = 0; v < spec.devices; ++v) {
      if (u == v) continue;
      if (spec.drop_links && u + v == 1 + (spec.devices > 2 ? 2 : 0)) continue;
      hw.set_bandwidth(u, v, spec.identical_devices ? 5.0 : std::floor(bw * 10) / 10 + (u + v) * 0.5);
    }
  }

  LatencyTable t;
  for (int i = 0; i < spec.tasks; ++i) {
    double base = std::floor(uni(1, 10));
    for (int u = 0; u < spec.devices; ++u) {
      double f = spec.identical_devices ? 1.0 : (u == 0 ? 1.0 : std::floor(uni(5, 20)) / 10.0);
      for (int b : hw.device(u).batch_sizes) {
        double ms = base * f * (b == 1 ? 1.0 : 1.6);
        t.set(g.id(i), hw.id(u), b, std::round(ms * 100) / 100);
      }
    }
  }
  return Problem(std::move(g), std::move(hw), t, spec.inputs);
}

/// Builds a problem from explicit pieces (handy for hand-made examples).
inline Problem make_problem(std::vector<TaskNode> tasks, std::vector<EdgeById> edges, std::vector<Device> devices,
                            const std::vector<std::tuple<std::string, std::string, double>>& links,
                            const std::vector<std::tuple<std::string, std::string, int, double>>& lat, int L) {
  DnnGraph g(std::move(tasks), edges);
  HardwareSystem hw(std::move(devices));
  for (const auto& [a, b, bw] : links) hw.set_bandwidth(hw.require_index(a), hw.require_index(b), bw);
  LatencyTable t;
  for (const auto& [task, dev, b, ms] : lat) t.set(task, dev, b, ms);
  return Problem(std::move(g), std::move(hw), t, L);
}

/// Perturbed copies of a valid schedule that must all be rejected: each
/// batch with a parent moved to start before its barrier, and each batch
/// moved onto another device's busy slot. Objectives are recomputed so the
/// makespan check alone never catches them.
inline std::vector<Schedule> perturbations(const Problem& p, const Schedule& s) {
  std::vector<Schedule> out;
  auto refresh = [](Schedule& m) { m.objective = makespan(m); };
  for (size_t x = 0; x < s.batches.size(); ++x) {
    const Batch& b = s.batches[x];
    double ready = 0.0;
    for (int i : p.graph().predecessors(b.task)) {
      for (const auto& a : s.batches) {
        if (a.task != i) continue;
        for (int l : a.inputs) {
          if (std::find(b.inputs.begin(), b.inputs.end(), l) != b.inputs.end()) {
            ready = std::max(ready, a.end + p.comm_time(i, a.device, b.device));
          }
        }
      }
    }
    if (p.graph().predecessors(b.task).empty()) continue;
    Schedule m = s;
    double shift = b.start - ready + std::max(1e-3, 0.25 * (b.end - b.start) + 0.1);
    m.batches[x].start -= shift;
    m.batches[x].end -= shift;
    refresh(m);
    out.push_back(std::move(m));
  }
  for (size_t x = 0; x < s.batches.size(); ++x) {
    for (size_t y = 0; y < s.batches.size(); ++y) {
      const Batch& a = s.batches[x];
      const Batch& c = s.batches[y];
      if (a.device == c.device || c.end - c.start <= 1e-3) continue;
      auto t = p.latency(a.task, c.device, a.size());
      Schedule m = s;
      m.batches[x].device = c.device;
      m.batches[x].start = c.start;
      m.batches[x].end = c.start + t.value_or(a.end - a.start);
      if (t && *t <= 1e-3) continue;  // zero-length batches never overlap
      refresh(m);
      out.push_back(std::move(m));
      break;
    }
  }
  return out;
}

}  // namespace hetmap::testing
