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
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "hetmap/error.hpp"
#include "hetmap/graph.hpp"
#include "hetmap/milp_model.hpp"
#include "hetmap/problem.hpp"
#include "hetmap/schedule.hpp"
#include "hetmap/timing.hpp"

namespace hetmap {

enum class Objective { kLatency, kThroughput };

enum class SymmetryCriterion { kNone, kBatch, kTask, kTime };

struct BuildOptions {
  Objective objective = Objective::kLatency;
  bool prune = true;  // drop ordering pairs related by a path
  bool load_rows = true;  // valid C >= busy time per device; tightens the relaxation
};

/// A built model plus the column maps needed to read a solution back.
struct Formulation {
  MilpModel model;
  Objective objective = Objective::kLatency;
  double horizon = 0.0;
  int tasks = 0;
  int devices = 0;
  int inputs = 0;
  std::vector<int> x;                                // [(i*K + u)*L + l-1]
  std::vector<std::vector<std::pair<int, int>>> b;   // [(i*K + u)] -> (size, column)
  std::vector<int> s;                                // [i*K + u]
  int c = -1;
  int ordering_pairs = 0;                            // unordered task pairs with ordering rows

  int x_var(int i, int u, int l) const {
    return x[(static_cast<size_t>(i) * static_cast<size_t>(devices) + static_cast<size_t>(u)) *
                 static_cast<size_t>(inputs) +
             static_cast<size_t>(l - 1)];
  }
  int s_var(int i, int u) const {
    return s[static_cast<size_t>(i) * static_cast<size_t>(devices) + static_cast<size_t>(u)];
  }
  const std::vector<std::pair<int, int>>& b_vars(int i, int u) const {
    return b[static_cast<size_t>(i) * static_cast<size_t>(devices) + static_cast<size_t>(u)];
  }
};

/// Big-M magnitude: every task at its slowest option in sequence, plus the
/// slowest linked transfer on every edge.
inline double horizon(const Problem& p) {
  double h = 0.0;
  for (int i = 0; i < p.task_count(); ++i) h += p.max_latency(i);
  for (const auto& [i, j] : p.graph().edges()) {
    double worst = 0.0;
    for (int u = 0; u < p.device_count(); ++u) {
      for (int v = 0; v < p.device_count(); ++v) {
        if (u == v || !p.hardware().linked(u, v)) continue;
        worst = std::max(worst, p.comm_time(i, u, v));
      }
    }
    h += worst;
  }
  return h;
}

namespace detail {

inline std::string name(char tag, std::initializer_list<int> idx) {
  std::string s(1, tag);
  for (int v : idx) s += "_" + std::to_string(v);
  return s;
}

inline std::string name(const char* tag, std::initializer_list<int> idx) {
  std::string s(tag);
  for (int v : idx) s += "_" + std::to_string(v);
  return s;
}

}  // namespace detail

inline Formulation build_milp(const Problem& p, const BuildOptions& opt = {}) {
  const int n = p.task_count();
  const int K = p.device_count();
  const int L = p.inputs();
  const auto& g = p.graph();
  const auto& hw = p.hardware();

  Formulation f;
  f.objective = opt.objective;
  f.tasks = n;
  f.devices = K;
  f.inputs = L;
  f.horizon = horizon(p);
  const double H = f.horizon;
  auto& m = f.model;

  f.x.resize(static_cast<size_t>(n * K * L));
  f.b.resize(static_cast<size_t>(n * K));
  f.s.resize(static_cast<size_t>(n * K));
  for (int i = 0; i < n; ++i) {
    for (int u = 0; u < K; ++u) {
      for (int l = 1; l <= L; ++l) {
        int col = m.add_binary(detail::name('x', {i, u, l}));
        if (p.pin(i) >= 0 && p.pin(i) != u) m.set_bounds(col, 0.0, 0.0);
        f.x[static_cast<size_t>((i * K + u) * L + l - 1)] = col;
      }
    }
  }
  for (int i = 0; i < n; ++i) {
    for (int u = 0; u < K; ++u) {
      for (int size : p.batch_sizes(u)) {
        int col = m.add_binary(detail::name('b', {i, u, size}));
        if (p.pin(i) >= 0 && p.pin(i) != u) m.set_bounds(col, 0.0, 0.0);
        f.b[static_cast<size_t>(i * K + u)].emplace_back(size, col);
      }
    }
  }
  for (int i = 0; i < n; ++i) {
    for (int u = 0; u < K; ++u) {
      f.s[static_cast<size_t>(i * K + u)] = m.add_var(detail::name('s', {i, u}), VarKind::kContinuous, 0.0, H);
    }
  }
  f.c = m.add_var("C", VarKind::kContinuous, 0.0, H);

  // Sum_p t_{i,u,p} b_{i,u,p} scaled by `scale`, appended to `e`.
  auto duration = [&](LinExpr& e, int i, int u, double scale) {
    auto lat = p.latencies(i, u);
    const auto& bs = f.b_vars(i, u);
    for (size_t k = 0; k < bs.size(); ++k) e.emplace_back(bs[k].second, scale * lat[k]);
  };
  auto used = [&](LinExpr& e, int i, int u, double scale) {
    for (const auto& [size, col] : f.b_vars(i, u)) e.emplace_back(col, scale);
  };

  // every input of every task runs somewhere
  for (int i = 0; i < n; ++i) {
    for (int l = 1; l <= L; ++l) {
      LinExpr e;
      for (int u = 0; u < K; ++u) e.emplace_back(f.x_var(i, u, l), 1.0);
      m.add_constraint(detail::name("e1", {i, l}), std::move(e), Sense::kEq, 1.0);
    }
  }
  // makespan covers each device-local finish
  for (int i = 0; i < n; ++i) {
    for (int u = 0; u < K; ++u) {
      LinExpr e{{f.s_var(i, u), 1.0}, {f.c, -1.0}};
      duration(e, i, u, 1.0);
      m.add_constraint(detail::name("e2", {i, u}), std::move(e), Sense::kLe, 0.0);
    }
  }
  // precedence with transfer time
  for (const auto& [i, j] : g.edges()) {
    for (int u = 0; u < K; ++u) {
      for (int v = 0; v < K; ++v) {
        double c = 0.0;
        bool linked = hw.linked(u, v);
        if (u != v && linked) c = p.comm_time(i, u, v);
        if (c == 0.0) {
          LinExpr e{{f.s_var(i, u), 1.0}, {f.s_var(j, v), -1.0}};
          duration(e, i, u, 1.0);
          m.add_constraint(detail::name("e3", {i, j, u, v}), std::move(e), Sense::kLe, 0.0);
        } else {
          for (int l = 1; l <= L; ++l) {
            LinExpr e{{f.s_var(i, u), 1.0}, {f.s_var(j, v), -1.0}, {f.x_var(j, v, l), c}, {f.x_var(i, u, l), c}};
            duration(e, i, u, 1.0);
            m.add_constraint(detail::name("e3", {i, j, u, v, l}), std::move(e), Sense::kLe, c);
          }
        }
        if (!linked) {
          for (int l = 1; l <= L; ++l) {
            m.add_constraint(detail::name("nl", {i, j, u, v, l}),
                             LinExpr{{f.x_var(i, u, l), 1.0}, {f.x_var(j, v, l), 1.0}}, Sense::kLe, 1.0);
          }
        }
      }
    }
  }
  // batch sizes cover all L inputs
  for (int i = 0; i < n; ++i) {
    LinExpr e;
    for (int u = 0; u < K; ++u) {
      for (const auto& [size, col] : f.b_vars(i, u)) e.emplace_back(col, static_cast<double>(size));
    }
    m.add_constraint(detail::name("e4", {i}), std::move(e), Sense::kEq, static_cast<double>(L));
  }
  // the x count on (i,u) is exactly the chosen supported size, or 0.
  for (int i = 0; i < n; ++i) {
    for (int u = 0; u < K; ++u) {
      LinExpr count;
      for (int l = 1; l <= L; ++l) count.emplace_back(f.x_var(i, u, l), 1.0);
      for (const auto& [size, col] : f.b_vars(i, u)) count.emplace_back(col, -static_cast<double>(size));
      m.add_constraint(detail::name("e5", {i, u}), std::move(count), Sense::kEq, 0.0);
      if (f.b_vars(i, u).size() > 1) {
        LinExpr one;
        used(one, i, u, 1.0);
        m.add_constraint(detail::name("e5c", {i, u}), std::move(one), Sense::kLe, 1.0);
      }
    }
  }
  // memory
  for (int u = 0; u < K; ++u) {
    LinExpr e;
    for (int i = 0; i < n; ++i) {
      const auto& t = g.task(i);
      if (t.im + t.om > 0.0) {
        for (int l = 1; l <= L; ++l) e.emplace_back(f.x_var(i, u, l), t.im + t.om);
      }
      if (t.wm > 0.0) used(e, i, u, t.wm);
    }
    m.add_constraint(detail::name("e6", {u}), std::move(e), Sense::kLe, hw.device(u).memory);
  }
  // disjunctive ordering on shared devices
  Reachability reach = transitive_closure(g);
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      if (opt.prune && reach.related(i, j)) continue;
      ++f.ordering_pairs;
      for (int u = 0; u < K; ++u) {
        if (f.b_vars(i, u).empty() || f.b_vars(j, u).empty()) continue;
        int d = m.add_binary(detail::name('d', {i, j, u}));
        LinExpr first{{f.s_var(i, u), 1.0}, {f.s_var(j, u), -1.0}, {d, H}};
        duration(first, i, u, 1.0);
        used(first, i, u, H);
        used(first, j, u, H);
        m.add_constraint(detail::name("e7a", {i, j, u}), std::move(first), Sense::kLe, 3.0 * H);
        LinExpr second{{f.s_var(j, u), 1.0}, {f.s_var(i, u), -1.0}, {d, -H}};
        duration(second, j, u, 1.0);
        used(second, i, u, H);
        used(second, j, u, H);
        m.add_constraint(detail::name("e7b", {i, j, u}), std::move(second), Sense::kLe, 2.0 * H);
      }
    }
  }
  if (opt.load_rows) {
    for (int u = 0; u < K; ++u) {
      LinExpr e{{f.c, -1.0}};
      for (int i = 0; i < n; ++i) duration(e, i, u, 1.0);
      m.add_constraint(detail::name("load", {u}), std::move(e), Sense::kLe, 0.0);
    }
  }
  // Same-device ties.
  for (const auto& [a, bb] : p.ties()) {
    for (int u = 0; u < K; ++u) {
      for (int l = 1; l <= L; ++l) {
        m.add_constraint(detail::name("tie", {a, bb, u, l}), LinExpr{{f.x_var(a, u, l), 1.0}, {f.x_var(bb, u, l), -1.0}},
                         Sense::kEq, 0.0);
      }
    }
  }
  m.set_objective({{f.c, 1.0}});
  return f;
}

// ---------------------------------------------------------------------------
// Symmetry breaking

/// A symmetry group is a list of equally sized blocks of device indices;
/// block k maps onto block k+1 position by position. Plain device groups use
/// blocks of size one.
using DeviceBlocks = std::vector<std::vector<int>>;

/// True when swapping blocks a and b (position by position) is an
/// automorphism of the instance: memory, batch sets, latencies, bandwidth
/// and pins are preserved.
inline bool blocks_interchangeable(const Problem& p, const std::vector<int>& a, const std::vector<int>& b) {
  if (a.size() != b.size()) return false;
  const int K = p.device_count();
  std::vector<int> perm(static_cast<size_t>(K));
  for (int u = 0; u < K; ++u) perm[static_cast<size_t>(u)] = u;
  for (size_t k = 0; k < a.size(); ++k) {
    perm[static_cast<size_t>(a[k])] = b[k];
    perm[static_cast<size_t>(b[k])] = a[k];
  }
  const auto& hw = p.hardware();
  for (int u = 0; u < K; ++u) {
    int pu = perm[static_cast<size_t>(u)];
    if (hw.device(u).memory != hw.device(pu).memory) return false;
    if (hw.device(u).batch_sizes != hw.device(pu).batch_sizes) return false;
    for (int i = 0; i < p.task_count(); ++i) {
      auto x = p.latencies(i, u);
      auto y = p.latencies(i, pu);
      if (!std::equal(x.begin(), x.end(), y.begin(), y.end())) return false;
    }
    for (int v = 0; v < K; ++v) {
      if (hw.bandwidth(u, v) != hw.bandwidth(pu, perm[static_cast<size_t>(v)])) return false;
    }
  }
  for (int i = 0; i < p.task_count(); ++i) {
    int pin = p.pin(i);
    if (pin >= 0 && perm[static_cast<size_t>(pin)] != pin) return false;
  }
  return true;
}

/// Adds sum(criterion on block k) >= sum(criterion on block k+1) for
/// consecutive blocks of every group. Throws when a group is not made of
/// interchangeable blocks.
inline void add_symmetry_constraints(Formulation& f, const Problem& p, const std::vector<DeviceBlocks>& groups,
                                     SymmetryCriterion criterion) {
  if (criterion == SymmetryCriterion::kNone) return;
  int serial = 0;
  for (const auto& group : groups) {
    for (size_t k = 0; k + 1 < group.size(); ++k) {
      if (!blocks_interchangeable(p, group[k], group[k + 1])) {
        throw Error(ErrorCode::kNotInterchangeable, "symmetry group members are not interchangeable");
      }
    }
    for (size_t k = 0; k + 1 < group.size(); ++k) {
      LinExpr e;
      auto add_block = [&](const std::vector<int>& block, double sign) {
        for (int u : block) {
          for (int i = 0; i < f.tasks; ++i) {
            switch (criterion) {
              case SymmetryCriterion::kTask:
                for (int l = 1; l <= f.inputs; ++l) e.emplace_back(f.x_var(i, u, l), sign);
                break;
              case SymmetryCriterion::kBatch:
                for (const auto& [size, col] : f.b_vars(i, u)) e.emplace_back(col, sign);
                break;
              case SymmetryCriterion::kTime: {
                auto lat = p.latencies(i, u);
                const auto& bs = f.b_vars(i, u);
                for (size_t q = 0; q < bs.size(); ++q) e.emplace_back(bs[q].second, sign * lat[q]);
                break;
              }
              case SymmetryCriterion::kNone:
                break;
            }
          }
        }
      };
      add_block(group[k], 1.0);
      add_block(group[k + 1], -1.0);
      f.model.add_constraint(detail::name("sym", {serial++}), std::move(e), Sense::kGe, 0.0);
    }
  }
}

/// Groups of single devices.
inline std::vector<DeviceBlocks> device_groups(const std::vector<std::vector<int>>& plain) {
  std::vector<DeviceBlocks> out;
  for (const auto& grp : plain) {
    DeviceBlocks blocks;
    for (int u : grp) blocks.push_back({u});
    out.push_back(std::move(blocks));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Solution read-back

/// Rebuilds a schedule from column values. Batches come from the (i,u)
/// pairs holding inputs; starts are then compacted left in the order of the
/// solver's start times, which never increases the makespan.
inline Schedule extract_schedule(const Problem& p, const Formulation& f, const std::vector<double>& values) {
  constexpr double kIntTol = 1e-4;
  auto val = [&](int col) { return values.at(static_cast<size_t>(col)); };
  for (int j = 0; j < f.model.var_count(); ++j) {
    if (f.model.var(j).kind != VarKind::kBinary) continue;
    double v = val(j);
    if (std::abs(v - std::round(v)) > kIntTol) {
      throw Error(ErrorCode::kIntegrality, "binary " + f.model.var(j).name + " = " + std::to_string(v));
    }
  }
  struct Pending {
    double start;
    int topo;
    int task;
    int device;
    std::vector<int> inputs;
  };
  std::vector<int> topo_pos(static_cast<size_t>(p.task_count()));
  const auto& topo = p.graph().topological_order();
  for (size_t k = 0; k < topo.size(); ++k) topo_pos[static_cast<size_t>(topo[k])] = static_cast<int>(k);

  std::vector<Pending> pending;
  for (int i = 0; i < f.tasks; ++i) {
    for (int u = 0; u < f.devices; ++u) {
      std::vector<int> inputs;
      for (int l = 1; l <= f.inputs; ++l) {
        if (val(f.x_var(i, u, l)) > 0.5) inputs.push_back(l);
      }
      int chosen = 0;
      for (const auto& [size, col] : f.b_vars(i, u)) {
        if (val(col) > 0.5) chosen = chosen == 0 ? size : -1;
      }
      if (chosen != static_cast<int>(inputs.size())) {
        throw Error(ErrorCode::kIntegrality, "batch indicator disagrees with assignment for task " +
                                                 p.graph().id(i) + " on " + p.hardware().id(u));
      }
      if (inputs.empty()) continue;
      double s = std::round(val(f.s_var(i, u)) * 1e6) / 1e6;
      pending.push_back(Pending{s, topo_pos[static_cast<size_t>(i)], i, u, std::move(inputs)});
    }
  }
  std::sort(pending.begin(), pending.end(), [](const Pending& a, const Pending& b) {
    return std::tie(a.start, a.topo, a.device) < std::tie(b.start, b.topo, b.device);
  });
  // Starts that tie up to solver noise can put a task ahead of a
  // zero-length predecessor; take the earliest batch whose predecessors
  // are fully placed.
  std::vector<int> left(static_cast<size_t>(p.task_count()), 0);
  for (const auto& pb : pending) ++left[static_cast<size_t>(pb.task)];
  auto ready = [&](int task) {
    for (int j : p.graph().predecessors(task)) {
      if (left[static_cast<size_t>(j)] > 0) return false;
    }
    return true;
  };
  BarrierBuilder builder(p);
  std::vector<char> done(pending.size(), 0);
  for (size_t placed = 0; placed < pending.size(); ++placed) {
    size_t k = 0;
    while (k < pending.size() && (done[k] || !ready(pending[k].task))) ++k;
    if (k == pending.size()) throw Error(ErrorCode::kInfeasible, "solution order is cyclic");
    const auto& pb = pending[k];
    if (!builder.append(pb.task, pb.device, pb.inputs)) {
      throw Error(ErrorCode::kInfeasible, "solution places " + p.graph().id(pb.task) + " infeasibly");
    }
    done[k] = 1;
    --left[static_cast<size_t>(pb.task)];
  }
  return std::move(builder).finish();
}

}  // namespace hetmap
