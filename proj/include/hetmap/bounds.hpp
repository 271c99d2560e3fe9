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
#include <string>
#include <vector>

#include "json.hpp"

#include "hetmap/graph.hpp"
#include "hetmap/problem.hpp"
#include "hetmap/splitting.hpp"
#include "hetmap/timing.hpp"

namespace hetmap {

/// Tasks of T reachable from u (u included when it is in T).
inline std::vector<int> dep_subgraph(const DnnGraph& g, int u, const std::vector<int>& T) {
  std::vector<char> within(static_cast<size_t>(g.size()), 0);
  for (int v : T) within[static_cast<size_t>(v)] = 1;
  return reachable_within(g, u, within, false);
}

/// Tasks of T that reach u.
inline std::vector<int> pre_subgraph(const DnnGraph& g, int u, const std::vector<int>& T) {
  std::vector<char> within(static_cast<size_t>(g.size()), 0);
  for (int v : T) within[static_cast<size_t>(v)] = 1;
  return reachable_within(g, u, within, true);
}

/// Critical-path and work bound for `tasks` at `load` inputs: the longest
/// path of fastest single batches, and total per-input work spread over all
/// devices.
inline double critical_path_bound(const Problem& p, const std::vector<int>& tasks, int load) {
  if (tasks.empty()) return 0.0;
  const DnnGraph& g = p.graph();
  std::vector<char> in(static_cast<size_t>(g.size()), 0);
  for (int i : tasks) in[static_cast<size_t>(i)] = 1;
  std::vector<double> finish(static_cast<size_t>(g.size()), 0.0);
  double path = 0.0;
  double work = 0.0;
  for (int i : g.topological_order()) {
    if (!in[static_cast<size_t>(i)]) continue;
    double fastest = kInf;
    double rate = kInf;
    for (int u = 0; u < p.device_count(); ++u) {
      auto sizes = p.batch_sizes(u);
      auto lat = p.latencies(i, u);
      for (size_t k = 0; k < sizes.size(); ++k) {
        fastest = std::min(fastest, lat[k]);
        rate = std::min(rate, lat[k] / sizes[k]);
      }
    }
    double start = 0.0;
    for (int j : g.predecessors(i)) {
      if (in[static_cast<size_t>(j)]) start = std::max(start, finish[static_cast<size_t>(j)]);
    }
    finish[static_cast<size_t>(i)] = start + fastest;
    path = std::max(path, finish[static_cast<size_t>(i)]);
    work += rate * load;
  }
  return std::max(path, work / p.device_count());
}

struct BoundStep {
  int cut = 0;               // between module `cut` and the rest
  double module_opt = 0.0;   // OPT(M_s)
  double dep_min = 0.0;      // min over inputs of OPT(dep(I_u))
  double forward = 0.0;      // module_opt + dep_min (0 when not applicable)
  double rest_lb = 0.0;      // bound on G_{s+1}
  double pre_min = 0.0;      // min over outputs of OPT(pre(O_v))
  double backward = 0.0;     // rest_lb + pre_min (0 when not applicable)
  double value = 0.0;        // bound on G_s
};

struct BoundReport {
  double latency_lb = 0.0;
  double throughput_ub = 0.0;  // inputs per second
  std::vector<BoundStep> steps;  // innermost cut last
  bool exact_terms = true;       // every OPT came from a finished solve
  int solves = 0;
};

struct BoundOptions {
  int max_subgraph_tasks = 0;  // 0: derived from the embedded solver cap
};

namespace bound_detail {

struct Evaluator {
  const Problem& p;
  const ModuleSolver& solver;
  int max_tasks;
  BoundReport& report;

  /// Valid lower bound on the optimum of `tasks` at `load`. Oversized sets
  /// are cut down to a topological prefix; a schedule of the full set
  /// restricted to the prefix is feasible, so this only weakens the bound.
  double opt(std::vector<int> tasks, int load) {
    if (tasks.empty()) return 0.0;
    std::vector<int> pos(static_cast<size_t>(p.task_count()));
    const auto& topo = p.graph().topological_order();
    for (size_t k = 0; k < topo.size(); ++k) pos[static_cast<size_t>(topo[k])] = static_cast<int>(k);
    std::sort(tasks.begin(), tasks.end(), [&](int a, int b) { return pos[static_cast<size_t>(a)] < pos[static_cast<size_t>(b)]; });
    double cp_full = critical_path_bound(p, tasks, load);
    if (static_cast<int>(tasks.size()) > max_tasks) {
      tasks.resize(static_cast<size_t>(max_tasks));
      report.exact_terms = false;
    }
    Problem sub = p.subproblem(tasks).first;
    if (load != p.inputs()) sub = sub.with_fewer_inputs(load);
    ModuleSolve r;
    try {
      r = solver(sub);
      ++report.solves;
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kCapExceeded) throw;
      report.exact_terms = false;
      return cp_full;
    }
    if (!r.optimal) report.exact_terms = false;
    double b = r.bound;
    if (!std::isfinite(b)) {
      // no schedule exists at this load; fall back to the load-free bound
      report.exact_terms = false;
      b = critical_path_bound(p, tasks, 1);
    }
    return std::max(b, cp_full);
  }
};

}  // namespace bound_detail

/// Recursive lower bound over a chain decomposition. At each cut s:
///   LB(G_s) = max(OPT(M_s) + min_u OPT(dep(I_u) in G_{s+1}),
///                 LB(G_{s+1}) + min_v OPT(pre(O_v) in M_s)).
/// An inequality is skipped when its covering argument does not apply
/// (a sink inside M_s with no edge onward, or a source of G_{s+1} not fed
/// from M_s). With L > 1 the dependency and predecessor sets are evaluated
/// at load L-b+1, b being the smallest size every device supports.
inline BoundReport lower_bound(const Problem& p, const ModuleDecomposition& d, const ModuleSolver& solver,
                               const BoundOptions& opt = {}) {
  BoundReport report;
  const DnnGraph& g = p.graph();
  const int q = d.size();
  const int L = p.inputs();
  int max_tasks = opt.max_subgraph_tasks;
  if (max_tasks <= 0) max_tasks = std::max(1, kEmbeddedCap / (p.device_count() * L));
  bound_detail::Evaluator ev{p, solver, max_tasks, report};
  if (q == 0) return report;

  int sub_load = L;
  {
    int common = 0;
    const auto& first = p.hardware().device(0).batch_sizes;
    for (int b : first) {
      bool everywhere = true;
      for (int u = 1; u < p.device_count(); ++u) everywhere = everywhere && p.supports(u, b);
      if (everywhere && b <= L) {
        common = b;
        break;
      }
    }
    if (common > 0) sub_load = L - common + 1;
  }
  auto sub_opt = [&](const std::vector<int>& tasks) {
    double v = ev.opt(tasks, L);
    if (sub_load != L) v = std::min(v, ev.opt(tasks, sub_load));
    return v;
  };

  double rest = ev.opt(d.modules.back(), L);
  std::vector<int> tail = d.modules.back();
  for (int s = q - 2; s >= 0; --s) {
    const auto& mod = d.modules[static_cast<size_t>(s)];
    std::vector<char> in_mod(static_cast<size_t>(g.size()), 0);
    std::vector<char> in_tail(static_cast<size_t>(g.size()), 0);
    for (int i : mod) in_mod[static_cast<size_t>(i)] = 1;
    for (int i : tail) in_tail[static_cast<size_t>(i)] = 1;

    BoundStep step;
    step.cut = s;
    step.rest_lb = rest;
    step.module_opt = ev.opt(mod, L);

    bool forward_ok = true;
    std::vector<int> inputs;
    std::vector<int> outputs;
    for (int i : mod) {
      bool internal_succ = false;
      bool onward = false;
      for (int j : g.successors(i)) {
        internal_succ |= in_mod[static_cast<size_t>(j)] != 0;
        if (in_tail[static_cast<size_t>(j)]) {
          onward = true;
          inputs.push_back(j);
          outputs.push_back(i);
        }
      }
      if (!internal_succ && !onward) forward_ok = false;
    }
    bool backward_ok = true;
    for (int j : tail) {
      bool internal_pred = false;
      bool fed = false;
      for (int i : g.predecessors(j)) {
        internal_pred |= in_tail[static_cast<size_t>(i)] != 0;
        fed |= in_mod[static_cast<size_t>(i)] != 0;
      }
      if (!internal_pred && !fed) backward_ok = false;
    }
    std::sort(inputs.begin(), inputs.end());
    inputs.erase(std::unique(inputs.begin(), inputs.end()), inputs.end());
    std::sort(outputs.begin(), outputs.end());
    outputs.erase(std::unique(outputs.begin(), outputs.end()), outputs.end());
    if (inputs.empty()) forward_ok = backward_ok = false;

    double value = std::max(step.module_opt, rest);
    if (forward_ok) {
      double best = kInf;
      for (int u : inputs) best = std::min(best, sub_opt(dep_subgraph(g, u, tail)));
      step.dep_min = best;
      step.forward = step.module_opt + best;
      value = std::max(value, step.forward);
    }
    if (backward_ok) {
      double best = kInf;
      for (int v : outputs) best = std::min(best, sub_opt(pre_subgraph(g, v, mod)));
      step.pre_min = best;
      step.backward = rest + best;
      value = std::max(value, step.backward);
    }
    step.value = value;
    report.steps.push_back(step);
    rest = value;
    tail.insert(tail.end(), mod.begin(), mod.end());
  }
  report.latency_lb = rest;
  report.throughput_ub = rest > 0.0 ? 1000.0 * L / rest : kInf;
  return report;
}

inline nlohmann::json bound_report_to_json(const BoundReport& r) {
  nlohmann::json doc;
  doc["latency_lb_ms"] = r.latency_lb;
  doc["throughput_ub_per_s"] = std::isfinite(r.throughput_ub) ? nlohmann::json(r.throughput_ub) : nlohmann::json(nullptr);
  doc["exact_terms"] = r.exact_terms;
  doc["solves"] = r.solves;
  doc["steps"] = nlohmann::json::array();
  for (const auto& s : r.steps) {
    doc["steps"].push_back({{"cut", s.cut},
                            {"module_opt", s.module_opt},
                            {"dep_min", s.dep_min},
                            {"forward", s.forward},
                            {"rest_lb", s.rest_lb},
                            {"pre_min", s.pre_min},
                            {"backward", s.backward},
                            {"value", s.value}});
  }
  return doc;
}

}  // namespace hetmap
