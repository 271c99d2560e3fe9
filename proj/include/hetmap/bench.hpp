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

#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <string>
#include <vector>

#include "hetmap/benchgen.hpp"
#include "hetmap/bounds.hpp"
#include "hetmap/formulation.hpp"
#include "hetmap/heuristics.hpp"
#include "hetmap/oracle.hpp"
#include "hetmap/solver.hpp"
#include "hetmap/splitting.hpp"

namespace hetmap {

struct AlgoOptions {
  double timeout_s = 60.0;
  std::string backend;  // empty: embedded solver
  int channels = 1;     // split: cut budget for the decomposition
  SymmetryCriterion symmetry = SymmetryCriterion::kNone;
  std::vector<DeviceBlocks> groups;
  std::uint64_t seed = 1;
  long budget = 2000;  // sa / ea evaluations
  Objective objective = Objective::kLatency;
};

struct AlgoRun {
  Schedule schedule;
  double wall_s = 0.0;
};

inline const std::vector<std::string>& algorithm_names() {
  static const std::vector<std::string> names = {"best_device", "met", "greedy", "heft", "sa", "ea", "ea_unbiased",
                                                 "bmet", "bgreedy", "bheft", "milp", "split", "oracle"};
  return names;
}

/// Runs one scheduler by name. Throws kInfeasible when no schedule is found
/// and kInvalidValue for an unknown name.
inline AlgoRun run_algorithm(const std::string& algo, const Problem& p, const AlgoOptions& opt = {}) {
  auto t0 = std::chrono::steady_clock::now();
  AlgoRun run;
  SearchOptions search;
  search.seed = opt.seed;
  search.budget = opt.budget;
  SolverOptions solver{opt.timeout_s, opt.backend};
  BuildOptions build;
  build.objective = opt.objective;

  if (algo == "best_device") {
    run.schedule = best_device(p);
  } else if (algo == "met") {
    run.schedule = met(p);
  } else if (algo == "greedy") {
    run.schedule = greedy(p);
  } else if (algo == "heft") {
    run.schedule = heft(p);
  } else if (algo == "sa") {
    run.schedule = simulated_annealing(p, search).schedule;
  } else if (algo == "ea" || algo == "ea_unbiased") {
    search.biased = algo == "ea";
    run.schedule = one_plus_one_ea(p, search).schedule;
  } else if (algo == "bmet") {
    run.schedule = batched_variant(BaseHeuristic::kMet, p);
  } else if (algo == "bgreedy") {
    run.schedule = batched_variant(BaseHeuristic::kGreedy, p);
  } else if (algo == "bheft") {
    run.schedule = batched_variant(BaseHeuristic::kHeft, p);
  } else if (algo == "milp") {
    auto f = build_milp(p, build);
    add_symmetry_constraints(f, p, opt.groups, opt.symmetry);
    auto r = solve(f, solver);
    if (r.status == SolveStatus::kInfeasible) throw Error(ErrorCode::kInfeasible, "model is infeasible");
    if (!r.has_solution()) throw Error(ErrorCode::kInfeasible, "no schedule found within the time limit");
    run.schedule = extract_schedule(p, f, r.values);
    run.schedule.quasi_optimal = r.status != SolveStatus::kOptimal;
  } else if (algo == "split") {
    auto d = k_edge_components(p.graph(), opt.channels);
    auto res = milp_split(p, d, milp_module_solver(solver, build));
    run.schedule = res.schedule;
  } else if (algo == "oracle") {
    run.schedule = brute_force(p).schedule;
  } else {
    throw Error(ErrorCode::kInvalidValue, "unknown algorithm: " + algo);
  }
  run.wall_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return run;
}

// ---------------------------------------------------------------------------
// Suites

struct BenchSpec {
  ModuleModel model = ModuleModel::er(0.2);
  std::string model_name = "er";
  int n = 10;
  int modules = 10;
  int channels = 1;
  ChannelMode mode = ChannelMode::kSdep;
  int instances = 3;
  std::uint64_t seed = 1;
  int inputs = 1;
  std::vector<int> batch_sizes{1};
  std::vector<std::string> algos = {"best_device", "met", "greedy", "heft", "sa", "ea", "split"};
  AlgoOptions algo;
  bool with_bound = true;
};

struct BenchRow {
  std::string instance;
  std::string algo;
  std::string objective;  // latency | throughput
  double ms = std::nan("");
  double wall_s = 0.0;
  double lbound = std::nan("");
  double gap = std::nan("");
};

struct BenchInstance {
  std::string name;
  StackedGraph stacked;
  Profile profile;
};

inline BenchInstance bench_instance(const BenchSpec& spec, int k) {
  const std::uint64_t s = spec.seed + static_cast<std::uint64_t>(k);
  BenchInstance inst;
  inst.name = spec.model_name + "-n" + std::to_string(spec.n) + "-m" + std::to_string(spec.modules) + "-c" +
              std::to_string(spec.channels) + "-" + (spec.mode == ChannelMode::kSdep ? "sdep" : "wdep") + "-s" +
              std::to_string(s);
  inst.stacked = gen_stacked(spec.model, spec.n, spec.modules, spec.channels, spec.mode, s);
  inst.profile = synth_profile(inst.stacked.graph, default3_devices(spec.batch_sizes), s);
  return inst;
}

/// Every algorithm on every generated instance. A failed run leaves ms
/// empty; the bound uses the same decomposition as split.
inline std::vector<BenchRow> run_bench(const BenchSpec& spec) {
  std::vector<BenchRow> rows;
  const std::string objective = spec.algo.objective == Objective::kLatency ? "latency" : "throughput";
  for (int k = 0; k < spec.instances; ++k) {
    BenchInstance inst = bench_instance(spec, k);
    Problem p(inst.stacked.graph, inst.profile.hardware, inst.profile.latency, spec.inputs);
    double lb = std::nan("");
    if (spec.with_bound) {
      auto d = k_edge_components(p.graph(), spec.channels);
      SolverOptions so{spec.algo.timeout_s, spec.algo.backend};
      lb = lower_bound(p, d, milp_module_solver(so)).latency_lb;
    }
    for (const auto& algo : spec.algos) {
      BenchRow row{inst.name, algo, objective};
      row.lbound = lb;
      try {
        AlgoRun run = run_algorithm(algo, p, spec.algo);
        row.ms = run.schedule.objective;
        row.wall_s = run.wall_s;
        if (std::isfinite(lb) && row.ms > 0.0) row.gap = (row.ms - lb) / row.ms;
      } catch (const Error& e) {
        if (e.code() != ErrorCode::kInfeasible && e.code() != ErrorCode::kCapExceeded) throw;
      }
      rows.push_back(std::move(row));
    }
  }
  return rows;
}

inline std::string bench_csv(const std::vector<BenchRow>& rows) {
  auto num = [](double v) -> std::string {
    if (!std::isfinite(v)) return "";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
  };
  std::string out = "instance,algo,objective,ms,wall_s,lbound,gap\n";
  for (const auto& r : rows) {
    out += r.instance + "," + r.algo + "," + r.objective + "," + num(r.ms) + "," + num(r.wall_s) + "," +
           num(r.lbound) + "," + num(r.gap) + "\n";
  }
  return out;
}

}  // namespace hetmap
