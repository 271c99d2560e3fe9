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

#include <unistd.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <limits>
#include <optional>
#include <queue>
#include <sstream>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "hetmap/error.hpp"
#include "hetmap/formulation.hpp"
#include "hetmap/lp.hpp"
#include "hetmap/milp_model.hpp"
#include "json.hpp"

namespace hetmap {

enum class SolveStatus { kOptimal, kFeasible, kInfeasible, kUnbounded, kNoSolution };

inline std::string_view status_name(SolveStatus s) {
  switch (s) {
    case SolveStatus::kOptimal: return "optimal";
    case SolveStatus::kFeasible: return "feasible";
    case SolveStatus::kInfeasible: return "infeasible";
    case SolveStatus::kUnbounded: return "unbounded";
    case SolveStatus::kNoSolution: return "no_solution";
  }
  return "unknown";
}

struct SolveResult {
  SolveStatus status = SolveStatus::kNoSolution;
  double objective = std::numeric_limits<double>::infinity();
  double bound = -std::numeric_limits<double>::infinity();  // best proven lower bound
  std::vector<double> values;
  double wall_s = 0.0;
  double gap = std::numeric_limits<double>::infinity();
  long nodes = 0;
  long pivots = 0;  // embedded solver only

  bool has_solution() const { return status == SolveStatus::kOptimal || status == SolveStatus::kFeasible; }
};

/// Embedded solver size cap on |V| * L * |K|.
inline constexpr int kEmbeddedCap = 96;

struct SolverOptions {
  double timeout_s = 60.0;
  /// Empty: embedded branch and bound. Otherwise an executable called as
  /// `<backend> model.lp solution.json <timeout_s>`.
  std::string backend;
};

/// Backend from the HETMAP_MILP_BACKEND environment variable, if set.
inline std::string backend_from_env() {
  const char* env = std::getenv("HETMAP_MILP_BACKEND");
  return env ? std::string(env) : std::string();
}

namespace detail {

inline double relative_gap(double incumbent, double bound) {
  if (!std::isfinite(incumbent)) return std::numeric_limits<double>::infinity();
  double diff = std::max(0.0, incumbent - bound);
  return diff / std::max(1e-9, std::abs(incumbent));
}

}  // namespace detail

/// Best-first branch and bound over the LP relaxation with most-fractional
/// branching; ties between equal bounds go to the deeper node.
inline SolveResult solve_embedded(const MilpModel& m, double timeout_s) {
  using Clock = std::chrono::steady_clock;
  const auto t0 = Clock::now();
  auto elapsed = [&] { return std::chrono::duration<double>(Clock::now() - t0).count(); };

  const int n = m.var_count();
  std::vector<double> cost(static_cast<size_t>(n), 0.0);
  for (const auto& [j, a] : m.objective()) cost[static_cast<size_t>(j)] += a;
  std::vector<double> lo(static_cast<size_t>(n));
  std::vector<double> hi(static_cast<size_t>(n));
  std::vector<int> ints;
  for (int j = 0; j < n; ++j) {
    lo[static_cast<size_t>(j)] = m.var(j).lo;
    hi[static_cast<size_t>(j)] = m.var(j).hi;
    if (m.var(j).kind == VarKind::kBinary) ints.push_back(j);
    if (cost[static_cast<size_t>(j)] < 0.0 || !std::isfinite(lo[static_cast<size_t>(j)])) {
      throw Error(ErrorCode::kBackend, "embedded solver needs nonnegative costs and finite lower bounds");
    }
  }
  std::vector<LpRow> rows;
  rows.reserve(m.constraints().size());
  constexpr double inf = std::numeric_limits<double>::infinity();
  for (const auto& c : m.constraints()) {
    LpRow r;
    r.coefs = c.expr;
    r.lo = c.sense == Sense::kLe ? -inf : c.rhs;
    r.hi = c.sense == Sense::kGe ? inf : c.rhs;
    rows.push_back(std::move(r));
  }
  DualSimplex lp(cost, lo, hi, std::move(rows));

  struct Node {
    double bound;
    int depth;
    long id;
    std::vector<std::tuple<int, double, double>> fix;
  };
  auto worse = [](const Node& a, const Node& b) {
    if (a.bound != b.bound) return a.bound > b.bound;
    if (a.depth != b.depth) return a.depth < b.depth;
    return a.id > b.id;
  };
  std::priority_queue<Node, std::vector<Node>, decltype(worse)> open(worse);
  long next_id = 0;
  open.push(Node{-inf, 0, next_id++, {}});

  std::vector<int> slot(static_cast<size_t>(n), -1);
  for (size_t k = 0; k < ints.size(); ++k) slot[static_cast<size_t>(ints[k])] = static_cast<int>(k);
  std::vector<std::pair<double, double>> want(ints.size());

  SolveResult res;
  double incumbent = inf;
  auto prune_tol = [&] { return 1e-7 * std::max(1.0, std::abs(incumbent)); };
  bool timed_out = false;

  // Best-first selection with plunging: after a branch the preferred child
  // is solved right away (one bound change, few pivots) and its sibling is
  // queued; a plunge ends when the child is pruned or integral.
  std::optional<Node> plunge;
  while (plunge || !open.empty()) {
    if (elapsed() > timeout_s) {
      timed_out = true;
      if (plunge) open.push(std::move(*plunge));
      break;
    }
    Node node;
    if (plunge) {
      node = std::move(*plunge);
      plunge.reset();
    } else {
      node = open.top();
      open.pop();
    }
    if (node.bound >= incumbent - prune_tol()) continue;
    ++res.nodes;

    // Move the LP to this node's bounds.
    for (size_t k = 0; k < ints.size(); ++k) want[k] = {lo[static_cast<size_t>(ints[k])], hi[static_cast<size_t>(ints[k])]};
    for (const auto& [j, l, h] : node.fix) want[static_cast<size_t>(slot[static_cast<size_t>(j)])] = {l, h};
    for (size_t k = 0; k < ints.size(); ++k) {
      int j = ints[k];
      if (lp.col_lo(j) != want[k].first || lp.col_hi(j) != want[k].second) {
        lp.set_bounds(j, want[k].first, want[k].second);
      }
    }

    auto st = lp.solve(incumbent - prune_tol());
    if (st != DualSimplex::Status::kOptimal) continue;
    double obj = lp.objective();

    int branch = -1;
    double best_frac = 1e-6;
    for (int j : ints) {
      double v = lp.value(j);
      double frac = std::abs(v - std::round(v));
      if (frac > best_frac) {
        best_frac = frac;
        branch = j;
      }
    }
    if (branch < 0) {
      incumbent = obj;
      res.values = lp.primal();
      for (int j : ints) res.values[static_cast<size_t>(j)] = std::round(res.values[static_cast<size_t>(j)]);
      continue;
    }
    double v = lp.value(branch);
    Node down{obj, node.depth + 1, next_id++, node.fix};
    down.fix.emplace_back(branch, lo[static_cast<size_t>(branch)], 0.0);
    Node up{obj, node.depth + 1, next_id++, std::move(node.fix)};
    up.fix.emplace_back(branch, 1.0, hi[static_cast<size_t>(branch)]);
    if (v >= 0.5) {
      plunge = std::move(up);
      open.push(std::move(down));
    } else {
      plunge = std::move(down);
      open.push(std::move(up));
    }
  }

  res.wall_s = elapsed();
  res.pivots = lp.pivots();
  double open_bound = open.empty() ? inf : open.top().bound;
  if (timed_out) {
    // Open nodes carry their parent's bound; the root has none.
    res.bound = std::min(open_bound, incumbent);
    if (!std::isfinite(res.bound) || res.bound < 0.0) res.bound = 0.0;
  } else {
    res.bound = incumbent;
  }
  if (std::isfinite(incumbent)) {
    res.objective = incumbent;
    res.status = timed_out ? SolveStatus::kFeasible : SolveStatus::kOptimal;
    res.gap = timed_out ? detail::relative_gap(incumbent, res.bound) : 0.0;
  } else {
    res.status = timed_out ? SolveStatus::kNoSolution : SolveStatus::kInfeasible;
  }
  return res;
}

/// Runs an external backend on the exported LP text.
inline SolveResult solve_external(const MilpModel& m, double timeout_s, const std::string& backend) {
  namespace fs = std::filesystem;
  auto t0 = std::chrono::steady_clock::now();
  static int counter = 0;
  fs::path dir = fs::temp_directory_path() /
                 ("hetmap_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
  fs::create_directories(dir);
  fs::path lp_path = dir / "model.lp";
  fs::path sol_path = dir / "solution.json";
  {
    std::ofstream out(lp_path);
    out << export_lp(m);
  }
  std::ostringstream cmd;
  cmd << "'" << backend << "' '" << lp_path.string() << "' '" << sol_path.string() << "' " << timeout_s;
  int rc = std::system(cmd.str().c_str());
  SolveResult res;
  std::ifstream in(sol_path);
  if (rc != 0 || !in) {
    fs::remove_all(dir);
    throw Error(ErrorCode::kBackend, "MILP backend failed: " + cmd.str());
  }
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    fs::remove_all(dir);
    throw Error(ErrorCode::kBackend, std::string("unreadable backend output: ") + e.what());
  }
  fs::remove_all(dir);
  std::string status = doc.value("status", "no_solution");
  if (status == "optimal") {
    res.status = SolveStatus::kOptimal;
  } else if (status == "feasible") {
    res.status = SolveStatus::kFeasible;
  } else if (status == "infeasible") {
    res.status = SolveStatus::kInfeasible;
  } else if (status == "unbounded") {
    res.status = SolveStatus::kUnbounded;
  } else {
    res.status = SolveStatus::kNoSolution;
  }
  if (res.has_solution()) {
    res.objective = doc.at("objective").get<double>();
    res.values.assign(static_cast<size_t>(m.var_count()), 0.0);
    const auto& vals = doc.at("values");
    for (int j = 0; j < m.var_count(); ++j) {
      auto it = vals.find(m.var(j).name);
      if (it != vals.end()) res.values[static_cast<size_t>(j)] = it->get<double>();
    }
  }
  res.bound = doc.contains("bound") && doc["bound"].is_number() ? doc["bound"].get<double>()
                                                                  : (res.status == SolveStatus::kOptimal ? res.objective : 0.0);
  res.gap = res.status == SolveStatus::kOptimal ? 0.0 : detail::relative_gap(res.objective, res.bound);
  res.wall_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return res;
}

inline SolveResult solve(const MilpModel& m, const SolverOptions& opt) {
  if (!(opt.timeout_s > 0.0)) throw Error(ErrorCode::kInvalidValue, "timeout must be > 0");
  if (opt.backend.empty()) return solve_embedded(m, opt.timeout_s);
  return solve_external(m, opt.timeout_s, opt.backend);
}

/// Solves a scheduling formulation, enforcing the embedded-solver size cap.
inline SolveResult solve(const Formulation& f, const SolverOptions& opt) {
  if (opt.backend.empty() && f.tasks * f.inputs * f.devices > kEmbeddedCap) {
    throw Error(ErrorCode::kCapExceeded, "|V|*L*|K| = " + std::to_string(f.tasks * f.inputs * f.devices) +
                                             " exceeds the embedded solver cap of " + std::to_string(kEmbeddedCap) +
                                             "; use an external backend");
  }
  return solve(f.model, opt);
}

}  // namespace hetmap
