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
#include <numeric>
#include <optional>
#include <string>
#include <tuple>
#include <vector>

#include "hetmap/error.hpp"
#include "hetmap/graph.hpp"
#include "hetmap/problem.hpp"
#include "hetmap/rng.hpp"
#include "hetmap/schedule.hpp"
#include "hetmap/timing.hpp"

namespace hetmap {

/// One device per task, positions in BFS topological order.
struct MappingGenome {
  std::vector<int> genes;
};

struct SearchResult {
  Schedule schedule;
  MappingGenome genome;
  long evaluations = 0;
  std::vector<double> history;  // current fitness after every iteration
};

struct SearchOptions {
  std::uint64_t seed = 1;
  long budget = 2000;        // fitness evaluations
  double t0_fraction = 0.1;  // SA: T0 = fraction * initial fitness
  double alpha = 0.0;        // SA: cooling per evaluation; 0 derives it from the budget
  double t_end_fraction = 1e-4;  // SA with derived alpha: T falls to this share of T0
  bool biased = true;        // EA: seed with MET
};

namespace heur_detail {

inline std::vector<int> position_of(const std::vector<int>& order) {
  std::vector<int> pos(order.size());
  for (size_t k = 0; k < order.size(); ++k) pos[static_cast<size_t>(order[k])] = static_cast<int>(k);
  return pos;
}

/// For every task, the earlier tie partner in `order` whose device it must
/// copy (or -1).
inline std::vector<int> tie_leaders(const Problem& p, const std::vector<int>& order) {
  auto pos = position_of(order);
  std::vector<int> lead(static_cast<size_t>(p.task_count()), -1);
  for (auto [a, b] : p.ties()) {
    if (pos[static_cast<size_t>(a)] < pos[static_cast<size_t>(b)]) {
      lead[static_cast<size_t>(b)] = a;
    } else {
      lead[static_cast<size_t>(a)] = b;
    }
  }
  return lead;
}

inline std::vector<int> all_inputs(int L) {
  std::vector<int> v(static_cast<size_t>(L));
  std::iota(v.begin(), v.end(), 1);
  return v;
}

/// Genes a search may change: not pinned and not following a tie.
inline std::vector<int> free_positions(const Problem& p, const std::vector<int>& order) {
  auto lead = tie_leaders(p, order);
  std::vector<int> out;
  for (size_t k = 0; k < order.size(); ++k) {
    int i = order[k];
    if (p.pin(i) < 0 && lead[static_cast<size_t>(i)] < 0) out.push_back(static_cast<int>(k));
  }
  return out;
}

}  // namespace heur_detail

/// List-schedules tasks in BFS topological order, each as one batch of all
/// L inputs on its gene's device, appended at the end of that device's lane.
/// Returns nothing when the genome is infeasible (unsupported size, missing
/// link, memory).
inline std::optional<Schedule> decode(const Problem& p, const MappingGenome& genome) {
  const auto order = bfs_topological_order(p.graph());
  if (genome.genes.size() != order.size()) throw Error(ErrorCode::kInvalidValue, "genome length != task count");
  auto lead = heur_detail::tie_leaders(p, order);
  std::vector<int> device(static_cast<size_t>(p.task_count()), -1);
  BarrierBuilder bb(p);
  const auto inputs = heur_detail::all_inputs(p.inputs());
  for (size_t k = 0; k < order.size(); ++k) {
    int i = order[k];
    int u = genome.genes[k];
    if (p.pin(i) >= 0) u = p.pin(i);
    if (lead[static_cast<size_t>(i)] >= 0) u = device[static_cast<size_t>(lead[static_cast<size_t>(i)])];
    if (u < 0 || u >= p.device_count()) throw Error(ErrorCode::kInvalidValue, "gene out of range");
    device[static_cast<size_t>(i)] = u;
    if (!bb.append(i, u, inputs)) return std::nullopt;
  }
  return std::move(bb).finish();
}

inline double fitness(const Problem& p, const MappingGenome& genome) {
  auto s = decode(p, genome);
  return s ? s->objective : kInf;
}

/// Genome that reproduces a per-task device choice.
inline MappingGenome genome_from_devices(const Problem& p, const std::vector<int>& device_of_task) {
  MappingGenome g;
  for (int i : bfs_topological_order(p.graph())) g.genes.push_back(device_of_task[static_cast<size_t>(i)]);
  return g;
}

namespace heur_detail {

/// Argmin of t(i,u,L) over devices supporting L; ties to the smallest id.
inline int met_device(const Problem& p, int i) {
  int best = -1;
  double best_t = kInf;
  for (int u = 0; u < p.device_count(); ++u) {
    auto t = p.latency(i, u, p.inputs());
    if (p.pin(i) >= 0 && p.pin(i) != u) continue;
    if (!t) continue;
    if (*t < best_t || (*t == best_t && p.hardware().id(u) < p.hardware().id(best))) {
      best_t = *t;
      best = u;
    }
  }
  return best;
}

inline Schedule require(std::optional<Schedule> s, const char* algo) {
  if (!s) throw Error(ErrorCode::kInfeasible, std::string(algo) + " found no feasible schedule");
  return std::move(*s);
}

}  // namespace heur_detail

inline MappingGenome met_genome(const Problem& p) {
  std::vector<int> dev(static_cast<size_t>(p.task_count()));
  for (int i = 0; i < p.task_count(); ++i) {
    int u = heur_detail::met_device(p, i);
    if (u < 0) throw Error(ErrorCode::kInfeasible, "no device runs a full batch of " + p.graph().id(i));
    dev[static_cast<size_t>(i)] = u;
  }
  return genome_from_devices(p, dev);
}

/// Minimum Execution Time: every task on its fastest device.
inline Schedule met(const Problem& p) { return heur_detail::require(decode(p, met_genome(p)), "met"); }

/// Whole graph on the single device giving the smallest makespan.
inline Schedule best_device(const Problem& p) {
  std::optional<Schedule> best;
  for (int u = 0; u < p.device_count(); ++u) {
    MappingGenome g{std::vector<int>(static_cast<size_t>(p.task_count()), u)};
    auto s = decode(p, g);
    if (s && (!best || s->objective < best->objective)) best = std::move(s);
  }
  return heur_detail::require(std::move(best), "best-device");
}

/// Tasks in BFS order; each goes to the device that keeps the partial
/// makespan lowest, then the earliest own finish, then the lowest index.
inline Schedule greedy(const Problem& p) {
  const auto order = bfs_topological_order(p.graph());
  auto lead = heur_detail::tie_leaders(p, order);
  std::vector<int> device(static_cast<size_t>(p.task_count()), -1);
  BarrierBuilder bb(p);
  const auto inputs = heur_detail::all_inputs(p.inputs());
  for (int i : order) {
    using Key = std::tuple<double, double, int>;
    std::optional<Key> best;
    for (int u = 0; u < p.device_count(); ++u) {
      if (p.pin(i) >= 0 && p.pin(i) != u) continue;
      if (lead[static_cast<size_t>(i)] >= 0 && device[static_cast<size_t>(lead[static_cast<size_t>(i)])] != u) continue;
      auto dur = p.latency(i, u, p.inputs());
      if (!dur || !bb.fits_memory(i, u, p.inputs())) continue;
      double r = bb.ready(i, u, inputs);
      if (r == kInf) continue;
      double finish = bb.earliest_slot(u, r, *dur, false) + *dur;
      Key key{std::max(bb.current_makespan(), finish), finish, u};
      if (!best || key < *best) best = key;
    }
    if (!best) throw Error(ErrorCode::kInfeasible, "greedy: no device for " + p.graph().id(i));
    int u = std::get<2>(*best);
    device[static_cast<size_t>(i)] = u;
    bb.append(i, u, inputs);
  }
  return std::move(bb).finish();
}

/// Upward ranks with arithmetic-mean execution and communication costs.
inline std::vector<double> upward_ranks(const Problem& p) {
  const DnnGraph& g = p.graph();
  const int K = p.device_count();
  std::vector<double> rank(static_cast<size_t>(g.size()), 0.0);
  const auto& topo = g.topological_order();
  for (auto it = topo.rbegin(); it != topo.rend(); ++it) {
    int i = *it;
    double w = 0.0;
    int cnt = 0;
    for (int u = 0; u < K; ++u) {
      if (auto t = p.latency(i, u, p.inputs())) {
        w += *t;
        ++cnt;
      }
    }
    w = cnt ? w / cnt : 0.0;
    double c = 0.0;
    int pairs = 0;
    for (int u = 0; u < K; ++u) {
      for (int v = 0; v < K; ++v) {
        double x = p.comm_time(i, u, v);
        if (!std::isfinite(x)) continue;
        c += x;
        ++pairs;
      }
    }
    c = pairs ? c / pairs : 0.0;
    double tail = 0.0;
    for (int j : g.successors(i)) tail = std::max(tail, c + rank[static_cast<size_t>(j)]);
    rank[static_cast<size_t>(i)] = w + tail;
  }
  return rank;
}

/// HEFT: tasks by decreasing upward rank, each on the device with the
/// earliest finish time, idle gaps usable.
inline Schedule heft(const Problem& p) {
  const DnnGraph& g = p.graph();
  auto rank = upward_ranks(p);
  auto topo_pos = heur_detail::position_of(g.topological_order());
  std::vector<int> order(static_cast<size_t>(g.size()));
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    if (rank[static_cast<size_t>(a)] != rank[static_cast<size_t>(b)]) return rank[static_cast<size_t>(a)] > rank[static_cast<size_t>(b)];
    return topo_pos[static_cast<size_t>(a)] < topo_pos[static_cast<size_t>(b)];
  });
  // Equal ranks along an edge are possible with zero-cost tasks; restore a
  // topological order by stable promotion of ready tasks.
  {
    std::vector<int> indeg(static_cast<size_t>(g.size()));
    for (auto [a, b] : g.edges()) ++indeg[static_cast<size_t>(b)];
    std::vector<int> fixed;
    std::vector<char> done(static_cast<size_t>(g.size()), 0);
    while (fixed.size() < order.size()) {
      for (int i : order) {
        if (done[static_cast<size_t>(i)] || indeg[static_cast<size_t>(i)] != 0) continue;
        done[static_cast<size_t>(i)] = 1;
        fixed.push_back(i);
        for (int j : g.successors(i)) --indeg[static_cast<size_t>(j)];
        break;
      }
    }
    order = std::move(fixed);
  }
  auto lead = heur_detail::tie_leaders(p, order);
  std::vector<int> device(static_cast<size_t>(g.size()), -1);
  BarrierBuilder bb(p);
  const auto inputs = heur_detail::all_inputs(p.inputs());
  for (int i : order) {
    int best = -1;
    double best_finish = kInf;
    double best_start = 0.0;
    for (int u = 0; u < p.device_count(); ++u) {
      if (p.pin(i) >= 0 && p.pin(i) != u) continue;
      if (lead[static_cast<size_t>(i)] >= 0 && device[static_cast<size_t>(lead[static_cast<size_t>(i)])] != u) continue;
      auto dur = p.latency(i, u, p.inputs());
      if (!dur || !bb.fits_memory(i, u, p.inputs())) continue;
      double r = bb.ready(i, u, inputs);
      if (r == kInf) continue;
      double start = bb.earliest_slot(u, r, *dur, true);
      if (start + *dur < best_finish - 1e-12) {
        best_finish = start + *dur;
        best_start = start;
        best = u;
      }
    }
    if (best < 0) throw Error(ErrorCode::kInfeasible, "heft: no device for " + g.id(i));
    device[static_cast<size_t>(i)] = best;
    bb.place(i, best, inputs, best_start);
  }
  return std::move(bb).finish();
}

/// Simulated annealing over genomes, started from the greedy assignment.
inline SearchResult simulated_annealing(const Problem& p, const SearchOptions& opt = {}) {
  const auto order = bfs_topological_order(p.graph());
  Schedule start = greedy(p);
  std::vector<int> dev(static_cast<size_t>(p.task_count()));
  for (const auto& b : start.batches) dev[static_cast<size_t>(b.task)] = b.device;
  MappingGenome cur = genome_from_devices(p, dev);
  double f_cur = fitness(p, cur);
  SearchResult res{heur_detail::require(decode(p, cur), "sa"), cur, 1, {f_cur}};
  double f_best = f_cur;
  const auto movable = heur_detail::free_positions(p, order);
  const int K = p.device_count();
  if (movable.empty() || K < 2) return res;
  Rng rng(opt.seed);
  double temp = opt.t0_fraction * f_cur;
  // a fixed per-evaluation rate freezes long runs early, so spread the
  // schedule over the whole budget unless the caller pins it
  const double alpha =
      opt.alpha > 0.0 ? opt.alpha : std::pow(opt.t_end_fraction, 1.0 / static_cast<double>(std::max(1L, opt.budget)));
  for (long it = 0; it < opt.budget; ++it) {
    MappingGenome next = cur;
    int pos = movable[static_cast<size_t>(rng.index(static_cast<int>(movable.size())))];
    int shift = 1 + rng.index(K - 1);
    next.genes[static_cast<size_t>(pos)] = (next.genes[static_cast<size_t>(pos)] + shift) % K;
    double f = fitness(p, next);
    ++res.evaluations;
    double delta = f - f_cur;
    bool accept = delta <= 0.0 || (std::isfinite(f) && temp > 0.0 && rng.uniform() < std::exp(-delta / temp));
    if (accept) {
      cur = std::move(next);
      f_cur = f;
      if (f_cur < f_best) {
        f_best = f_cur;
        res.genome = cur;
      }
    }
    res.history.push_back(f_cur);
    temp *= alpha;
  }
  res.schedule = heur_detail::require(decode(p, res.genome), "sa");
  return res;
}

/// (1+1) EA: each gene mutates with probability 1/n; the offspring replaces
/// the parent unless it is worse. Biased runs start from MET.
inline SearchResult one_plus_one_ea(const Problem& p, const SearchOptions& opt = {}) {
  const auto order = bfs_topological_order(p.graph());
  const int K = p.device_count();
  const int n = p.task_count();
  Rng rng(opt.seed);
  MappingGenome cur;
  if (opt.biased) {
    cur = met_genome(p);
  } else {
    cur.genes.resize(static_cast<size_t>(n));
    for (auto& x : cur.genes) x = rng.index(K);
  }
  double f_cur = fitness(p, cur);
  SearchResult res{{}, cur, 1, {f_cur}};
  const auto movable = heur_detail::free_positions(p, order);
  const double rate = n > 0 ? 1.0 / n : 0.0;
  for (long it = 0; it < opt.budget && K > 1; ++it) {
    MappingGenome next = cur;
    bool changed = false;
    for (int pos : movable) {
      if (rng.coin(rate)) {
        next.genes[static_cast<size_t>(pos)] = (next.genes[static_cast<size_t>(pos)] + 1 + rng.index(K - 1)) % K;
        changed = true;
      }
    }
    if (changed) {
      double f = fitness(p, next);
      ++res.evaluations;
      if (f <= f_cur) {
        cur = std::move(next);
        f_cur = f;
      }
    }
    res.history.push_back(f_cur);
  }
  res.genome = cur;
  res.schedule = heur_detail::require(decode(p, cur), "ea");
  return res;
}

// ---------------------------------------------------------------------------
// Batched variants

enum class BaseHeuristic { kMet, kGreedy, kHeft };

/// One way to run all L inputs of a task: parts on distinct devices.
struct BatchOption {
  std::vector<std::pair<int, int>> parts;  // (device, size), inputs assigned contiguously
};

/// Sub-batch sizes from {L/4, L/2, 3L/4, L} that are whole numbers.
inline std::vector<int> split_sizes(int L) {
  std::vector<int> out;
  for (int num : {1, 2, 3, 4}) {
    if ((num * L) % 4 == 0 && num * L / 4 >= 1) out.push_back(num * L / 4);
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

/// All decompositions of L into split sizes placed on distinct devices that
/// support them. Larger parts first; devices in every injective order.
inline std::vector<BatchOption> batch_options(const Problem& p, int i) {
  const int L = p.inputs();
  const int K = p.device_count();
  auto sizes = split_sizes(L);
  std::vector<std::vector<int>> decomps;
  std::vector<int> cur;
  auto rec = [&](auto&& self, int remaining, size_t max_idx) -> void {
    if (remaining == 0) {
      decomps.push_back(cur);
      return;
    }
    if (static_cast<int>(cur.size()) == K) return;
    for (size_t k = max_idx + 1; k-- > 0;) {
      if (sizes[k] > remaining) continue;
      cur.push_back(sizes[k]);
      self(self, remaining - sizes[k], k);
      cur.pop_back();
    }
  };
  if (!sizes.empty()) rec(rec, L, sizes.size() - 1);
  std::vector<BatchOption> out;
  for (const auto& parts : decomps) {
    std::vector<int> devs(parts.size(), -1);
    std::vector<char> used(static_cast<size_t>(K), 0);
    auto assign = [&](auto&& self, size_t k) -> void {
      if (k == parts.size()) {
        BatchOption o;
        for (size_t x = 0; x < parts.size(); ++x) o.parts.emplace_back(devs[x], parts[x]);
        out.push_back(std::move(o));
        return;
      }
      for (int u = 0; u < K; ++u) {
        if (used[static_cast<size_t>(u)] || !p.supports(u, parts[k])) continue;
        if (p.pin(i) >= 0 && p.pin(i) != u) continue;
        // equal consecutive parts: keep devices increasing to skip mirror images
        if (k > 0 && parts[k] == parts[k - 1] && u < devs[k - 1]) continue;
        used[static_cast<size_t>(u)] = 1;
        devs[k] = u;
        self(self, k + 1);
        used[static_cast<size_t>(u)] = 0;
      }
    };
    assign(assign, 0);
  }
  return out;
}

namespace heur_detail {

/// Start times for the parts of `o` appended to `bb` (without placing).
inline std::optional<std::vector<double>> option_starts(const BarrierBuilder& bb, const Problem& p, int i,
                                                        const BatchOption& o, bool insertion) {
  std::vector<double> starts;
  int next_input = 1;
  for (auto [u, size] : o.parts) {
    std::vector<int> inputs(static_cast<size_t>(size));
    std::iota(inputs.begin(), inputs.end(), next_input);
    next_input += size;
    double dur = p.latency(i, u, size).value();
    double r = bb.ready(i, u, inputs);
    if (r == kInf) return std::nullopt;
    starts.push_back(bb.earliest_slot(u, r, dur, insertion));
  }
  return starts;
}

inline bool option_fits(const BarrierBuilder& bb, int i, const BatchOption& o) {
  for (auto [u, size] : o.parts) {
    if (!bb.fits_memory(i, u, size)) return false;
  }
  return true;
}

inline void place_option(BarrierBuilder& bb, const Problem& p, int i, const BatchOption& o,
                         const std::vector<double>& starts) {
  int next_input = 1;
  for (size_t k = 0; k < o.parts.size(); ++k) {
    auto [u, size] = o.parts[k];
    std::vector<int> inputs(static_cast<size_t>(size));
    std::iota(inputs.begin(), inputs.end(), next_input);
    next_input += size;
    (void)p;
    bb.place(i, u, std::move(inputs), starts[k]);
  }
}

}  // namespace heur_detail

/// bMET / bGreedy / bHEFT. Each task's L inputs may be cut into sub-batches
/// of L/4, L/2, 3L/4 or L; the base rule then picks among those options.
/// Tied tasks are not supported here.
inline Schedule batched_variant(BaseHeuristic algo, const Problem& p) {
  const DnnGraph& g = p.graph();
  if (!p.ties().empty()) throw Error(ErrorCode::kInvalidValue, "batched heuristics do not handle tied tasks");
  std::vector<int> order = bfs_topological_order(g);
  if (algo == BaseHeuristic::kHeft) {
    // same priority as HEFT, made topological
    auto rank = upward_ranks(p);
    auto topo_pos = heur_detail::position_of(g.topological_order());
    std::vector<int> byrank(static_cast<size_t>(g.size()));
    std::iota(byrank.begin(), byrank.end(), 0);
    std::sort(byrank.begin(), byrank.end(), [&](int a, int b) {
      if (rank[static_cast<size_t>(a)] != rank[static_cast<size_t>(b)]) return rank[static_cast<size_t>(a)] > rank[static_cast<size_t>(b)];
      return topo_pos[static_cast<size_t>(a)] < topo_pos[static_cast<size_t>(b)];
    });
    std::vector<int> indeg(static_cast<size_t>(g.size()));
    for (auto [a, b] : g.edges()) ++indeg[static_cast<size_t>(b)];
    std::vector<char> done(static_cast<size_t>(g.size()), 0);
    order.clear();
    while (order.size() < byrank.size()) {
      for (int i : byrank) {
        if (done[static_cast<size_t>(i)] || indeg[static_cast<size_t>(i)] != 0) continue;
        done[static_cast<size_t>(i)] = 1;
        order.push_back(i);
        for (int j : g.successors(i)) --indeg[static_cast<size_t>(j)];
        break;
      }
    }
  }
  BarrierBuilder bb(p);
  for (int i : order) {
    auto opts = batch_options(p, i);
    using Key = std::tuple<double, double, size_t>;
    std::optional<Key> best;
    std::vector<double> best_starts;
    for (size_t k = 0; k < opts.size(); ++k) {
      const auto& o = opts[k];
      if (!heur_detail::option_fits(bb, i, o)) continue;
      bool insertion = algo == BaseHeuristic::kHeft;
      auto starts = heur_detail::option_starts(bb, p, i, o, insertion);
      if (!starts) continue;
      double finish = 0.0;
      double exec = 0.0;
      for (size_t x = 0; x < o.parts.size(); ++x) {
        double dur = p.latency(i, o.parts[x].first, o.parts[x].second).value();
        finish = std::max(finish, (*starts)[x] + dur);
        exec = std::max(exec, dur);
      }
      Key key;
      switch (algo) {
        case BaseHeuristic::kMet:
          key = Key{exec, static_cast<double>(o.parts.size()), k};
          break;
        case BaseHeuristic::kGreedy:
          key = Key{std::max(bb.current_makespan(), finish), finish, k};
          break;
        case BaseHeuristic::kHeft:
          key = Key{finish, 0.0, k};
          break;
      }
      if (!best || key < *best) {
        best = key;
        best_starts = std::move(*starts);
      }
    }
    if (!best) throw Error(ErrorCode::kInfeasible, "no realizable batch split for " + g.id(i));
    heur_detail::place_option(bb, p, i, opts[std::get<2>(*best)], best_starts);
  }
  return std::move(bb).finish();
}

}  // namespace hetmap
