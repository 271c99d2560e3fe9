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
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include "hetmap/error.hpp"
#include "hetmap/problem.hpp"
#include "json.hpp"

namespace hetmap {

inline constexpr double kTimeTol = 1e-6;

struct Batch {
  int task = 0;
  int device = 0;
  std::vector<int> inputs;  // 1-based input indices, ascending
  double start = 0.0;
  double end = 0.0;

  int size() const { return static_cast<int>(inputs.size()); }
  bool operator==(const Batch&) const = default;
};

struct Schedule {
  int input_count = 1;
  std::vector<Batch> batches;
  double objective = 0.0;
  bool quasi_optimal = false;  // some part came from a timed-out or approximate solve

  bool operator==(const Schedule&) const = default;
};

inline double makespan(const Schedule& s) {
  double c = 0.0;
  for (const auto& b : s.batches) c = std::max(c, b.end);
  return c;
}

/// Sorts batches deterministically and sets the objective to the makespan.
inline void finalize(Schedule& s) {
  for (auto& b : s.batches) std::sort(b.inputs.begin(), b.inputs.end());
  std::sort(s.batches.begin(), s.batches.end(), [](const Batch& a, const Batch& b) {
    return std::tie(a.start, a.device, a.task) < std::tie(b.start, b.device, b.task);
  });
  s.objective = makespan(s);
}

/// Memory per device: weights once per task, activations per batch.
inline std::vector<double> memory_usage(const Problem& p, const Schedule& s) {
  std::vector<double> used(static_cast<size_t>(p.device_count()), 0.0);
  std::vector<char> weights(static_cast<size_t>(p.task_count() * p.device_count()), 0);
  for (const auto& b : s.batches) {
    const auto& t = p.graph().task(b.task);
    used[static_cast<size_t>(b.device)] += (t.im + t.om) * b.size();
    auto& w = weights[static_cast<size_t>(b.task * p.device_count() + b.device)];
    if (!w) {
      w = 1;
      used[static_cast<size_t>(b.device)] += t.wm;
    }
  }
  return used;
}

namespace detail {

inline std::string describe(const Problem& p, const Batch& b) {
  std::ostringstream os;
  os << p.graph().id(b.task) << "@" << p.hardware().id(b.device) << "[" << b.start << "," << b.end << ")";
  return os.str();
}

}  // namespace detail

/// Checks every schedule invariant and returns the makespan. Precedence is
/// checked per input: start(j,l) >= end(i,l) + comm when devices differ.
inline double validate_schedule(const Problem& p, const Schedule& s) {
  const int n = p.task_count();
  const int k = p.device_count();
  const int L = p.inputs();
  if (s.input_count != L) {
    throw Error(ErrorCode::kAssignment, "schedule input_count " + std::to_string(s.input_count) +
                                            " != problem L " + std::to_string(L));
  }
  std::vector<int> owner(static_cast<size_t>(n) * static_cast<size_t>(L), -1);
  for (size_t bi = 0; bi < s.batches.size(); ++bi) {
    const auto& b = s.batches[bi];
    if (b.task < 0 || b.task >= n || b.device < 0 || b.device >= k) {
      throw Error(ErrorCode::kUnknownReference, "batch references unknown task or device");
    }
    if (b.inputs.empty()) throw Error(ErrorCode::kAssignment, "empty batch " + detail::describe(p, b));
    auto t = p.latency(b.task, b.device, b.size());
    if (!t) {
      throw Error(ErrorCode::kUnsupportedBatch, "batch size " + std::to_string(b.size()) +
                                                    " not supported: " + detail::describe(p, b));
    }
    if (!(b.start >= -kTimeTol) || !std::isfinite(b.start)) {
      throw Error(ErrorCode::kInvalidValue, "negative start: " + detail::describe(p, b));
    }
    if (std::abs(b.start + *t - b.end) > kTimeTol) {
      throw Error(ErrorCode::kObjectiveMismatch, "batch end != start + latency: " + detail::describe(p, b));
    }
    int pinned = p.pin(b.task);
    if (pinned >= 0 && pinned != b.device) {
      throw Error(ErrorCode::kAssignment, "pinned task placed elsewhere: " + detail::describe(p, b));
    }
    for (int l : b.inputs) {
      if (l < 1 || l > L) throw Error(ErrorCode::kAssignment, "input index out of range in " + detail::describe(p, b));
      auto& o = owner[static_cast<size_t>(b.task) * static_cast<size_t>(L) + static_cast<size_t>(l - 1)];
      if (o >= 0) {
        throw Error(ErrorCode::kAssignment, "(" + p.graph().id(b.task) + ", " + std::to_string(l) +
                                                ") assigned twice");
      }
      o = static_cast<int>(bi);
    }
  }
  for (int i = 0; i < n; ++i) {
    for (int l = 1; l <= L; ++l) {
      if (owner[static_cast<size_t>(i) * static_cast<size_t>(L) + static_cast<size_t>(l - 1)] < 0) {
        throw Error(ErrorCode::kAssignment, "(" + p.graph().id(i) + ", " + std::to_string(l) + ") unassigned");
      }
    }
  }
  auto batch_of = [&](int task, int l) -> const Batch& {
    return s.batches[static_cast<size_t>(
        owner[static_cast<size_t>(task) * static_cast<size_t>(L) + static_cast<size_t>(l - 1)])];
  };

  for (const auto& [a, b] : p.ties()) {
    for (int l = 1; l <= L; ++l) {
      if (batch_of(a, l).device != batch_of(b, l).device) {
        throw Error(ErrorCode::kAssignment, "tied tasks " + p.graph().id(a) + ", " + p.graph().id(b) +
                                                " on different devices");
      }
    }
  }

  for (const auto& [i, j] : p.graph().edges()) {
    for (int l = 1; l <= L; ++l) {
      const auto& bi = batch_of(i, l);
      const auto& bj = batch_of(j, l);
      double ready = bi.end + p.comm_time(i, bi.device, bj.device);
      if (!(bj.start >= ready - kTimeTol)) {
        std::ostringstream os;
        os << "precedence violated on edge " << p.graph().id(i) << " -> " << p.graph().id(j) << " input " << l
           << ": start " << bj.start << " < ready " << ready;
        throw Error(ErrorCode::kPrecedence, os.str());
      }
    }
  }

  for (size_t x = 0; x < s.batches.size(); ++x) {
    for (size_t y = x + 1; y < s.batches.size(); ++y) {
      const auto& a = s.batches[x];
      const auto& b = s.batches[y];
      if (a.device != b.device) continue;
      if (a.start < b.end - kTimeTol && b.start < a.end - kTimeTol) {
        throw Error(ErrorCode::kOverlap,
                    "overlapping batches " + detail::describe(p, a) + " and " + detail::describe(p, b));
      }
    }
  }

  auto used = memory_usage(p, s);
  for (int u = 0; u < k; ++u) {
    double cap = p.hardware().device(u).memory;
    if (used[static_cast<size_t>(u)] > cap * (1.0 + 1e-12)) {
      std::ostringstream os;
      os << "memory exceeded on " << p.hardware().id(u) << ": " << used[static_cast<size_t>(u)] << " > " << cap;
      throw Error(ErrorCode::kMemory, os.str());
    }
  }

  double c = makespan(s);
  if (std::abs(c - s.objective) > kTimeTol) {
    std::ostringstream os;
    os << "objective " << s.objective << " != makespan " << c;
    throw Error(ErrorCode::kObjectiveMismatch, os.str());
  }
  return c;
}

// Schedule JSON: {"objective_ms","input_count","batches":[{"task","device",
// "batch_size","inputs":[l...],"start_ms","end_ms"}]}

inline nlohmann::json schedule_to_json(const Problem& p, const Schedule& s) {
  nlohmann::json doc;
  doc["objective_ms"] = s.objective;
  doc["input_count"] = s.input_count;
  if (s.quasi_optimal) doc["quasi_optimal"] = true;
  doc["batches"] = nlohmann::json::array();
  for (const auto& b : s.batches) {
    doc["batches"].push_back({{"task", p.graph().id(b.task)},
                              {"device", p.hardware().id(b.device)},
                              {"batch_size", b.size()},
                              {"inputs", b.inputs},
                              {"start_ms", b.start},
                              {"end_ms", b.end}});
  }
  return doc;
}

inline Schedule schedule_from_json(const Problem& p, const nlohmann::json& doc) {
  try {
    Schedule s;
    s.objective = doc.at("objective_ms").get<double>();
    s.input_count = doc.at("input_count").get<int>();
    s.quasi_optimal = doc.value("quasi_optimal", false);
    for (const auto& b : doc.at("batches")) {
      Batch batch;
      batch.task = p.graph().require_index(b.at("task").get<std::string>());
      batch.device = p.hardware().require_index(b.at("device").get<std::string>());
      batch.inputs = b.at("inputs").get<std::vector<int>>();
      batch.start = b.at("start_ms").get<double>();
      if (b.contains("end_ms")) {
        batch.end = b.at("end_ms").get<double>();
      } else {
        auto t = p.latency(batch.task, batch.device, batch.size());
        batch.end = batch.start + t.value_or(0.0);
      }
      if (b.contains("batch_size") && b.at("batch_size").get<int>() != batch.size()) {
        throw Error(ErrorCode::kParse, "batch_size disagrees with inputs for " + p.graph().id(batch.task));
      }
      s.batches.push_back(std::move(batch));
    }
    return s;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kParse, std::string("schedule document: ") + e.what());
  }
}

}  // namespace hetmap
