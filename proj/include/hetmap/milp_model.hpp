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
#include <charconv>
#include <cmath>
#include <numeric>
#include <optional>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "hetmap/error.hpp"

namespace hetmap {

enum class VarKind { kBinary, kContinuous };
enum class Sense { kLe, kEq, kGe };

struct Variable {
  std::string name;
  VarKind kind = VarKind::kContinuous;
  double lo = 0.0;
  double hi = 0.0;
};

using LinExpr = std::vector<std::pair<int, double>>;

struct Constraint {
  std::string name;
  LinExpr expr;
  Sense sense = Sense::kLe;
  double rhs = 0.0;
};

/// Solver-agnostic MILP: named columns, named rows, minimize objective.
class MilpModel {
 public:
  int add_var(std::string name, VarKind kind, double lo, double hi) {
    if (!index_.emplace(name, static_cast<int>(vars_.size())).second) {
      throw Error(ErrorCode::kInvalidValue, "duplicate variable name: " + name);
    }
    vars_.push_back(Variable{std::move(name), kind, lo, hi});
    return static_cast<int>(vars_.size()) - 1;
  }

  int add_binary(std::string name) { return add_var(std::move(name), VarKind::kBinary, 0.0, 1.0); }

  void add_constraint(std::string name, LinExpr expr, Sense sense, double rhs) {
    for (const auto& [j, a] : expr) {
      if (j < 0 || j >= var_count()) throw Error(ErrorCode::kUnknownReference, "constraint " + name + " references undeclared variable");
    }
    // Merge duplicate columns.
    std::sort(expr.begin(), expr.end());
    LinExpr merged;
    for (const auto& [j, a] : expr) {
      if (!merged.empty() && merged.back().first == j) {
        merged.back().second += a;
      } else {
        merged.emplace_back(j, a);
      }
    }
    std::erase_if(merged, [](const auto& t) { return t.second == 0.0; });
    cons_.push_back(Constraint{std::move(name), std::move(merged), sense, rhs});
  }

  void set_objective(LinExpr expr) { objective_ = std::move(expr); }

  void set_bounds(int j, double lo, double hi) {
    vars_[static_cast<size_t>(j)].lo = lo;
    vars_[static_cast<size_t>(j)].hi = hi;
  }

  int var_count() const { return static_cast<int>(vars_.size()); }
  int constraint_count() const { return static_cast<int>(cons_.size()); }
  const std::vector<Variable>& vars() const { return vars_; }
  const Variable& var(int j) const { return vars_[static_cast<size_t>(j)]; }
  const std::vector<Constraint>& constraints() const { return cons_; }
  const LinExpr& objective() const { return objective_; }

  std::optional<int> index_of(const std::string& name) const {
    auto it = index_.find(name);
    if (it == index_.end()) return std::nullopt;
    return it->second;
  }

  int count(VarKind kind) const {
    return static_cast<int>(std::count_if(vars_.begin(), vars_.end(), [&](const Variable& v) { return v.kind == kind; }));
  }

 private:
  std::vector<Variable> vars_;
  std::vector<Constraint> cons_;
  LinExpr objective_;
  std::unordered_map<std::string, int> index_;
};

namespace detail {

inline std::string fmt_num(double v) {
  if (v == std::floor(v) && std::abs(v) < 1e15) {
    return std::to_string(static_cast<long long>(v));
  }
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

inline void write_expr(std::string& out, const MilpModel& m, const LinExpr& expr) {
  if (expr.empty()) {
    out += " 0";
    return;
  }
  int on_line = 0;
  bool first = true;
  for (const auto& [j, a] : expr) {
    if (on_line == 8) {
      out += "\n  ";
      on_line = 0;
    }
    if (a < 0) {
      out += first ? " -" : " - ";
    } else if (!first) {
      out += " + ";
    } else {
      out += " ";
    }
    double mag = std::abs(a);
    if (mag != 1.0) out += fmt_num(mag) + " ";
    out += m.var(j).name;
    first = false;
    ++on_line;
  }
}

}  // namespace detail

/// CPLEX LP text. Variables appear in declaration order, constraints sorted
/// by name.
inline std::string export_lp(const MilpModel& m) {
  std::string out = "\\ hetmap model\nMinimize\n obj:";
  if (m.objective().empty()) {
    out += " 0";
  } else {
    detail::write_expr(out, m, m.objective());
  }
  out += "\n";
  if (m.constraint_count() > 0) {
    std::vector<int> order(static_cast<size_t>(m.constraint_count()));
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
      return m.constraints()[static_cast<size_t>(a)].name < m.constraints()[static_cast<size_t>(b)].name;
    });
    out += "Subject To\n";
    for (int c : order) {
      const auto& con = m.constraints()[static_cast<size_t>(c)];
      out += " " + con.name + ":";
      detail::write_expr(out, m, con.expr);
      out += con.sense == Sense::kLe ? " <= " : con.sense == Sense::kGe ? " >= " : " = ";
      out += detail::fmt_num(con.rhs) + "\n";
    }
  }
  out += "Bounds\n";
  for (const auto& v : m.vars()) {
    if (v.kind == VarKind::kBinary && v.lo == 0.0 && v.hi == 1.0) continue;
    if (v.lo == v.hi) {
      out += " " + v.name + " = " + detail::fmt_num(v.lo) + "\n";
    } else {
      out += " " + detail::fmt_num(v.lo) + " <= " + v.name + " <= " + detail::fmt_num(v.hi) + "\n";
    }
  }
  if (m.count(VarKind::kBinary) > 0) {
    out += "Binaries\n";
    for (const auto& v : m.vars()) {
      if (v.kind == VarKind::kBinary) out += " " + v.name + "\n";
    }
  }
  out += "End\n";
  return out;
}

}  // namespace hetmap
