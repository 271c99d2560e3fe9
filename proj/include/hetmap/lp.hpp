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
#include <cstddef>
#include <limits>
#include <utility>
#include <vector>

#include "hetmap/error.hpp"

namespace hetmap {

struct LpRow {
  std::vector<std::pair<int, double>> coefs;
  double lo = -std::numeric_limits<double>::infinity();
  double hi = std::numeric_limits<double>::infinity();
};

/// Bounded dual simplex on a dense tableau, meant for small models that are
/// re-solved many times under bound changes (branch and bound).
///
/// Rows are turned into A x - z = 0 with one logical z per row carrying the
/// row bounds. The all-logical basis is dual feasible whenever costs are
/// nonnegative on variables with a finite lower bound, which is all this
/// library needs.
class DualSimplex {
 public:
  enum class Status { kOptimal, kInfeasible, kCutoff, kIterationLimit };

  DualSimplex(std::vector<double> cost, std::vector<double> col_lo, std::vector<double> col_hi,
              std::vector<LpRow> rows)
      : n_(static_cast<int>(cost.size())), m_(static_cast<int>(rows.size())), rows_(std::move(rows)) {
    const size_t total = static_cast<size_t>(n_ + m_);
    cost_.assign(total, 0.0);
    std::copy(cost.begin(), cost.end(), cost_.begin());
    lo_.resize(total);
    hi_.resize(total);
    for (int j = 0; j < n_; ++j) {
      lo_[static_cast<size_t>(j)] = col_lo[static_cast<size_t>(j)];
      hi_[static_cast<size_t>(j)] = col_hi[static_cast<size_t>(j)];
    }
    for (int i = 0; i < m_; ++i) {
      lo_[static_cast<size_t>(n_ + i)] = rows_[static_cast<size_t>(i)].lo;
      hi_[static_cast<size_t>(n_ + i)] = rows_[static_cast<size_t>(i)].hi;
    }
    reset();
  }

  int cols() const { return n_; }
  int rows() const { return m_; }
  long pivots() const { return pivots_; }
  long resets() const { return resets_; }

  double col_lo(int j) const { return lo_[static_cast<size_t>(j)]; }
  double col_hi(int j) const { return hi_[static_cast<size_t>(j)]; }

  /// Changes the bounds of a structural column, keeping the basis.
  void set_bounds(int j, double lo, double hi) {
    auto sj = static_cast<size_t>(j);
    lo_[sj] = lo;
    hi_[sj] = hi;
    if (where_[sj] >= 0) return;
    double now = nonbasic_value(j);
    if (now != x_[sj]) move_nonbasic(j, now);
  }

  /// Back to the all-logical basis.
  void reset() {
    const size_t total = static_cast<size_t>(n_ + m_);
    tab_.assign(static_cast<size_t>(m_) * total, 0.0);
    for (int i = 0; i < m_; ++i) {
      double* row = tab_row(i);
      for (const auto& [j, a] : rows_[static_cast<size_t>(i)].coefs) row[j] -= a;
      row[n_ + i] = 1.0;
    }
    basis_.resize(static_cast<size_t>(m_));
    where_.assign(total, -1);
    for (int i = 0; i < m_; ++i) {
      basis_[static_cast<size_t>(i)] = n_ + i;
      where_[static_cast<size_t>(n_ + i)] = i;
    }
    d_ = cost_;
    x_.assign(total, 0.0);
    for (int j = 0; j < n_; ++j) x_[static_cast<size_t>(j)] = nonbasic_value(j);
    recompute_basics();
    since_reset_ = 0;
    since_refactor_ = 0;
    ++resets_;
  }

  /// Dual simplex from the current basis. Stops early with kCutoff once the
  /// objective reaches `cutoff`.
  Status solve(double cutoff = std::numeric_limits<double>::infinity(), long max_iter = 50000) {
    if (since_reset_ > kResetEvery) reset();
    for (int attempt = 0; attempt < 4; ++attempt) {
      bool cold = since_reset_ == 0;
      Status st = iterate(cutoff, max_iter);
      bool healthy = st != Status::kIterationLimit && consistent() &&
                     (st != Status::kOptimal || residuals_ok());
      // A warm infeasibility claim rests on one possibly drifted tableau row.
      if (st == Status::kInfeasible && !cold && !certify_infeasible()) healthy = false;
      if (healthy) return st;
      // rebuild the tableau of the current basis first, cold start second
      if (attempt % 2 == 1 || !refactor()) reset();
    }
    throw Error(ErrorCode::kBackend, "simplex failed to converge");
  }

  double objective() const {
    double z = 0.0;
    for (int j = 0; j < n_; ++j) z += cost_[static_cast<size_t>(j)] * x_[static_cast<size_t>(j)];
    return z;
  }

  std::vector<double> primal() const { return {x_.begin(), x_.begin() + n_}; }
  double value(int j) const { return x_[static_cast<size_t>(j)]; }

 private:
  static constexpr double kPrimalTol = 1e-8;
  static constexpr double kDualTol = 1e-9;
  static constexpr double kPivotTol = 1e-7;
  static constexpr long kResetEvery = 5000;
  static constexpr long kRefactorEvery = 400;

  double* tab_row(int i) { return tab_.data() + static_cast<size_t>(i) * static_cast<size_t>(n_ + m_); }
  const double* tab_row(int i) const {
    return tab_.data() + static_cast<size_t>(i) * static_cast<size_t>(n_ + m_);
  }

  double nonbasic_value(int j) const {
    auto sj = static_cast<size_t>(j);
    double lo = lo_[sj];
    double hi = hi_[sj];
    if (d_[sj] > kDualTol && std::isfinite(lo)) return lo;
    if (d_[sj] < -kDualTol && std::isfinite(hi)) return hi;
    if (std::isfinite(lo) && std::isfinite(hi)) {
      double v = x_[sj];
      return std::abs(v - lo) <= std::abs(v - hi) ? lo : hi;
    }
    if (std::isfinite(lo)) return lo;
    if (std::isfinite(hi)) return hi;
    return 0.0;
  }

  void move_nonbasic(int j, double now) {
    double delta = now - x_[static_cast<size_t>(j)];
    x_[static_cast<size_t>(j)] = now;
    for (int i = 0; i < m_; ++i) {
      double a = tab_row(i)[j];
      if (a != 0.0) x_[static_cast<size_t>(basis_[static_cast<size_t>(i)])] -= a * delta;
    }
  }

  void recompute_basics() {
    const int total = n_ + m_;
    for (int i = 0; i < m_; ++i) {
      const double* row = tab_row(i);
      double v = 0.0;
      for (int j = 0; j < total; ++j) {
        if (where_[static_cast<size_t>(j)] < 0 && row[j] != 0.0) v -= row[j] * x_[static_cast<size_t>(j)];
      }
      x_[static_cast<size_t>(basis_[static_cast<size_t>(i)])] = v;
    }
  }

  /// Rebuilds B^-1 [-A | I] for the current basis by Gauss-Jordan with
  /// partial pivoting, then basic values and reduced costs. False when the
  /// basis is numerically singular.
  bool refactor() {
    const int total = n_ + m_;
    std::vector<double> t(static_cast<size_t>(m_) * static_cast<size_t>(total), 0.0);
    auto at = [&](int i) { return t.data() + static_cast<size_t>(i) * static_cast<size_t>(total); };
    for (int i = 0; i < m_; ++i) {
      for (const auto& [j, a] : rows_[static_cast<size_t>(i)].coefs) at(i)[j] -= a;
      at(i)[n_ + i] = 1.0;
    }
    std::vector<int> order = basis_;
    std::vector<int> owner(static_cast<size_t>(m_), -1);
    for (int q : order) {
      int r = -1;
      double best = 1e-11;
      for (int i = 0; i < m_; ++i) {
        if (owner[static_cast<size_t>(i)] < 0 && std::abs(at(i)[q]) > best) {
          best = std::abs(at(i)[q]);
          r = i;
        }
      }
      if (r < 0) return false;
      owner[static_cast<size_t>(r)] = q;
      double* pr = at(r);
      const double inv = 1.0 / pr[q];
      for (int j = 0; j < total; ++j) pr[j] *= inv;
      pr[q] = 1.0;
      for (int i = 0; i < m_; ++i) {
        if (i == r) continue;
        double* ir = at(i);
        double f = ir[q];
        if (f == 0.0) continue;
        for (int j = 0; j < total; ++j) {
          if (pr[j] != 0.0) ir[j] -= f * pr[j];
        }
        ir[q] = 0.0;
      }
    }
    tab_ = std::move(t);
    basis_ = owner;
    where_.assign(static_cast<size_t>(total), -1);
    for (int i = 0; i < m_; ++i) where_[static_cast<size_t>(basis_[static_cast<size_t>(i)])] = i;
    recompute_basics();
    for (int j = 0; j < total; ++j) {
      auto sj = static_cast<size_t>(j);
      if (where_[sj] >= 0) {
        d_[sj] = 0.0;
        continue;
      }
      double d = cost_[sj];
      for (int i = 0; i < m_; ++i) {
        double a = tab_row(i)[j];
        if (a != 0.0) d -= cost_[static_cast<size_t>(basis_[static_cast<size_t>(i)])] * a;
      }
      if (lo_[sj] != hi_[sj]) {
        bool at_lower = x_[sj] == lo_[sj];
        if (at_lower && d < 0.0) d = 0.0;
        if (!at_lower && d > 0.0) d = 0.0;
      }
      d_[sj] = d;
    }
    since_refactor_ = 0;
    return true;
  }

  /// Recomputes the combination of original rows that the leaving tableau
  /// row stands for and checks that it cannot vanish within the bounds. Any
  /// multiplier vector gives a valid proof, so drift cannot fake one.
  bool certify_infeasible() const {
    const double* row = tab_row(infeasible_row_);
    std::vector<double> g(static_cast<size_t>(n_ + m_), 0.0);
    for (int i = 0; i < m_; ++i) {
      double rho = -row[n_ + i];
      if (rho == 0.0) continue;
      for (const auto& [j, a] : rows_[static_cast<size_t>(i)].coefs) g[static_cast<size_t>(j)] += rho * a;
      g[static_cast<size_t>(n_ + i)] -= rho;
    }
    double lo_sum = 0.0;
    double hi_sum = 0.0;
    double scale = 1.0;
    for (size_t j = 0; j < g.size(); ++j) {
      double gj = g[j];
      if (std::abs(gj) < 1e-12) continue;
      double a = gj * (gj > 0 ? lo_[j] : hi_[j]);
      double b = gj * (gj > 0 ? hi_[j] : lo_[j]);
      lo_sum += a;
      hi_sum += b;
      if (std::isfinite(a)) scale = std::max(scale, std::abs(a));
      if (std::isfinite(b)) scale = std::max(scale, std::abs(b));
    }
    return lo_sum > 1e-9 * scale || hi_sum < -1e-9 * scale;
  }

  /// The logicals must still equal their row activities; drift in the
  /// tableau shows up here first.
  bool consistent() const {
    for (int i = 0; i < m_; ++i) {
      const auto& r = rows_[static_cast<size_t>(i)];
      double act = 0.0;
      double scale = 1.0;
      for (const auto& [j, a] : r.coefs) {
        act += a * x_[static_cast<size_t>(j)];
        scale = std::max({scale, std::abs(a), std::abs(a * x_[static_cast<size_t>(j)])});
      }
      if (std::abs(act - x_[static_cast<size_t>(n_ + i)]) > 1e-7 * scale) return false;
    }
    return true;
  }

  bool residuals_ok() const {
    constexpr double tol = 1e-6;
    for (int j = 0; j < n_; ++j) {
      auto sj = static_cast<size_t>(j);
      if (x_[sj] < lo_[sj] - tol || x_[sj] > hi_[sj] + tol) return false;
    }
    for (int i = 0; i < m_; ++i) {
      const auto& r = rows_[static_cast<size_t>(i)];
      double act = 0.0;
      double scale = 1.0;
      for (const auto& [j, a] : r.coefs) {
        act += a * x_[static_cast<size_t>(j)];
        scale = std::max(scale, std::abs(a * x_[static_cast<size_t>(j)]));
      }
      if (act < r.lo - tol * scale || act > r.hi + tol * scale) return false;
    }
    return true;
  }

  Status iterate(double cutoff, long max_iter) {
    const int total = n_ + m_;
    for (long it = 0; it < max_iter; ++it) {
      if (since_refactor_ >= kRefactorEvery && !refactor()) return Status::kIterationLimit;
      if (objective() >= cutoff) return Status::kCutoff;
      // Leaving row: largest bound violation.
      int r = -1;
      double worst = kPrimalTol;
      bool to_lower = false;
      for (int i = 0; i < m_; ++i) {
        auto b = static_cast<size_t>(basis_[static_cast<size_t>(i)]);
        double v = x_[b];
        double scale = std::max(1.0, std::abs(v));
        double below = (lo_[b] - v) / scale;
        double above = (v - hi_[b]) / scale;
        if (below > worst) {
          worst = below;
          r = i;
          to_lower = true;
        } else if (above > worst) {
          worst = above;
          r = i;
          to_lower = false;
        }
      }
      if (r < 0) return Status::kOptimal;

      const double* row = tab_row(r);
      double rowmax = 0.0;
      for (int j = 0; j < total; ++j) {
        if (where_[static_cast<size_t>(j)] < 0) rowmax = std::max(rowmax, std::abs(row[j]));
      }
      pivot_floor_ = std::max(1e-9, kPivotTol * rowmax);
      // Harris two-pass ratio test.
      double theta_max = std::numeric_limits<double>::infinity();
      for (int j = 0; j < total; ++j) {
        double ratio = 0.0;
        if (!eligible(j, row[j], to_lower, ratio)) continue;
        theta_max = std::min(theta_max, (ratio + kDualTol) / std::abs(row[j]));
      }
      if (!std::isfinite(theta_max)) {
        infeasible_row_ = r;
        return Status::kInfeasible;
      }
      int q = -1;
      double best_alpha = 0.0;
      for (int j = 0; j < total; ++j) {
        double ratio = 0.0;
        if (!eligible(j, row[j], to_lower, ratio)) continue;
        if (ratio / std::abs(row[j]) <= theta_max && std::abs(row[j]) > best_alpha) {
          best_alpha = std::abs(row[j]);
          q = j;
        }
      }
      pivot(r, q, to_lower);
    }
    return Status::kIterationLimit;
  }

  /// Whether nonbasic j can enter for leaving row entry `alpha`; `slack` is
  /// its sign-corrected reduced cost.
  bool eligible(int j, double alpha, bool to_lower, double& slack) const {
    auto sj = static_cast<size_t>(j);
    if (where_[sj] >= 0 || std::abs(alpha) <= pivot_floor_) return false;
    if (lo_[sj] == hi_[sj]) return false;
    bool at_lower = x_[sj] == lo_[sj];
    // Moving j must push the leaving basic toward its violated bound.
    bool increase = to_lower ? alpha < 0.0 : alpha > 0.0;
    if (increase != at_lower) return false;
    slack = std::max(0.0, at_lower ? d_[sj] : -d_[sj]);
    return true;
  }

  void pivot(int r, int q, bool to_lower) {
    const int total = n_ + m_;
    double* prow = tab_row(r);
    const double alpha = prow[q];
    const int leave = basis_[static_cast<size_t>(r)];
    auto sl = static_cast<size_t>(leave);
    const double target = to_lower ? lo_[sl] : hi_[sl];
    const double delta = (x_[sl] - target) / alpha;

    // Primal update.
    for (int i = 0; i < m_; ++i) {
      double a = tab_row(i)[q];
      if (a != 0.0) x_[static_cast<size_t>(basis_[static_cast<size_t>(i)])] -= a * delta;
    }
    x_[static_cast<size_t>(q)] += delta;
    x_[sl] = target;

    // Dual update.
    const double theta = d_[static_cast<size_t>(q)] / alpha;
    for (int j = 0; j < total; ++j) {
      if (prow[j] != 0.0) d_[static_cast<size_t>(j)] -= theta * prow[j];
    }
    d_[static_cast<size_t>(q)] = 0.0;

    // Tableau update.
    const double inv = 1.0 / alpha;
    for (int j = 0; j < total; ++j) prow[j] *= inv;
    prow[q] = 1.0;
    std::vector<int> nz;
    nz.reserve(static_cast<size_t>(total));
    for (int j = 0; j < total; ++j) {
      if (prow[j] != 0.0) nz.push_back(j);
    }
    for (int i = 0; i < m_; ++i) {
      if (i == r) continue;
      double* irow = tab_row(i);
      double f = irow[q];
      if (f == 0.0) continue;
      for (int j : nz) irow[j] -= f * prow[j];
      irow[q] = 0.0;
    }

    basis_[static_cast<size_t>(r)] = q;
    where_[static_cast<size_t>(q)] = r;
    where_[sl] = -1;

    // Cost shifting for reduced costs that drifted to the wrong sign.
    for (int j = 0; j < total; ++j) {
      auto sj = static_cast<size_t>(j);
      if (where_[sj] >= 0) {
        d_[sj] = 0.0;
        continue;
      }
      if (lo_[sj] == hi_[sj]) continue;
      bool at_lower = x_[sj] == lo_[sj];
      if (at_lower && d_[sj] < 0.0) d_[sj] = 0.0;
      if (!at_lower && d_[sj] > 0.0) d_[sj] = 0.0;
    }
    ++pivots_;
    ++since_reset_;
    ++since_refactor_;
  }

  int n_;
  int m_;
  std::vector<LpRow> rows_;
  std::vector<double> cost_;
  std::vector<double> lo_;
  std::vector<double> hi_;
  std::vector<double> tab_;
  std::vector<int> basis_;
  std::vector<int> where_;
  std::vector<double> d_;
  std::vector<double> x_;
  long pivots_ = 0;
  long resets_ = 0;
  long since_reset_ = 0;
  long since_refactor_ = 0;
  int infeasible_row_ = 0;
  double pivot_floor_ = kPivotTol;
};

}  // namespace hetmap
