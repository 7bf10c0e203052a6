#pragma once

// Small dense linear-programming kernel.
//
//   solve_lp                        two-phase tableau simplex, Bland's rule
//   minimize_over_band              exact greedy minimizer of <pi, d> over
//                                   an l-infinity band intersected with the
//                                   probability simplex
//   band_feasible_with_halfspaces   phase-1 feasibility of band & halfspaces
//
// Sizes are a handful of variables and constraints, so nothing here is
// revised, sparse or warm-started.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "robust_bayes/common.hpp"

namespace robust_bayes {

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

/// Tolerances used by the simplex kernel.
inline constexpr double kConstraintTolerance = 1e-9;
inline constexpr double kBoundTolerance = 1e-12;

struct VariableBounds {
  double lower = 0.0;
  double upper = kInfinity;
};

/// minimize  objective . x
/// s.t.      eq_matrix x = eq_rhs,  bounds[i].lower <= x_i <= bounds[i].upper
///
/// Lower bounds must be finite; upper bounds may be +infinity.
struct LinearProgram {
  std::vector<double> objective;
  Matrix eq_matrix;
  std::vector<double> eq_rhs;
  std::vector<VariableBounds> bounds;

  std::size_t num_variables() const noexcept { return objective.size(); }
  std::size_t num_constraints() const noexcept { return eq_rhs.size(); }

  /// Appends a variable with zero coefficients in every existing row and
  /// returns its index.
  std::size_t add_variable(double cost, VariableBounds b) {
    const std::size_t n = objective.size();
    Matrix widened(eq_matrix.rows(), n + 1);
    for (std::size_t r = 0; r < eq_matrix.rows(); ++r)
      for (std::size_t c = 0; c < n; ++c) widened(r, c) = eq_matrix(r, c);
    eq_matrix = std::move(widened);
    objective.push_back(cost);
    bounds.push_back(b);
    return n;
  }

  void add_equality(std::span<const double> row, double rhs) {
    if (row.size() != num_variables())
      throw DimensionError("LinearProgram::add_equality: row length mismatch");
    if (eq_matrix.rows() == 0) eq_matrix = Matrix(0, num_variables());
    eq_matrix.append_row(row);
    eq_rhs.push_back(rhs);
  }

  /// row . x >= rhs, realized as row . x - s = rhs with a fresh slack s >= 0.
  /// `row` covers the variables that exist before the call.
  std::size_t add_greater_equal(std::span<const double> row, double rhs) {
    const std::vector<double> copy(row.begin(), row.end());
    const std::size_t slack = add_variable(0.0, {0.0, kInfinity});
    std::vector<double> full(copy);
    if (full.size() + 1 != num_variables())
      throw DimensionError("LinearProgram::add_greater_equal: row length mismatch");
    full.push_back(-1.0);
    add_equality(full, rhs);
    return slack;
  }

  void validate() const {
    const std::size_t n = num_variables();
    if (bounds.size() != n) throw DimensionError("LinearProgram: bounds size != number of variables");
    if (eq_matrix.rows() != eq_rhs.size())
      throw DimensionError("LinearProgram: constraint matrix rows != rhs length");
    if (eq_matrix.rows() > 0 && eq_matrix.cols() != n)
      throw DimensionError("LinearProgram: constraint row length != number of variables");
    for (std::size_t i = 0; i < n; ++i) {
      const auto& b = bounds[i];
      if (!std::isfinite(b.lower))
        throw DimensionError("LinearProgram: variable " + std::to_string(i) + " has a non-finite lower bound");
      if (std::isnan(b.upper) || b.upper < b.lower)
        throw DimensionError("LinearProgram: variable " + std::to_string(i) + " has upper < lower");
      if (!std::isfinite(objective[i]))
        throw DimensionError("LinearProgram: non-finite objective coefficient");
    }
    for (double v : eq_matrix.data())
      if (!std::isfinite(v)) throw DimensionError("LinearProgram: non-finite constraint coefficient");
    for (double v : eq_rhs)
      if (!std::isfinite(v)) throw DimensionError("LinearProgram: non-finite right-hand side");
  }
};

enum class LpStatus { Optimal, Infeasible, Unbounded };

inline const char* to_string(LpStatus s) {
  switch (s) {
    case LpStatus::Optimal: return "Optimal";
    case LpStatus::Infeasible: return "Infeasible";
    case LpStatus::Unbounded: return "Unbounded";
  }
  return "?";
}

struct LpOutcome {
  LpStatus status = LpStatus::Infeasible;
  double value = 0.0;         // valid when Optimal
  std::vector<double> point;  // valid when Optimal

  bool optimal() const noexcept { return status == LpStatus::Optimal; }
};

namespace detail {

// Canonical-form tableau: basis columns of `a` form an identity.
struct Tableau {
  Matrix a;
  std::vector<double> b;
  std::vector<std::size_t> basis;
  std::vector<bool> row_active;
};

inline constexpr double kPivotEps = 1e-11;
inline constexpr double kCostEps = 1e-11;
inline constexpr std::size_t kMaxIterations = 100000;

inline void pivot(Tableau& t, std::size_t prow, std::size_t pcol) {
  const std::size_t n = t.a.cols();
  const double p = t.a(prow, pcol);
  auto pr = t.a.row(prow);
  for (std::size_t j = 0; j < n; ++j) pr[j] /= p;
  t.b[prow] /= p;
  pr[pcol] = 1.0;
  for (std::size_t r = 0; r < t.a.rows(); ++r) {
    if (r == prow || !t.row_active[r]) continue;
    const double f = t.a(r, pcol);
    if (f == 0.0) continue;
    auto rr = t.a.row(r);
    for (std::size_t j = 0; j < n; ++j) rr[j] -= f * pr[j];
    rr[pcol] = 0.0;
    t.b[r] -= f * t.b[prow];
  }
  t.basis[prow] = pcol;
}

enum class PhaseResult { Optimal, Unbounded };

// Primal simplex with Bland's rule on the columns flagged in `allowed`.
inline PhaseResult run_simplex(Tableau& t, const std::vector<double>& cost, const std::vector<bool>& allowed) {
  const std::size_t m = t.a.rows();
  const std::size_t n = t.a.cols();
  std::vector<bool> is_basic(n, false);
  for (std::size_t r = 0; r < m; ++r)
    if (t.row_active[r]) is_basic[t.basis[r]] = true;

  for (std::size_t iter = 0; iter < kMaxIterations; ++iter) {
    // Bland: first improving column.
    std::optional<std::size_t> entering;
    for (std::size_t j = 0; j < n && !entering; ++j) {
      if (!allowed[j] || is_basic[j]) continue;
      double reduced = cost[j];
      for (std::size_t r = 0; r < m; ++r)
        if (t.row_active[r]) reduced -= cost[t.basis[r]] * t.a(r, j);
      if (reduced < -kCostEps) entering = j;
    }
    if (!entering) return PhaseResult::Optimal;

    const std::size_t col = *entering;
    std::optional<std::size_t> leaving;
    double best_ratio = kInfinity;
    for (std::size_t r = 0; r < m; ++r) {
      if (!t.row_active[r]) continue;
      const double coef = t.a(r, col);
      if (coef <= kPivotEps) continue;
      const double ratio = std::max(t.b[r], 0.0) / coef;
      if (!leaving || ratio < best_ratio - 1e-12) {
        best_ratio = ratio;
        leaving = r;
      } else if (ratio <= best_ratio + 1e-12 && t.basis[r] < t.basis[*leaving]) {
        // Bland: among tied rows leave the lowest-indexed basic variable.
        leaving = r;
      }
    }
    if (!leaving) return PhaseResult::Unbounded;

    is_basic[t.basis[*leaving]] = false;
    pivot(t, *leaving, col);
    is_basic[col] = true;
  }
  throw SolverError("solve_lp: iteration limit exceeded");
}

}  // namespace detail

/// Solves a LinearProgram. The result is a basic optimal solution; identical
/// inputs always take the same pivot sequence.
///
/// Throws DimensionError on malformed input (distinct from an Infeasible status).
inline LpOutcome solve_lp(const LinearProgram& lp) {
  lp.validate();
  const std::size_t nx = lp.num_variables();
  const std::size_t me = lp.num_constraints();

  // Shift x = lower + y, y >= 0. Finite uppers get y_i + s_i = upper - lower.
  std::vector<std::size_t> upper_rows;
  for (std::size_t i = 0; i < nx; ++i)
    if (std::isfinite(lp.bounds[i].upper)) upper_rows.push_back(i);

  const std::size_t nslack = upper_rows.size();
  const std::size_t nart = me;
  const std::size_t ncols = nx + nslack + nart;
  const std::size_t nrows = me + nslack;

  detail::Tableau t{Matrix(nrows, ncols), std::vector<double>(nrows, 0.0), std::vector<std::size_t>(nrows, 0),
                    std::vector<bool>(nrows, true)};

  for (std::size_t r = 0; r < me; ++r) {
    double rhs = lp.eq_rhs[r];
    for (std::size_t i = 0; i < nx; ++i) rhs -= lp.eq_matrix(r, i) * lp.bounds[i].lower;
    const double sign = rhs < 0.0 ? -1.0 : 1.0;
    for (std::size_t i = 0; i < nx; ++i) t.a(r, i) = sign * lp.eq_matrix(r, i);
    t.b[r] = sign * rhs;
    t.a(r, nx + nslack + r) = 1.0;
    t.basis[r] = nx + nslack + r;
  }
  for (std::size_t k = 0; k < nslack; ++k) {
    const std::size_t r = me + k;
    const std::size_t i = upper_rows[k];
    t.a(r, i) = 1.0;
    t.a(r, nx + k) = 1.0;
    t.b[r] = lp.bounds[i].upper - lp.bounds[i].lower;
    t.basis[r] = nx + k;
  }

  // Phase 1: minimize the sum of artificials.
  std::vector<double> phase1_cost(ncols, 0.0);
  for (std::size_t k = 0; k < nart; ++k) phase1_cost[nx + nslack + k] = 1.0;
  std::vector<bool> allowed(ncols, true);
  detail::run_simplex(t, phase1_cost, allowed);

  double infeasibility = 0.0;
  for (std::size_t r = 0; r < nrows; ++r)
    if (t.basis[r] >= nx + nslack) infeasibility += std::max(t.b[r], 0.0);
  if (infeasibility > kConstraintTolerance) return {LpStatus::Infeasible, 0.0, {}};

  // Drive remaining (zero-valued) artificials out of the basis; drop rows that
  // turn out to be redundant. A residue below the tolerance is zeroed first so
  // that pivoting on a small coefficient cannot amplify it.
  for (std::size_t r = 0; r < nrows; ++r) {
    if (t.basis[r] < nx + nslack) continue;
    t.b[r] = 0.0;
    std::optional<std::size_t> col;
    for (std::size_t j = 0; j < nx + nslack && !col; ++j)
      if (std::abs(t.a(r, j)) > 1e-9) col = j;
    if (col) {
      detail::pivot(t, r, *col);
    } else {
      t.row_active[r] = false;
    }
  }

  // Phase 2.
  for (std::size_t k = 0; k < nart; ++k) allowed[nx + nslack + k] = false;
  std::vector<double> phase2_cost(ncols, 0.0);
  for (std::size_t i = 0; i < nx; ++i) phase2_cost[i] = lp.objective[i];
  if (detail::run_simplex(t, phase2_cost, allowed) == detail::PhaseResult::Unbounded)
    return {LpStatus::Unbounded, 0.0, {}};

  std::vector<double> x(nx);
  for (std::size_t i = 0; i < nx; ++i) x[i] = lp.bounds[i].lower;
  for (std::size_t r = 0; r < nrows; ++r)
    if (t.row_active[r] && t.basis[r] < nx) x[t.basis[r]] += std::max(t.b[r], 0.0);
  for (std::size_t i = 0; i < nx; ++i) x[i] = std::clamp(x[i], lp.bounds[i].lower, lp.bounds[i].upper);

  for (std::size_t r = 0; r < me; ++r) {
    const double residual = dot(lp.eq_matrix.row(r), x) - lp.eq_rhs[r];
    if (std::abs(residual) > 1e-7)
      throw SolverError("solve_lp: recovered point violates constraint " + std::to_string(r));
  }
  return {LpStatus::Optimal, dot(lp.objective, x), std::move(x)};
}

/// The set B(center, radius) intersected with the probability simplex,
/// described by its effective coordinate box.
class BandBox {
 public:
  BandBox(std::vector<double> center, double radius) : center_(std::move(center)), radius_(radius) {
    if (center_.empty()) throw DimensionError("BandBox: empty center");
    if (!(radius_ >= 0.0 && radius_ <= 1.0)) throw DimensionError("BandBox: radius outside [0,1]");
    double total = 0.0;
    for (double p : center_) {
      if (!(p >= 0.0) || !std::isfinite(p)) throw DimensionError("BandBox: center has a negative or non-finite mass");
      total += p;
    }
    if (std::abs(total - 1.0) > 1e-9) throw DimensionError("BandBox: center does not sum to 1");
    lower_.resize(center_.size());
    upper_.resize(center_.size());
    for (std::size_t j = 0; j < center_.size(); ++j) {
      lower_[j] = std::max(0.0, center_[j] - radius_);
      upper_[j] = std::min(1.0, center_[j] + radius_);
    }
  }

  std::size_t size() const noexcept { return center_.size(); }
  double radius() const noexcept { return radius_; }
  const std::vector<double>& center() const noexcept { return center_; }
  const std::vector<double>& lower() const noexcept { return lower_; }
  const std::vector<double>& upper() const noexcept { return upper_; }

 private:
  std::vector<double> center_;
  double radius_;
  std::vector<double> lower_;
  std::vector<double> upper_;
};

struct BandMinimum {
  double value = 0.0;
  std::vector<double> point;
};

/// Exact minimum of <pi, direction> over band & simplex.
///
/// Every coordinate starts at its lower bound; the residual mass 1 - sum(l)
/// is poured into coordinates in ascending order of direction (ties: lower
/// index first), each filled up to its capacity u_j - l_j.
inline BandMinimum minimize_over_band(std::span<const double> direction, const BandBox& band) {
  const std::size_t m = band.size();
  if (direction.size() != m) throw DimensionError("minimize_over_band: direction length != band dimension");

  std::vector<double> point = band.lower();
  double residual = 1.0 - std::accumulate(point.begin(), point.end(), 0.0);

  std::vector<std::size_t> order(m);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t i, std::size_t j) { return direction[i] < direction[j]; });

  for (std::size_t j : order) {
    if (residual <= 0.0) break;
    const double add = std::min(band.upper()[j] - band.lower()[j], residual);
    point[j] += add;
    residual -= add;
  }
  return {dot(point, direction), std::move(point)};
}

struct Feasibility {
  bool feasible = false;
  std::optional<std::vector<double>> witness;
};

/// Is there a pi in band & simplex with <pi, h> >= 0 for every halfspace h?
inline Feasibility band_feasible_with_halfspaces(const BandBox& band, std::span<const std::vector<double>> halfspaces) {
  const std::size_t m = band.size();
  for (const auto& h : halfspaces)
    if (h.size() != m) throw DimensionError("band_feasible_with_halfspaces: normal length != band dimension");

  bool center_ok = true;
  for (const auto& h : halfspaces) center_ok = center_ok && dot(band.center(), h) >= 0.0;
  if (center_ok) return {true, band.center()};

  LinearProgram lp;
  for (std::size_t j = 0; j < m; ++j) lp.add_variable(0.0, {band.lower()[j], band.upper()[j]});
  lp.add_equality(std::vector<double>(m, 1.0), 1.0);
  for (const auto& h : halfspaces) {
    std::vector<double> row(lp.num_variables(), 0.0);
    std::copy(h.begin(), h.end(), row.begin());
    lp.add_greater_equal(row, 0.0);
  }
  const LpOutcome out = solve_lp(lp);
  if (!out.optimal()) return {false, std::nullopt};
  return {true, std::vector<double>(out.point.begin(), out.point.begin() + static_cast<std::ptrdiff_t>(m))};
}

}  // namespace robust_bayes
