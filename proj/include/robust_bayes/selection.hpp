#pragma once

// Cost-adjusted stability scores, lambda selection paths, and the classical
// credal-set / regularization baselines.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "robust_bayes/common.hpp"
#include "robust_bayes/decision.hpp"
#include "robust_bayes/lp.hpp"
#include "robust_bayes/stability.hpp"

namespace robust_bayes {

struct AllInadmissibleError : ConsistencyError {
  AllInadmissibleError() : ConsistencyError("optimal_acts: every act has score -inf (all inadmissible)") {}
};

/// Per-act selection costs and their normalization by the largest one.
struct CostAssignment {
  std::vector<double> raw;
  std::vector<double> normalized;
  double denominator = 0.0;

  static CostAssignment from_raw(std::vector<double> costs) {
    CostAssignment c;
    for (double v : costs)
      if (!std::isfinite(v) || v < 0.0) throw InputError("costs must be finite and >= 0");
    c.raw = std::move(costs);
    c.denominator = c.raw.empty() ? 0.0 : *std::max_element(c.raw.begin(), c.raw.end());
    c.normalized.resize(c.raw.size(), 0.0);
    if (c.denominator > 0.0)
      for (std::size_t i = 0; i < c.raw.size(); ++i) c.normalized[i] = c.raw[i] / c.denominator;
    return c;
  }
};

/// Population variance of each utility row, normalized by the largest.
inline CostAssignment variance_cost(const DecisionProblem& problem) {
  const std::size_t m = problem.num_states();
  std::vector<double> var(problem.num_acts());
  for (std::size_t a = 0; a < problem.num_acts(); ++a) {
    const auto row = problem.row(a);
    double mean = 0.0;
    for (double v : row) mean += v;
    mean /= static_cast<double>(m);
    double ss = 0.0;
    for (double v : row) ss += (v - mean) * (v - mean);
    var[a] = ss / static_cast<double>(m);
  }
  return CostAssignment::from_raw(std::move(var));
}

enum class ScoreBranch { Bayes, NonBayes };

inline const char* to_string(ScoreBranch b) { return b == ScoreBranch::Bayes ? "bayes" : "non_bayes"; }

struct StabilityScore {
  std::size_t act = 0;
  double lambda = 0.0;
  double value = 0.0;  // -inf for strictly inadmissible acts
  ScoreBranch branch = ScoreBranch::NonBayes;
  double stability_term = 0.0;  // rob / max rob, or -con / max con
  double cost_term = 0.0;       // c / max c

  bool finite() const noexcept { return std::isfinite(value); }
};

/// S(a) = rob/max rob - lambda c~   for Bayes acts,
///        -con/max con - lambda c~  otherwise.
/// Denominators run over finite values only; an empty or zero maximum makes
/// the corresponding term 0. Strictly inadmissible acts score -inf.
inline std::vector<StabilityScore> stability_score(const StabilityProfile& profile, std::size_t prior,
                                                   const CostAssignment& costs, double lambda) {
  if (!(lambda >= 0.0)) throw InputError("stability_score: lambda must be >= 0");
  const auto rows = profile.for_prior(prior);
  if (costs.normalized.size() != rows.size()) throw DimensionError("stability_score: cost count != act count");

  double rob_max = 0.0;
  double con_max = 0.0;
  for (const auto& r : rows) {
    if (r.is_bayes && r.radius.finite()) rob_max = std::max(rob_max, r.radius.epsilon);
    if (!r.is_bayes && r.need.finite()) con_max = std::max(con_max, r.need.epsilon);
  }

  std::vector<StabilityScore> out;
  out.reserve(rows.size());
  for (const auto& r : rows) {
    StabilityScore s;
    s.act = r.act;
    s.lambda = lambda;
    s.cost_term = costs.normalized[r.act];
    if (r.is_bayes) {
      s.branch = ScoreBranch::Bayes;
      s.stability_term = rob_max > 0.0 ? r.radius.epsilon / rob_max : 0.0;
    } else {
      s.branch = ScoreBranch::NonBayes;
      if (!r.need.finite()) {
        s.stability_term = -std::numeric_limits<double>::infinity();
        s.value = -std::numeric_limits<double>::infinity();
        out.push_back(s);
        continue;
      }
      s.stability_term = con_max > 0.0 ? -r.need.epsilon / con_max : 0.0;
    }
    s.value = s.stability_term - lambda * s.cost_term;
    out.push_back(s);
  }
  return out;
}

struct OptimalSet {
  std::vector<std::size_t> acts;  // ascending
  std::size_t representative = 0;
};

/// Acts within kTieTolerance of the best finite score; representative is the lowest index.
inline OptimalSet optimal_acts(const std::vector<StabilityScore>& scores) {
  double best = -std::numeric_limits<double>::infinity();
  for (const auto& s : scores)
    if (s.finite()) best = std::max(best, s.value);
  if (!std::isfinite(best)) throw AllInadmissibleError();
  OptimalSet out;
  for (const auto& s : scores)
    if (s.finite() && s.value >= best - kTieTolerance) out.acts.push_back(s.act);
  std::sort(out.acts.begin(), out.acts.end());
  out.representative = out.acts.front();
  return out;
}

/// score(lambda) = intercept + slope * lambda, slope = -normalized cost.
struct ScoreLine {
  std::size_t act = 0;
  ScoreBranch branch = ScoreBranch::NonBayes;
  double intercept = 0.0;
  double slope = 0.0;
  bool finite = true;

  double at(double lambda) const { return intercept + slope * lambda; }
};

struct Breakpoint {
  double lambda = 0.0;
  std::size_t from = 0;
  std::size_t to = 0;
};

struct PathSegment {
  double begin = 0.0;
  double end = 0.0;
  std::size_t act = 0;
};

struct GridChoice {
  double lambda = 0.0;
  OptimalSet chosen;
};

struct SelectionPath {
  std::size_t prior = 0;
  double lambda_max = 0.0;
  std::vector<ScoreLine> lines;
  std::vector<GridChoice> grid;
  std::vector<PathSegment> segments;
  std::vector<Breakpoint> breakpoints;

  /// Act selected by the analytic envelope on the segment containing lambda
  /// (at a breakpoint, the act of the segment that starts there).
  std::size_t act_at(double lambda) const {
    for (auto it = segments.rbegin(); it != segments.rend(); ++it)
      if (lambda >= it->begin) return it->act;
    return segments.front().act;
  }
};

inline std::vector<ScoreLine> score_lines(const StabilityProfile& profile, std::size_t prior,
                                          const CostAssignment& costs) {
  const auto scores = stability_score(profile, prior, costs, 0.0);
  std::vector<ScoreLine> lines;
  lines.reserve(scores.size());
  for (const auto& s : scores)
    lines.push_back({s.act, s.branch, s.stability_term, -s.cost_term, s.finite()});
  return lines;
}

/// Upper envelope of the finite score lines over [0, lambda_max].
///
/// Starting from the best line at lambda = 0 (ties: steeper line, then lower
/// index), repeatedly find the earliest crossing by a steeper line,
/// lambda* = (s_cur - s_b) / (c~_cur - c~_b). Each switch strictly increases
/// the slope, so there are at most n - 1 breakpoints.
inline void upper_envelope(const std::vector<ScoreLine>& lines, double lambda_max, std::vector<PathSegment>& segments,
                           std::vector<Breakpoint>& breakpoints) {
  segments.clear();
  breakpoints.clear();
  auto better_at = [](const ScoreLine& x, const ScoreLine& y, double lam) {
    const double vx = x.at(lam), vy = y.at(lam);
    if (vx > vy + kTieTolerance) return true;
    if (vy > vx + kTieTolerance) return false;
    if (x.slope != y.slope) return x.slope > y.slope;
    return x.act < y.act;
  };

  const ScoreLine* cur = nullptr;
  for (const auto& l : lines)
    if (l.finite && (!cur || better_at(l, *cur, 0.0))) cur = &l;
  if (!cur) throw AllInadmissibleError();

  double start = 0.0;
  while (true) {
    const ScoreLine* next = nullptr;
    double next_lambda = kInfinity;
    for (const auto& l : lines) {
      if (!l.finite || l.slope <= cur->slope) continue;
      const double cross = std::max(start, (cur->intercept - l.intercept) / (l.slope - cur->slope));
      bool take = !next || cross < next_lambda - kTieTolerance;
      if (!take && cross <= next_lambda + kTieTolerance)
        take = l.slope > next->slope || (l.slope == next->slope && l.act < next->act);
      if (take) {
        next_lambda = cross;
        next = &l;
      }
    }
    if (!next || next_lambda >= lambda_max) break;
    if (next_lambda > start) {
      segments.push_back({start, next_lambda, cur->act});
      breakpoints.push_back({next_lambda, cur->act, next->act});
    } else if (!breakpoints.empty() && breakpoints.back().lambda == start) {
      breakpoints.back().to = next->act;
    }
    start = next_lambda;
    cur = next;
  }
  segments.push_back({start, lambda_max, cur->act});
}

/// Grid evaluation of the argmax on {0, step, 2 step, ..., lambda_max} plus
/// the exact piecewise-constant path.
inline SelectionPath selection_path(const StabilityProfile& profile, std::size_t prior, const CostAssignment& costs,
                                    double lambda_max, double grid_step) {
  if (!(lambda_max > 0.0) || !std::isfinite(lambda_max)) throw InputError("selection_path: lambda_max must be > 0");
  if (!(grid_step > 0.0) || !std::isfinite(grid_step)) throw InputError("selection_path: grid step must be > 0");

  SelectionPath path;
  path.prior = prior;
  path.lambda_max = lambda_max;
  path.lines = score_lines(profile, prior, costs);
  upper_envelope(path.lines, lambda_max, path.segments, path.breakpoints);

  const auto steps = static_cast<std::size_t>(std::floor(lambda_max / grid_step + 1e-9));
  std::vector<double> lambdas;
  for (std::size_t i = 0; i <= steps; ++i) lambdas.push_back(std::min(static_cast<double>(i) * grid_step, lambda_max));
  if (lambda_max - lambdas.back() > 1e-12) lambdas.push_back(lambda_max);
  for (double lam : lambdas) path.grid.push_back({lam, optimal_acts(stability_score(profile, prior, costs, lam))});
  return path;
}

// ---------------------------------------------------------------------------
// Baseline criteria

struct CriterionResult {
  std::vector<double> values;
  std::size_t argmax = 0;
};

/// Lowest index among the entries within kTieTolerance of the maximum.
inline std::size_t argmax_lowest(const std::vector<double>& values) {
  const double best = *std::max_element(values.begin(), values.end());
  for (std::size_t i = 0; i < values.size(); ++i)
    if (values[i] >= best - kTieTolerance) return i;
  return 0;
}

struct GammaMode {
  enum class Kind { Minimax, Maximax, Mix };
  Kind kind = Kind::Minimax;
  double eta = 1.0;  // Mix only: eta * inf + (1 - eta) * sup

  static GammaMode minimax() { return {Kind::Minimax, 1.0}; }
  static GammaMode maximax() { return {Kind::Maximax, 0.0}; }
  static GammaMode mix(double eta) {
    if (!(eta >= 0.0 && eta <= 1.0)) throw InputError("gamma mix: eta must lie in [0, 1]");
    return {Kind::Mix, eta};
  }
};

struct GammaAggregate {
  std::vector<double> lower;  // inf of E_pi[u_a] over the band
  std::vector<double> upper;  // sup of E_pi[u_a] over the band
  CriterionResult criterion;
};

/// Gamma-minimax / maximax / eta-mix over the credal set band & simplex.
inline GammaAggregate gamma_aggregate(const DecisionProblem& problem, const BandBox& band, GammaMode mode) {
  if (band.size() != problem.num_states()) throw DimensionError("gamma_aggregate: band dimension != state count");
  GammaAggregate out;
  std::vector<double> neg(problem.num_states());
  for (std::size_t a = 0; a < problem.num_acts(); ++a) {
    const auto row = problem.row(a);
    out.lower.push_back(minimize_over_band(row, band).value);
    for (std::size_t j = 0; j < row.size(); ++j) neg[j] = -row[j];
    out.upper.push_back(-minimize_over_band(neg, band).value);
    double v = 0.0;
    switch (mode.kind) {
      case GammaMode::Kind::Minimax: v = out.lower.back(); break;
      case GammaMode::Kind::Maximax: v = out.upper.back(); break;
      // sup - eta (sup - inf): exact when inf == sup and at eta = 0; eta = 1 is the inf itself
      case GammaMode::Kind::Mix:
        v = mode.eta == 1.0 ? out.lower.back() : out.upper.back() - mode.eta * (out.upper.back() - out.lower.back());
        break;
    }
    out.criterion.values.push_back(v);
  }
  out.criterion.argmax = argmax_lowest(out.criterion.values);
  return out;
}

/// rex(a) = mu E_pi[u_a] + (1 - mu) min_j u(a, j).
inline CriterionResult rex_score(const DecisionProblem& problem, const Prior& prior, double mu) {
  if (!(mu >= 0.0 && mu <= 1.0)) throw InputError("rex_score: mu must lie in [0, 1]");
  check_prior(problem, prior);
  CriterionResult out;
  for (std::size_t a = 0; a < problem.num_acts(); ++a) {
    const auto row = problem.row(a);
    const double worst = *std::min_element(row.begin(), row.end());
    out.values.push_back(mu * dot(row, prior.mass) + (1.0 - mu) * worst);
  }
  out.argmax = argmax_lowest(out.values);
  return out;
}

}  // namespace robust_bayes
