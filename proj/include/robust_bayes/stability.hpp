#pragma once

// Stability of Bayes acts under l-infinity band perturbations of the prior.
//
// For an act a and reference prior pi0:
//   rob(a, pi0)  largest eps such that a is Bayes for every prior in the band
//                B(pi0, eps); -inf when a is not Bayes at pi0.
//   con(a, pi0)  smallest eps such that a is Bayes for some prior in the band;
//                +inf exactly when a is strictly dominated by a mixture of
//                the other acts.
//
// rob is located by bisection on the worst-case margin
//   R(eps) = min_{b != a} min_{pi in band} sum_j pi_j (u(a,j) - u(b,j)),
// which is non-increasing in eps. con is a single LP over (pi, eps).

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <exception>
#include <future>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "robust_bayes/common.hpp"
#include "robust_bayes/decision.hpp"
#include "robust_bayes/lp.hpp"

namespace robust_bayes {

/// Strictness threshold for dominance certificates (normalized utility units).
inline constexpr double kStrictnessThreshold = 1e-9;

struct Radius {
  enum class Kind { NotBayes, Value };
  Kind kind = Kind::NotBayes;
  double epsilon = 0.0;

  static Radius not_bayes() { return {Kind::NotBayes, 0.0}; }
  static Radius value(double eps) { return {Kind::Value, eps}; }
  bool finite() const noexcept { return kind == Kind::Value; }
};

/// A mixture of competing acts that beats `act` in every state.
struct DominanceCertificate {
  std::size_t act = 0;
  std::vector<std::size_t> competitors;  // every b != act, ascending
  std::vector<double> weights;           // beta_b, parallel to competitors, sums to 1
  std::vector<double> margins;           // per state: sum_b beta_b u(b,j) - u(act,j)

  double min_margin() const { return margins.empty() ? 0.0 : *std::min_element(margins.begin(), margins.end()); }

  /// Re-checks the strict domination inequality against the problem.
  bool verify(const DecisionProblem& problem, double threshold = kStrictnessThreshold) const {
    double total = 0.0;
    for (double w : weights) {
      if (w < 0.0) return false;
      total += w;
    }
    if (std::abs(total - 1.0) > 1e-9) return false;
    for (std::size_t j = 0; j < problem.num_states(); ++j) {
      double mix = 0.0;
      for (std::size_t k = 0; k < competitors.size(); ++k) mix += weights[k] * problem.utility(competitors[k], j);
      if (!(mix - problem.utility(act, j) > threshold)) return false;
    }
    return true;
  }
};

struct Need {
  enum class Kind { Value, Infeasible };
  Kind kind = Kind::Value;
  double epsilon = 0.0;
  std::optional<std::vector<double>> witness;         // prior in the band making the act Bayes (Value)
  std::optional<DominanceCertificate> certificate;    // Infeasible

  bool finite() const noexcept { return kind == Kind::Value; }
};

struct BisectionConfig {
  double tolerance = 1e-6;

  void validate() const {
    if (!(tolerance > 0.0 && tolerance < 1.0)) throw InputError("bisection tolerance must lie in (0, 1)");
  }
};

/// R_{a,b}(eps): worst case of E[u_a] - E[u_b] over the band.
inline double pairwise_margin(const DecisionProblem& problem, std::size_t a, std::size_t b, const Prior& prior,
                              double epsilon) {
  problem.check_act(a);
  problem.check_act(b);
  if (a == b) throw DimensionError("pairwise_margin: a and b must differ");
  check_prior(problem, prior);
  const std::size_t m = problem.num_states();
  std::vector<double> d(m);
  for (std::size_t j = 0; j < m; ++j) d[j] = problem.utility(a, j) - problem.utility(b, j);
  return minimize_over_band(d, BandBox(prior.mass, epsilon)).value;
}

/// R(eps) = min over competitors b of R_{a,b}(eps); +inf for a single-act problem.
inline double worst_case_margin(const DecisionProblem& problem, std::size_t a, const Prior& prior, double epsilon) {
  problem.check_act(a);
  check_prior(problem, prior);
  const BandBox band(prior.mass, epsilon);
  const std::size_t m = problem.num_states();
  std::vector<double> d(m);
  double worst = kInfinity;
  for (std::size_t b = 0; b < problem.num_acts(); ++b) {
    if (b == a) continue;
    for (std::size_t j = 0; j < m; ++j) d[j] = problem.utility(a, j) - problem.utility(b, j);
    worst = std::min(worst, minimize_over_band(d, band).value);
  }
  return worst;
}

/// Bisection on [0, 1] for sup{eps : R(eps) >= 0}; returns the inner end point.
inline Radius robustness_radius(const DecisionProblem& problem, std::size_t a, const Prior& prior,
                                const BisectionConfig& config = {}) {
  config.validate();
  if (!bayes_acts(problem, prior).contains(a)) return Radius::not_bayes();
  if (worst_case_margin(problem, a, prior, 1.0) >= 0.0) return Radius::value(1.0);

  double lo = 0.0;
  double hi = 1.0;
  while (hi - lo > config.tolerance) {
    const double mid = 0.5 * (lo + hi);
    if (worst_case_margin(problem, a, prior, mid) >= 0.0)
      lo = mid;
    else
      hi = mid;
  }
  return Radius::value(lo);
}

namespace detail {

inline std::vector<double> difference_row(const DecisionProblem& problem, std::size_t a, std::size_t b) {
  std::vector<double> d(problem.num_states());
  for (std::size_t j = 0; j < d.size(); ++j) d[j] = problem.utility(a, j) - problem.utility(b, j);
  return d;
}

inline double utility_range(const DecisionProblem& problem) {
  const auto& v = problem.utilities().data();
  const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
  return *hi - *lo;
}

}  // namespace detail

/// Solves max t s.t. sum_b beta_b (u(b,j) - u(a,j)) >= t for all j, beta in the
/// simplex. Returns a certificate iff the optimal t (in units of the utility
/// range of the whole table) exceeds kStrictnessThreshold.
inline std::optional<DominanceCertificate> strict_inadmissibility_certificate(const DecisionProblem& problem,
                                                                              std::size_t a) {
  problem.check_act(a);
  const std::size_t n = problem.num_acts();
  const std::size_t m = problem.num_states();
  if (n < 2) return std::nullopt;
  const double range = detail::utility_range(problem);
  if (range <= 0.0) return std::nullopt;

  std::vector<std::size_t> competitors;
  for (std::size_t b = 0; b < n; ++b)
    if (b != a) competitors.push_back(b);
  const std::size_t k = competitors.size();

  LinearProgram lp;
  for (std::size_t i = 0; i < k; ++i) lp.add_variable(0.0, {0.0, 1.0});
  const std::size_t t_var = lp.add_variable(-1.0, {-2.0, kInfinity});
  {
    std::vector<double> row(lp.num_variables(), 1.0);
    row[t_var] = 0.0;
    lp.add_equality(row, 1.0);
  }
  for (std::size_t j = 0; j < m; ++j) {
    std::vector<double> row(lp.num_variables(), 0.0);
    for (std::size_t i = 0; i < k; ++i)
      row[i] = (problem.utility(competitors[i], j) - problem.utility(a, j)) / range;
    row[t_var] = -1.0;
    lp.add_greater_equal(row, 0.0);
  }
  const LpOutcome out = solve_lp(lp);
  if (!out.optimal()) throw SolverError("strict_inadmissibility_certificate: auxiliary LP not optimal");
  const double t_star = out.point[t_var];
  if (!(t_star > kStrictnessThreshold)) return std::nullopt;

  DominanceCertificate cert;
  cert.act = a;
  cert.competitors = competitors;
  cert.weights.assign(out.point.begin(), out.point.begin() + static_cast<std::ptrdiff_t>(k));
  double total = 0.0;
  for (double& w : cert.weights) {
    w = std::max(w, 0.0);
    total += w;
  }
  for (double& w : cert.weights) w /= total;
  cert.margins.resize(m);
  for (std::size_t j = 0; j < m; ++j) {
    double mix = 0.0;
    for (std::size_t i = 0; i < k; ++i) mix += cert.weights[i] * problem.utility(competitors[i], j);
    cert.margins[j] = mix - problem.utility(a, j);
  }
  return cert;
}

/// Contamination need via the LP  min eps  over (pi, eps) with pi in the
/// simplex, |pi_j - pi0_j| <= eps, and E_pi[u_a] >= E_pi[u_b] for all b != a.
///
/// Infeasibility is reported together with a dominance certificate; an
/// infeasible LP without a certificate is a SolverError.
inline Need contamination_need(const DecisionProblem& problem, std::size_t a, const Prior& prior) {
  problem.check_act(a);
  check_prior(problem, prior);
  if (bayes_acts(problem, prior).contains(a)) return Need{Need::Kind::Value, 0.0, prior.mass, std::nullopt};

  const std::size_t m = problem.num_states();
  LinearProgram lp;
  for (std::size_t j = 0; j < m; ++j) lp.add_variable(0.0, {0.0, 1.0});
  const std::size_t eps_var = lp.add_variable(1.0, {0.0, 1.0});
  {
    std::vector<double> row(lp.num_variables(), 1.0);
    row[eps_var] = 0.0;
    lp.add_equality(row, 1.0);
  }
  for (std::size_t j = 0; j < m; ++j) {
    // pi_j + eps >= pi0_j   and   -pi_j + eps >= -pi0_j
    std::vector<double> row(lp.num_variables(), 0.0);
    row[j] = 1.0;
    row[eps_var] = 1.0;
    lp.add_greater_equal(row, prior.mass[j]);
    row.assign(lp.num_variables(), 0.0);
    row[j] = -1.0;
    row[eps_var] = 1.0;
    lp.add_greater_equal(row, -prior.mass[j]);
  }
  for (std::size_t b = 0; b < problem.num_acts(); ++b) {
    if (b == a) continue;
    auto d = detail::difference_row(problem, a, b);
    double scale = 0.0;
    for (double v : d) scale = std::max(scale, std::abs(v));
    if (scale == 0.0) continue;  // duplicate of a: vacuous
    std::vector<double> row(lp.num_variables(), 0.0);
    for (std::size_t j = 0; j < m; ++j) row[j] = d[j] / scale;
    lp.add_greater_equal(row, 0.0);
  }

  const LpOutcome out = solve_lp(lp);
  if (out.status == LpStatus::Optimal) {
    std::vector<double> witness(out.point.begin(), out.point.begin() + static_cast<std::ptrdiff_t>(m));
    return Need{Need::Kind::Value, std::clamp(out.point[eps_var], 0.0, 1.0), std::move(witness), std::nullopt};
  }
  if (out.status == LpStatus::Unbounded) throw SolverError("contamination_need: LP reported unbounded");
  auto cert = strict_inadmissibility_certificate(problem, a);
  if (!cert)
    throw SolverError("contamination_need: LP infeasible for act '" + problem.acts()[a] +
                      "' but no dominance certificate exists");
  return Need{Need::Kind::Infeasible, 0.0, std::nullopt, std::move(cert)};
}

struct ProfileRow {
  std::size_t prior = 0;
  std::size_t act = 0;
  bool is_bayes = false;
  double expected_utility = 0.0;
  Radius radius;
  Need need;
};

struct StabilityProfile {
  std::vector<std::string> acts;
  std::vector<Prior> priors;
  std::vector<ProfileRow> rows;  // prior-major: rows[p * acts.size() + a]

  const ProfileRow& at(std::size_t prior, std::size_t act) const { return rows.at(prior * acts.size() + act); }

  /// Rows for a single prior, in act order.
  std::span<const ProfileRow> for_prior(std::size_t prior) const {
    return std::span<const ProfileRow>(rows).subspan(prior * acts.size(), acts.size());
  }
};

namespace detail {

template <class E>
[[noreturn]] void rethrow_as(const std::string& context, const E& e) {
  throw E(context + e.what());
}

inline ProfileRow profile_entry(const DecisionProblem& problem, const Prior& prior, std::size_t p, std::size_t a,
                                const BisectionConfig& config) {
  const std::string context = "prior '" + prior.name + "', act '" + problem.acts()[a] + "': ";
  try {
    const BayesSet bayes = bayes_acts(problem, prior);
    ProfileRow row;
    row.prior = p;
    row.act = a;
    row.is_bayes = bayes.contains(a);
    row.expected_utility = bayes.expected_utilities[a];
    row.radius = robustness_radius(problem, a, prior, config);
    row.need = contamination_need(problem, a, prior);
    return row;
  } catch (const SolverError& e) {
    rethrow_as(context, e);
  } catch (const ConsistencyError& e) {
    rethrow_as(context, e);
  } catch (const InputError& e) {
    rethrow_as(context, e);
  } catch (const DimensionError& e) {
    rethrow_as(context, e);
  }
}

}  // namespace detail

/// Radius and Need for every (act, prior) pair. `threads == 0` picks the
/// hardware concurrency; pairs are independent and merged by index.
inline StabilityProfile stability_profile(const DecisionProblem& problem, const std::vector<Prior>& priors,
                                          const BisectionConfig& config = {}, unsigned threads = 0) {
  config.validate();
  for (const auto& p : priors) check_prior(problem, p);

  StabilityProfile profile{problem.acts(), priors, {}};
  const std::size_t n = problem.num_acts();
  const std::size_t total = priors.size() * n;
  profile.rows.resize(total);

  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  const std::size_t workers = std::min<std::size_t>(threads, std::max<std::size_t>(total, 1));

  auto work = [&](std::size_t begin, std::size_t stride) {
    for (std::size_t i = begin; i < total; i += stride)
      profile.rows[i] = detail::profile_entry(problem, priors[i / n], i / n, i % n, config);
  };

  if (workers <= 1) {
    work(0, 1);
  } else {
    std::vector<std::future<void>> jobs;
    for (std::size_t w = 0; w < workers; ++w) jobs.push_back(std::async(std::launch::async, work, w, workers));
    std::exception_ptr first;
    for (auto& j : jobs) {
      try {
        j.get();
      } catch (...) {
        if (!first) first = std::current_exception();
      }
    }
    if (first) std::rethrow_exception(first);
  }
  return profile;
}

}  // namespace robust_bayes
