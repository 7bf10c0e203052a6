#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <string>
#include <string_view>
#include <vector>

#include "robust_bayes/common.hpp"

namespace robust_bayes {

/// Tolerance under which two expected utilities count as tied.
inline constexpr double kTieTolerance = 1e-12;

/// A finite decision problem: acts x states utility table u(a_i, theta_j).
class DecisionProblem {
 public:
  DecisionProblem(std::vector<std::string> acts, std::vector<std::string> states, Matrix utilities)
      : acts_(std::move(acts)), states_(std::move(states)), utilities_(std::move(utilities)) {
    if (acts_.empty()) throw DimensionError("DecisionProblem: at least one act required");
    if (states_.empty()) throw DimensionError("DecisionProblem: at least one state required");
    if (utilities_.rows() != acts_.size() || utilities_.cols() != states_.size())
      throw DimensionError("DecisionProblem: utility matrix is " + std::to_string(utilities_.rows()) + "x" +
                           std::to_string(utilities_.cols()) + ", labels say " + std::to_string(acts_.size()) + "x" +
                           std::to_string(states_.size()));
    for (double v : utilities_.data())
      if (!std::isfinite(v)) throw DimensionError("DecisionProblem: non-finite utility");
  }

  std::size_t num_acts() const noexcept { return acts_.size(); }
  std::size_t num_states() const noexcept { return states_.size(); }
  const std::vector<std::string>& acts() const noexcept { return acts_; }
  const std::vector<std::string>& states() const noexcept { return states_; }
  const Matrix& utilities() const noexcept { return utilities_; }

  double utility(std::size_t act, std::size_t state) const { return utilities_(act, state); }
  std::span<const double> row(std::size_t act) const {
    check_act(act);
    return utilities_.row(act);
  }

  std::size_t act_index(std::string_view name) const {
    const auto it = std::find(acts_.begin(), acts_.end(), name);
    if (it == acts_.end()) throw InputError("unknown act '" + std::string(name) + "'");
    return static_cast<std::size_t>(it - acts_.begin());
  }

  void check_act(std::size_t act) const {
    if (act >= acts_.size()) throw InputError("act index " + std::to_string(act) + " out of range");
  }

  friend bool operator==(const DecisionProblem&, const DecisionProblem&) = default;

 private:
  std::vector<std::string> acts_;
  std::vector<std::string> states_;
  Matrix utilities_;
};

/// A named point of the probability simplex.
struct Prior {
  std::string name;
  std::vector<double> mass;

  /// Validates (non-negative, sums to 1 within 1e-9) and renormalizes by the sum.
  static Prior make(std::string name, std::vector<double> mass) {
    if (mass.empty()) throw InputError("prior '" + name + "' has no masses");
    double total = 0.0;
    for (double p : mass) {
      if (!std::isfinite(p) || p < 0.0) throw InputError("prior '" + name + "' has a negative or non-finite mass");
      total += p;
    }
    if (std::abs(total - 1.0) > 1e-9)
      throw InputError("prior '" + name + "' sums to " + std::to_string(total) + ", expected 1");
    for (double& p : mass) p /= total;
    return Prior{std::move(name), std::move(mass)};
  }

  /// Point mass on one state.
  static Prior degenerate(std::size_t m, std::size_t state, std::string name = "degenerate") {
    std::vector<double> mass(m, 0.0);
    mass.at(state) = 1.0;
    return Prior{std::move(name), std::move(mass)};
  }

  static Prior uniform(std::size_t m, std::string name = "uniform") {
    return Prior{std::move(name), std::vector<double>(m, 1.0 / static_cast<double>(m))};
  }
};

struct BayesSet {
  std::vector<std::size_t> optimal_acts;   // ascending act indices
  std::vector<double> expected_utilities;  // one per act
  double max_expected_utility = 0.0;

  bool contains(std::size_t act) const {
    return std::binary_search(optimal_acts.begin(), optimal_acts.end(), act);
  }
};

inline void check_prior(const DecisionProblem& problem, const Prior& prior) {
  if (prior.mass.size() != problem.num_states())
    throw DimensionError("prior '" + prior.name + "' has " + std::to_string(prior.mass.size()) +
                         " masses, problem has " + std::to_string(problem.num_states()) + " states");
}

inline double expected_utility(const DecisionProblem& problem, std::size_t act, const Prior& prior) {
  check_prior(problem, prior);
  return dot(problem.row(act), prior.mass);
}

inline double expected_utility(const DecisionProblem& problem, std::string_view act, const Prior& prior) {
  return expected_utility(problem, problem.act_index(act), prior);
}

/// All acts whose expected utility is within kTieTolerance of the maximum.
inline BayesSet bayes_acts(const DecisionProblem& problem, const Prior& prior) {
  check_prior(problem, prior);
  BayesSet out;
  out.expected_utilities.reserve(problem.num_acts());
  for (std::size_t a = 0; a < problem.num_acts(); ++a) out.expected_utilities.push_back(dot(problem.row(a), prior.mass));
  out.max_expected_utility = *std::max_element(out.expected_utilities.begin(), out.expected_utilities.end());
  for (std::size_t a = 0; a < problem.num_acts(); ++a)
    if (out.expected_utilities[a] >= out.max_expected_utility - kTieTolerance) out.optimal_acts.push_back(a);
  return out;
}

/// u -> scale * u + shift for every entry. Bayes sets are invariant.
inline DecisionProblem affine_transform(const DecisionProblem& problem, double scale, double shift) {
  if (!(scale > 0.0) || !std::isfinite(scale)) throw InputError("affine_transform: scale must be > 0");
  if (!std::isfinite(shift)) throw InputError("affine_transform: shift must be finite");
  Matrix u = problem.utilities();
  for (std::size_t i = 0; i < u.rows(); ++i)
    for (double& v : u.row(i)) v = scale * v + shift;
  return DecisionProblem(problem.acts(), problem.states(), std::move(u));
}

}  // namespace robust_bayes
