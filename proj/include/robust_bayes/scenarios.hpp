#pragma once

// From monthly return data to a regime-based decision problem:
//   portfolio returns -> (market return, volatility) features -> k-means
//   regimes -> conditional-mean utility matrix.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <numeric>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "robust_bayes/common.hpp"
#include "robust_bayes/decision.hpp"

namespace robust_bayes {

/// Monthly log-returns: T months (ISO "YYYY-MM", strictly increasing) x K assets.
struct ReturnPanel {
  std::vector<std::string> months;
  std::vector<std::string> assets;
  Matrix returns;
  std::optional<std::vector<double>> volatility;  // precomputed sigma_t

  std::size_t num_months() const noexcept { return months.size(); }

  std::size_t asset_index(const std::string& name) const {
    const auto it = std::find(assets.begin(), assets.end(), name);
    if (it == assets.end()) throw ConsistencyError("asset '" + name + "' not present in the return panel");
    return static_cast<std::size_t>(it - assets.begin());
  }

  void validate() const {
    if (returns.rows() != months.size() || returns.cols() != assets.size())
      throw DimensionError("ReturnPanel: return matrix does not match month/asset labels");
    for (std::size_t t = 1; t < months.size(); ++t)
      if (!(months[t - 1] < months[t]))
        throw InputError("ReturnPanel: months not strictly increasing at " + months[t]);
    if (volatility && volatility->size() != months.size())
      throw DimensionError("ReturnPanel: volatility length != number of months");
    for (double v : returns.data())
      if (!std::isfinite(v)) throw InputError("ReturnPanel: non-finite return");
  }
};

/// Daily market returns keyed by "YYYY-MM-DD".
struct DailySeries {
  std::vector<std::string> dates;
  std::vector<double> values;
};

/// Fixed long-only weight vectors, one per portfolio.
struct PortfolioBook {
  std::vector<std::string> portfolios;
  std::vector<std::string> assets;
  Matrix weights;  // portfolios x assets

  void validate() const {
    if (weights.rows() != portfolios.size() || weights.cols() != assets.size())
      throw DimensionError("PortfolioBook: weight matrix does not match labels");
    for (std::size_t p = 0; p < portfolios.size(); ++p) {
      double total = 0.0;
      for (double w : weights.row(p)) {
        if (!std::isfinite(w) || w < 0.0) throw InputError("portfolio '" + portfolios[p] + "' has a negative weight");
        total += w;
      }
      if (std::abs(total - 1.0) > 1e-9) throw InputError("portfolio '" + portfolios[p] + "' weights do not sum to 1");
    }
  }
};

/// r_t(a) = sum_k w_{a,k} r_t(k). Assets are matched by name.
inline Matrix portfolio_returns(const ReturnPanel& panel, const PortfolioBook& book) {
  panel.validate();
  book.validate();
  std::vector<std::size_t> column(book.assets.size());
  for (std::size_t k = 0; k < book.assets.size(); ++k) column[k] = panel.asset_index(book.assets[k]);

  Matrix out(panel.num_months(), book.portfolios.size());
  for (std::size_t t = 0; t < panel.num_months(); ++t)
    for (std::size_t a = 0; a < book.portfolios.size(); ++a) {
      double r = 0.0;
      for (std::size_t k = 0; k < column.size(); ++k) r += book.weights(a, k) * panel.returns(t, column[k]);
      out(t, a) = r;
    }
  return out;
}

inline constexpr std::size_t kMinDailyObservations = 5;

/// Per month (r_t^M, sigma_t). With daily data, sigma_t is the sample standard
/// deviation of the month's daily market returns; otherwise the panel's
/// precomputed volatility column is passed through.
inline Matrix monthly_features(const ReturnPanel& panel, const std::string& market_asset,
                               const std::optional<DailySeries>& daily = std::nullopt) {
  panel.validate();
  const std::size_t market = panel.asset_index(market_asset);
  Matrix features(panel.num_months(), 2);
  for (std::size_t t = 0; t < panel.num_months(); ++t) features(t, 0) = panel.returns(t, market);

  if (daily) {
    if (daily->dates.size() != daily->values.size()) throw DimensionError("DailySeries: dates/values length mismatch");
    std::map<std::string, std::vector<double>> by_month;
    for (std::size_t i = 0; i < daily->dates.size(); ++i)
      by_month[daily->dates[i].substr(0, 7)].push_back(daily->values[i]);
    for (std::size_t t = 0; t < panel.num_months(); ++t) {
      const auto it = by_month.find(panel.months[t]);
      const std::size_t count = it == by_month.end() ? 0 : it->second.size();
      if (count < kMinDailyObservations)
        throw InputError("month " + panel.months[t] + " has " + std::to_string(count) +
                         " daily observations, need at least " + std::to_string(kMinDailyObservations));
      // Shifted by the first observation: a constant month gives exactly 0.
      const auto& v = it->second;
      double mean = 0.0;
      for (double x : v) mean += x - v.front();
      mean /= static_cast<double>(v.size());
      double ss = 0.0;
      for (double x : v) ss += (x - v.front() - mean) * (x - v.front() - mean);
      features(t, 1) = std::sqrt(ss / static_cast<double>(v.size() - 1));
    }
  } else if (panel.volatility) {
    for (std::size_t t = 0; t < panel.num_months(); ++t) features(t, 1) = (*panel.volatility)[t];
  } else {
    throw InputError("no volatility available: supply a market_vol column or daily returns");
  }
  return features;
}

struct KMeansOptions {
  std::size_t restarts = 10;
  std::size_t max_iterations = 100;
  double shift_tolerance = 1e-8;
  bool standardize = true;
};

struct RegimeModel {
  std::size_t k = 0;
  Matrix centroids;                  // clustering space (z-scored when standardize)
  std::vector<double> feature_mean;  // per column
  std::vector<double> feature_scale; // population sd per column (1 if constant)
  bool standardized = true;
  std::vector<std::size_t> assignment;           // month -> cluster
  std::vector<std::vector<std::size_t>> partition;  // cluster -> months (ascending)
  double inertia = 0.0;                          // within-cluster sum of squares
  std::vector<double> objective_history;         // per assignment step, winning restart
  std::vector<std::string> labels;               // cluster -> regime name (after labeling)
  std::vector<std::size_t> state_order;          // clusters in utility-column order (after labeling)

  /// Centroid of cluster c in z-scored feature space.
  std::vector<double> z_centroid(std::size_t c) const {
    std::vector<double> z(centroids.cols());
    for (std::size_t d = 0; d < z.size(); ++d)
      z[d] = standardized ? centroids(c, d) : (centroids(c, d) - feature_mean[d]) / feature_scale[d];
    return z;
  }
};

namespace detail {

// Portable uniform draw in [0, 1) from a 64-bit engine.
inline double uniform01(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

inline double squared_distance(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return s;
}

struct LloydRun {
  Matrix centroids;
  std::vector<std::size_t> assignment;
  double inertia = 0.0;
  std::vector<double> history;
};

inline Matrix kmeanspp_seed(const Matrix& x, std::size_t k, std::mt19937_64& rng) {
  const std::size_t n = x.rows();
  Matrix c(k, x.cols());
  std::vector<double> d2(n, std::numeric_limits<double>::infinity());
  std::size_t first = std::min(n - 1, static_cast<std::size_t>(uniform01(rng) * static_cast<double>(n)));
  std::copy(x.row(first).begin(), x.row(first).end(), c.row(0).begin());
  for (std::size_t j = 1; j < k; ++j) {
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      d2[i] = std::min(d2[i], squared_distance(x.row(i), c.row(j - 1)));
      total += d2[i];
    }
    std::size_t pick = 0;
    if (total > 0.0) {
      const double target = uniform01(rng) * total;
      double acc = 0.0;
      pick = n - 1;
      for (std::size_t i = 0; i < n; ++i) {
        acc += d2[i];
        if (acc > target && d2[i] > 0.0) {
          pick = i;
          break;
        }
      }
    } else {
      pick = std::min(n - 1, static_cast<std::size_t>(uniform01(rng) * static_cast<double>(n)));
    }
    std::copy(x.row(pick).begin(), x.row(pick).end(), c.row(j).begin());
  }
  return c;
}

inline double assign(const Matrix& x, const Matrix& c, std::vector<std::size_t>& assignment,
                     std::vector<double>& dist) {
  double obj = 0.0;
  for (std::size_t i = 0; i < x.rows(); ++i) {
    std::size_t best = 0;
    double best_d = squared_distance(x.row(i), c.row(0));
    for (std::size_t j = 1; j < c.rows(); ++j) {
      const double d = squared_distance(x.row(i), c.row(j));
      if (d < best_d) {
        best_d = d;
        best = j;
      }
    }
    assignment[i] = best;
    dist[i] = best_d;
    obj += best_d;
  }
  return obj;
}

// Moves the centroid of every empty cluster onto the point farthest from its
// own centroid (taken from clusters with more than one member). Returns true
// if anything was reseeded.
inline bool reseed_empty(const Matrix& x, Matrix& c, std::vector<std::size_t>& assignment,
                         std::vector<double>& dist) {
  std::vector<std::size_t> sizes(c.rows(), 0);
  for (auto a : assignment) ++sizes[a];
  bool changed = false;
  for (std::size_t j = 0; j < c.rows(); ++j) {
    if (sizes[j] > 0) continue;
    std::optional<std::size_t> far;
    for (std::size_t i = 0; i < x.rows(); ++i)
      if (sizes[assignment[i]] > 1 && (!far || dist[i] > dist[*far])) far = i;
    if (!far) continue;
    std::copy(x.row(*far).begin(), x.row(*far).end(), c.row(j).begin());
    --sizes[assignment[*far]];
    assignment[*far] = j;
    dist[*far] = 0.0;
    sizes[j] = 1;
    changed = true;
  }
  return changed;
}

inline LloydRun lloyd(const Matrix& x, Matrix centroids, const KMeansOptions& opt) {
  const std::size_t n = x.rows(), k = centroids.rows(), dim = x.cols();
  LloydRun run;
  run.assignment.assign(n, 0);
  std::vector<double> dist(n, 0.0);
  for (std::size_t iter = 0; iter < opt.max_iterations; ++iter) {
    run.inertia = assign(x, centroids, run.assignment, dist);
    run.history.push_back(run.inertia);
    if (reseed_empty(x, centroids, run.assignment, dist)) {
      run.inertia = std::accumulate(dist.begin(), dist.end(), 0.0);
      run.history.push_back(run.inertia);
    }

    Matrix next(k, dim);
    std::vector<std::size_t> sizes(k, 0);
    for (std::size_t i = 0; i < n; ++i) {
      ++sizes[run.assignment[i]];
      for (std::size_t d = 0; d < dim; ++d) next(run.assignment[i], d) += x(i, d);
    }
    double shift = 0.0;
    for (std::size_t j = 0; j < k; ++j) {
      if (sizes[j] == 0) {
        for (std::size_t d = 0; d < dim; ++d) next(j, d) = centroids(j, d);
        continue;
      }
      for (std::size_t d = 0; d < dim; ++d) next(j, d) /= static_cast<double>(sizes[j]);
      shift = std::max(shift, std::sqrt(squared_distance(next.row(j), centroids.row(j))));
    }
    centroids = std::move(next);
    if (shift < opt.shift_tolerance) break;
  }
  run.inertia = assign(x, centroids, run.assignment, dist);
  run.history.push_back(run.inertia);
  if (reseed_empty(x, centroids, run.assignment, dist)) {
    run.inertia = std::accumulate(dist.begin(), dist.end(), 0.0);
    run.history.push_back(run.inertia);
  }
  run.centroids = std::move(centroids);
  return run;
}

}  // namespace detail

/// k-means++ seeded Lloyd iterations, best of `restarts` by inertia.
/// Deterministic given (features, k, seed, options).
inline RegimeModel kmeans_partition(const Matrix& features, std::size_t k, std::uint64_t seed,
                                    const KMeansOptions& options = {}) {
  const std::size_t n = features.rows(), dim = features.cols();
  if (k == 0) throw InputError("k-means: k must be >= 1");
  if (n < k) throw InputError("k-means: " + std::to_string(n) + " observations, fewer than k = " + std::to_string(k));
  if (options.restarts == 0) throw InputError("k-means: at least one restart required");

  RegimeModel model;
  model.k = k;
  model.standardized = options.standardize;
  model.feature_mean.assign(dim, 0.0);
  model.feature_scale.assign(dim, 1.0);
  for (std::size_t d = 0; d < dim; ++d) {
    double mean = 0.0;
    for (std::size_t i = 0; i < n; ++i) mean += features(i, d);
    mean /= static_cast<double>(n);
    double ss = 0.0;
    for (std::size_t i = 0; i < n; ++i) ss += (features(i, d) - mean) * (features(i, d) - mean);
    const double sd = std::sqrt(ss / static_cast<double>(n));
    model.feature_mean[d] = mean;
    model.feature_scale[d] = sd > 0.0 ? sd : 1.0;
  }

  Matrix x = features;
  if (options.standardize)
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t d = 0; d < dim; ++d) x(i, d) = (x(i, d) - model.feature_mean[d]) / model.feature_scale[d];

  std::mt19937_64 rng(seed);
  std::optional<detail::LloydRun> best;
  for (std::size_t r = 0; r < options.restarts; ++r) {
    auto run = detail::lloyd(x, detail::kmeanspp_seed(x, k, rng), options);
    if (!best || run.inertia < best->inertia) best = std::move(run);
  }

  model.centroids = std::move(best->centroids);
  model.assignment = std::move(best->assignment);
  model.inertia = best->inertia;
  model.objective_history = std::move(best->history);
  model.partition.assign(k, {});
  for (std::size_t i = 0; i < n; ++i) model.partition[model.assignment[i]].push_back(i);
  return model;
}

inline const std::array<std::string, 4>& regime_names() {
  static const std::array<std::string, 4> names{"Expansion", "Recovery", "Stagnation", "Recession"};
  return names;
}

/// Names clusters from their z-scored centroids with g = ret_z - vol_z:
/// highest g -> Expansion, lowest -> Recession, and of the remaining two the
/// higher ret_z -> Recovery, the other -> Stagnation. Ties go to the lower
/// cluster index. For k != 4 clusters are named regime_1..regime_k by
/// descending g.
inline RegimeModel label_regimes(RegimeModel model) {
  const std::size_t k = model.k;
  std::vector<double> ret(k), g(k);
  for (std::size_t c = 0; c < k; ++c) {
    const auto z = model.z_centroid(c);
    ret[c] = z.at(0);
    g[c] = z.size() > 1 ? z[0] - z[1] : z[0];
  }
  std::vector<std::size_t> by_g(k);
  std::iota(by_g.begin(), by_g.end(), std::size_t{0});
  std::stable_sort(by_g.begin(), by_g.end(), [&](std::size_t a, std::size_t b) { return g[a] > g[b]; });

  model.labels.assign(k, {});
  if (k == 4) {
    const std::size_t expansion = by_g[0], recession = by_g[3];
    std::size_t recovery = by_g[1], stagnation = by_g[2];
    const bool swap = ret[stagnation] > ret[recovery] || (ret[stagnation] == ret[recovery] && stagnation < recovery);
    if (swap) std::swap(recovery, stagnation);
    model.state_order = {expansion, recovery, stagnation, recession};
    for (std::size_t s = 0; s < 4; ++s) model.labels[model.state_order[s]] = regime_names()[s];
  } else {
    model.state_order = by_g;
    for (std::size_t s = 0; s < k; ++s) model.labels[by_g[s]] = "regime_" + std::to_string(s + 1);
  }
  return model;
}

/// u(a, theta_j) = mean of r_t(a) over the months of regime j; states follow
/// the labeled model's state order.
inline DecisionProblem utility_matrix(const Matrix& returns, const std::vector<std::string>& acts,
                                      const RegimeModel& model) {
  if (model.labels.size() != model.k || model.state_order.size() != model.k)
    throw InputError("utility_matrix: regime model is not labeled");
  if (returns.rows() != model.assignment.size())
    throw DimensionError("utility_matrix: return rows != number of assigned months");
  if (returns.cols() != acts.size()) throw DimensionError("utility_matrix: return columns != number of acts");

  Matrix u(acts.size(), model.k);
  std::vector<std::string> states;
  for (std::size_t s = 0; s < model.k; ++s) {
    const std::size_t c = model.state_order[s];
    const auto& months = model.partition.at(c);
    if (months.empty()) throw InputError("regime '" + model.labels[c] + "' has no months");
    states.push_back(model.labels[c]);
    for (std::size_t a = 0; a < acts.size(); ++a) {
      double sum = 0.0;
      for (std::size_t t : months) sum += returns(t, a);
      u(a, s) = sum / static_cast<double>(months.size());
    }
  }
  return DecisionProblem(acts, std::move(states), std::move(u));
}

struct ScenarioOptions {
  std::size_t k = 4;
  std::uint64_t seed = 42;
  std::string market_asset;  // empty: first panel asset
  KMeansOptions kmeans;
};

struct ScenarioResult {
  Matrix features;
  Matrix returns;
  RegimeModel model;
  DecisionProblem problem;
};

/// The whole pipeline in one call.
inline ScenarioResult build_scenarios(const ReturnPanel& panel, const PortfolioBook& book,
                                      const std::optional<DailySeries>& daily, const ScenarioOptions& options) {
  const std::string market = options.market_asset.empty() ? panel.assets.at(0) : options.market_asset;
  Matrix features = monthly_features(panel, market, daily);
  Matrix returns = portfolio_returns(panel, book);
  RegimeModel model = label_regimes(kmeans_partition(features, options.k, options.seed, options.kmeans));
  DecisionProblem problem = utility_matrix(returns, book.portfolios, model);
  return {std::move(features), std::move(returns), std::move(model), std::move(problem)};
}

}  // namespace robust_bayes
