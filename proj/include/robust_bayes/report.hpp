#pragma once

// Report builders: tidy long-format CSV (prior, act, measure, value) plus
// JSON documents. Sentinels: "NOT_BAYES" for rob = -inf, "INADMISSIBLE" for
// con = +inf and for the score of a strictly inadmissible act.

#include <cstdlib>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "robust_bayes/decision.hpp"
#include "robust_bayes/io.hpp"
#include "robust_bayes/scenarios.hpp"
#include "robust_bayes/selection.hpp"
#include "robust_bayes/stability.hpp"

namespace robust_bayes::report {

using nlohmann::json;

inline constexpr const char* kNotBayes = "NOT_BAYES";
inline constexpr const char* kInadmissible = "INADMISSIBLE";
inline constexpr const char* kTidyHeader = "prior,act,measure,value\n";

class TidyWriter {
 public:
  TidyWriter() { os_ << kTidyHeader; }

  void number(const std::string& prior, const std::string& act, const char* measure, double v) {
    os_ << io::csv_field(prior) << ',' << io::csv_field(act) << ',' << measure << ',' << io::format_number(v) << '\n';
  }
  void sentinel(const std::string& prior, const std::string& act, const char* measure, const char* s) {
    os_ << io::csv_field(prior) << ',' << io::csv_field(act) << ',' << measure << ',' << io::quoted(s) << '\n';
  }
  std::string str() const { return os_.str(); }

 private:
  std::ostringstream os_;
};

// JSON numbers carry the same 9 significant digits as the CSV reports.
inline json num(double v) { return std::strtod(io::format_number(v).c_str(), nullptr); }

inline json nums(const std::vector<double>& v) {
  json out = json::array();
  for (double x : v) out.push_back(num(x));
  return out;
}

inline std::string stability_csv(const StabilityProfile& profile) {
  TidyWriter w;
  for (const auto& r : profile.rows) {
    const auto& prior = profile.priors[r.prior].name;
    const auto& act = profile.acts[r.act];
    w.number(prior, act, "expected_utility", r.expected_utility);
    w.number(prior, act, "is_bayes", r.is_bayes ? 1.0 : 0.0);
    if (r.radius.finite())
      w.number(prior, act, "rob", r.radius.epsilon);
    else
      w.sentinel(prior, act, "rob", kNotBayes);
    if (r.need.finite())
      w.number(prior, act, "con", r.need.epsilon);
    else
      w.sentinel(prior, act, "con", kInadmissible);
  }
  return w.str();
}

inline json certificate_json(const DominanceCertificate& c, const std::vector<std::string>& acts) {
  json weights = json::object();
  for (std::size_t i = 0; i < c.competitors.size(); ++i) weights[acts[c.competitors[i]]] = num(c.weights[i]);
  return {{"weights", weights}, {"margins", nums(c.margins)}, {"min_margin", num(c.min_margin())}};
}

inline json stability_json(const DecisionProblem& problem, const StabilityProfile& profile,
                           const BisectionConfig& config) {
  json priors = json::array();
  for (const auto& p : profile.priors) priors.push_back({{"name", p.name}, {"mass", nums(p.mass)}});
  json rows = json::array();
  for (const auto& r : profile.rows) {
    json row = {{"prior", profile.priors[r.prior].name},
                {"act", profile.acts[r.act]},
                {"is_bayes", r.is_bayes},
                {"expected_utility", num(r.expected_utility)}};
    row["rob"] = r.radius.finite() ? num(r.radius.epsilon) : json(kNotBayes);
    row["con"] = r.need.finite() ? num(r.need.epsilon) : json(kInadmissible);
    row["certificate"] = r.need.certificate ? certificate_json(*r.need.certificate, profile.acts) : json(nullptr);
    rows.push_back(std::move(row));
  }
  return {{"report", "stability"},
          {"tolerance", num(config.tolerance)},
          {"acts", problem.acts()},
          {"states", problem.states()},
          {"priors", priors},
          {"profile", rows}};
}

struct PathReport {
  std::string grid_csv;
  std::string breakpoints_csv;
  std::string lines_csv;
  std::string scores_csv;
  json document;
};

inline std::string join_acts(const std::vector<std::size_t>& idx, const std::vector<std::string>& acts) {
  std::string out;
  for (auto i : idx) out += (out.empty() ? "" : ";") + acts[i];
  return out;
}

inline PathReport path_report(const StabilityProfile& profile, const CostAssignment& costs,
                              const std::vector<SelectionPath>& paths, double grid_step) {
  std::ostringstream grid, bps, lines;
  TidyWriter scores;
  grid << "prior,lambda,act,tied\n";
  bps << "prior,lambda,from,to\n";
  lines << "prior,act,branch,intercept,slope,cost\n";
  json docs = json::array();
  for (const auto& path : paths) {
    const auto& prior = profile.priors[path.prior].name;
    json jgrid = json::array(), jbps = json::array(), jlines = json::array(), jsegs = json::array();
    for (const auto& g : path.grid) {
      const auto& act = profile.acts[g.chosen.representative];
      grid << io::csv_field(prior) << ',' << io::format_number(g.lambda) << ',' << io::csv_field(act) << ','
           << io::csv_field(join_acts(g.chosen.acts, profile.acts)) << '\n';
      json tied = json::array();
      for (auto i : g.chosen.acts) tied.push_back(profile.acts[i]);
      jgrid.push_back({{"lambda", num(g.lambda)}, {"act", act}, {"tied", tied}});
    }
    for (const auto& b : path.breakpoints) {
      bps << io::csv_field(prior) << ',' << io::format_number(b.lambda) << ',' << io::csv_field(profile.acts[b.from])
          << ',' << io::csv_field(profile.acts[b.to]) << '\n';
      jbps.push_back({{"lambda", num(b.lambda)}, {"from", profile.acts[b.from]}, {"to", profile.acts[b.to]}});
    }
    for (const auto& s : path.segments)
      jsegs.push_back({{"begin", num(s.begin)}, {"end", num(s.end)}, {"act", profile.acts[s.act]}});
    for (const auto& l : path.lines) {
      const auto& act = profile.acts[l.act];
      lines << io::csv_field(prior) << ',' << io::csv_field(act) << ',' << to_string(l.branch) << ',';
      if (l.finite)
        lines << io::format_number(l.intercept);
      else
        lines << io::quoted(kInadmissible);
      lines << ',' << io::format_number(l.slope) << ',' << io::format_number(costs.raw[l.act]) << '\n';
      jlines.push_back({{"act", act},
                        {"branch", to_string(l.branch)},
                        {"intercept", l.finite ? num(l.intercept) : json(kInadmissible)},
                        {"slope", num(l.slope)},
                        {"cost", num(costs.raw[l.act])}});
      if (l.finite)
        scores.number(prior, act, "score", l.intercept);
      else
        scores.sentinel(prior, act, "score", kInadmissible);
      scores.number(prior, act, "cost", costs.normalized[l.act]);
    }
    docs.push_back({{"prior", prior},
                    {"lambda_max", num(path.lambda_max)},
                    {"lines", jlines},
                    {"breakpoints", jbps},
                    {"segments", jsegs},
                    {"grid", jgrid}});
  }
  json doc = {{"report", "selection_path"}, {"grid_step", num(grid_step)}, {"acts", profile.acts}, {"paths", docs}};
  return {grid.str(), bps.str(), lines.str(), scores.str(), std::move(doc)};
}

struct BaselineRow {
  std::string prior;
  GammaAggregate gamma;
  CriterionResult rex;
  std::vector<double> expected;
};

inline std::string baselines_csv(const DecisionProblem& problem, const std::vector<BaselineRow>& rows) {
  TidyWriter w;
  for (const auto& r : rows)
    for (std::size_t a = 0; a < problem.num_acts(); ++a) {
      const auto& act = problem.acts()[a];
      w.number(r.prior, act, "expected_utility", r.expected[a]);
      w.number(r.prior, act, "gamma_min", r.gamma.lower[a]);
      w.number(r.prior, act, "gamma_max", r.gamma.upper[a]);
      w.number(r.prior, act, "rex", r.rex.values[a]);
    }
  return w.str();
}

inline std::string baselines_choice_csv(const DecisionProblem& problem, const std::vector<BaselineRow>& rows) {
  std::ostringstream os;
  os << "prior,criterion,act,value\n";
  for (const auto& r : rows) {
    auto emit = [&](const char* name, const std::vector<double>& values) {
      const auto best = argmax_lowest(values);
      os << io::csv_field(r.prior) << ',' << name << ',' << io::csv_field(problem.acts()[best]) << ','
         << io::format_number(values[best]) << '\n';
    };
    std::vector<double> mix;
    for (std::size_t a = 0; a < problem.num_acts(); ++a)
      mix.push_back(r.gamma.criterion.values[a]);
    emit("bayes", r.expected);
    emit("gamma_minimax", r.gamma.lower);
    emit("gamma_maximax", r.gamma.upper);
    emit("gamma_mix", mix);
    emit("rex", r.rex.values);
  }
  return os.str();
}

inline std::string regimes_csv(const ReturnPanel& panel, const RegimeModel& model) {
  std::ostringstream os;
  os << "month,cluster,label\n";
  for (std::size_t t = 0; t < panel.num_months(); ++t)
    os << panel.months[t] << ',' << model.assignment[t] << ',' << io::csv_field(model.labels[model.assignment[t]])
       << '\n';
  return os.str();
}

}  // namespace robust_bayes::report
