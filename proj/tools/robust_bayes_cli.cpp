// robust-bayes: command-line front end.
//
//   analyze    stability profile (rob, con, certificates) for every act x prior
//   path       cost-adjusted selection paths over lambda in [0, lambda_max]
//   scenarios  regime utilities from monthly returns and portfolio weights
//   baselines  Gamma-minimax / maximax / mix and rex criteria
//
// Exit codes: 0 success, 2 input error, 3 consistency error, 4 solver error.

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "robust_bayes/robust_bayes.hpp"

namespace fs = std::filesystem;
using namespace robust_bayes;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInput = 2;
constexpr int kExitConsistency = 3;
constexpr int kExitSolver = 4;

struct CommonInputs {
  std::string utilities;
  std::string priors;  // empty: default catalog
  std::string prior;   // empty: every prior
  std::string out_dir = ".";
};

struct LoadedPriors {
  std::vector<std::string> states;
  std::vector<Prior> priors;
};

LoadedPriors load_priors(const std::string& path) {
  if (path.empty()) {
    auto catalog = default_catalog();
    return {catalog.states, catalog.entries};
  }
  auto file = io::parse_priors(io::read_csv_file(path));
  return {file.states, file.priors};
}

std::vector<Prior> select_priors(const DecisionProblem& problem, LoadedPriors loaded, const std::string& selector) {
  if (loaded.states != problem.states()) {
    std::string a, b;
    for (const auto& s : loaded.states) a += " " + s;
    for (const auto& s : problem.states()) b += " " + s;
    throw ConsistencyError("prior states [" + a + " ] do not match utility states [" + b + " ]");
  }
  if (selector.empty()) return loaded.priors;
  for (auto& p : loaded.priors)
    if (p.name == selector) return {p};
  throw InputError("unknown prior '" + selector + "'");
}

void write(const fs::path& dir, const std::string& name, const std::string& content) {
  io::write_atomic(dir / name, content);
  std::cout << "wrote " << (dir / name).string() << '\n';
}

void check_tolerance(double tol) {
  if (!(tol > 0.0 && tol < 1.0)) throw InputError("--tol must lie in (0, 1)");
}

int run_analyze(const CommonInputs& in, double tol, unsigned threads) {
  check_tolerance(tol);
  const auto problem = io::parse_utilities(io::read_csv_file(in.utilities));
  const auto priors = select_priors(problem, load_priors(in.priors), in.prior);
  const BisectionConfig config{tol};
  const auto profile = stability_profile(problem, priors, config, threads);
  write(in.out_dir, "stability.csv", report::stability_csv(profile));
  write(in.out_dir, "stability.json", report::stability_json(problem, profile, config).dump(2) + "\n");
  return kExitOk;
}

CostAssignment load_costs(const DecisionProblem& problem, const std::string& mode, const std::string& path) {
  if (mode == "variance") return variance_cost(problem);
  if (path.empty()) throw InputError("--cost-mode file requires --costs FILE");
  const auto file = io::parse_costs(io::read_csv_file(path));
  if (file.acts.size() != problem.num_acts())
    throw ConsistencyError("costs file lists " + std::to_string(file.acts.size()) + " acts, utilities have " +
                           std::to_string(problem.num_acts()));
  std::vector<double> costs(problem.num_acts(), 0.0);
  for (std::size_t i = 0; i < file.acts.size(); ++i) {
    const auto& acts = problem.acts();
    const auto it = std::find(acts.begin(), acts.end(), file.acts[i]);
    if (it == acts.end()) throw ConsistencyError("costs file names unknown act '" + file.acts[i] + "'");
    costs[static_cast<std::size_t>(it - acts.begin())] = file.costs[i];
  }
  return CostAssignment::from_raw(std::move(costs));
}

int run_path(const CommonInputs& in, double tol, const std::string& cost_mode, const std::string& costs_file,
             double lambda_max, double grid, unsigned threads) {
  check_tolerance(tol);
  if (!(lambda_max > 0.0)) throw InputError("--lambda-max must be > 0");
  if (!(grid > 0.0)) throw InputError("--grid must be > 0");
  const auto problem = io::parse_utilities(io::read_csv_file(in.utilities));
  const auto priors = select_priors(problem, load_priors(in.priors), in.prior);
  const auto costs = load_costs(problem, cost_mode, costs_file);
  const auto profile = stability_profile(problem, priors, BisectionConfig{tol}, threads);
  std::vector<SelectionPath> paths;
  for (std::size_t p = 0; p < priors.size(); ++p) paths.push_back(selection_path(profile, p, costs, lambda_max, grid));
  const auto rep = report::path_report(profile, costs, paths, grid);
  write(in.out_dir, "path_grid.csv", rep.grid_csv);
  write(in.out_dir, "path_breakpoints.csv", rep.breakpoints_csv);
  write(in.out_dir, "path_lines.csv", rep.lines_csv);
  write(in.out_dir, "path_scores.csv", rep.scores_csv);
  write(in.out_dir, "path.json", rep.document.dump(2) + "\n");
  return kExitOk;
}

int run_baselines(const CommonInputs& in, double epsilon, double eta, double mu) {
  if (!(epsilon >= 0.0 && epsilon <= 1.0)) throw InputError("--epsilon must lie in [0, 1]");
  if (!(eta >= 0.0 && eta <= 1.0)) throw InputError("--eta must lie in [0, 1]");
  if (!(mu >= 0.0 && mu <= 1.0)) throw InputError("--mu must lie in [0, 1]");
  const auto problem = io::parse_utilities(io::read_csv_file(in.utilities));
  const auto priors = select_priors(problem, load_priors(in.priors), in.prior);
  std::vector<report::BaselineRow> rows;
  for (const auto& prior : priors) {
    report::BaselineRow row{prior.name, gamma_aggregate(problem, BandBox(prior.mass, epsilon), GammaMode::mix(eta)),
                            rex_score(problem, prior, mu), bayes_acts(problem, prior).expected_utilities};
    rows.push_back(std::move(row));
  }
  write(in.out_dir, "baselines.csv", report::baselines_csv(problem, rows));
  write(in.out_dir, "baselines_choice.csv", report::baselines_choice_csv(problem, rows));
  return kExitOk;
}

struct ScenarioInputs {
  std::string monthly;
  std::string weights;
  std::string daily;
  std::string market;
  std::uint64_t seed = 42;
  std::size_t k = 4;
  bool raw_features = false;
  std::string out_dir = ".";
};

int run_scenarios(const ScenarioInputs& in) {
  if (in.k == 0) throw InputError("--k must be >= 1");
  const auto panel = io::parse_monthly(io::read_csv_file(in.monthly));
  const auto book = io::parse_weights(io::read_csv_file(in.weights));
  std::optional<DailySeries> daily;
  if (!in.daily.empty()) daily = io::parse_daily(io::read_csv_file(in.daily));
  for (const auto& asset : book.assets) panel.asset_index(asset);
  if (!in.market.empty()) panel.asset_index(in.market);

  ScenarioOptions opt;
  opt.k = in.k;
  opt.seed = in.seed;
  opt.market_asset = in.market;
  opt.kmeans.standardize = !in.raw_features;
  const auto result = build_scenarios(panel, book, daily, opt);
  write(in.out_dir, "regimes.csv", report::regimes_csv(panel, result.model));
  write(in.out_dir, "utilities.csv", io::utilities_csv(result.problem));
  return kExitOk;
}

void add_common(CLI::App* cmd, CommonInputs& in, bool with_selector) {
  cmd->add_option("--utilities,-u", in.utilities, "utilities.csv (act,<state1>,...)")->required();
  cmd->add_option("--priors,-p", in.priors, "priors.csv (prior,<state1>,...); default: built-in catalog");
  if (with_selector) cmd->add_option("--prior", in.prior, "restrict to one prior by name");
  cmd->add_option("--out-dir,-o", in.out_dir, "output directory");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Stability of Bayes acts under prior perturbations"};
  app.require_subcommand(1);

  CommonInputs common;
  double tol = 1e-6;
  unsigned threads = 0;

  auto* analyze = app.add_subcommand("analyze", "robustness radius and contamination need for every act and prior");
  add_common(analyze, common, true);
  analyze->add_option("--tol", tol, "bisection tolerance for the robustness radius");
  analyze->add_option("--threads", threads, "worker threads (0 = hardware concurrency)");

  std::string cost_mode = "variance", costs_file;
  double lambda_max = 3.0, grid = 0.01;
  auto* path = app.add_subcommand("path", "cost-adjusted selection paths over lambda");
  add_common(path, common, true);
  path->add_option("--tol", tol, "bisection tolerance for the robustness radius");
  path->add_option("--cost-mode", cost_mode, "file or variance")->check(CLI::IsMember({"file", "variance"}));
  path->add_option("--costs", costs_file, "costs.csv (act,cost) for --cost-mode file");
  path->add_option("--lambda-max", lambda_max, "upper end of the lambda range");
  path->add_option("--grid", grid, "lambda grid step");
  path->add_option("--threads", threads, "worker threads (0 = hardware concurrency)");

  ScenarioInputs scen;
  auto* scenarios = app.add_subcommand("scenarios", "build regime utilities from return data");
  scenarios->add_option("--monthly,-m", scen.monthly, "monthly.csv (date,<ASSET>...[,market_vol])")->required();
  scenarios->add_option("--weights,-w", scen.weights, "weights.csv (portfolio,<ASSET>...)")->required();
  scenarios->add_option("--daily,-d", scen.daily, "daily.csv (date,<MARKET>) for realized volatility");
  scenarios->add_option("--market", scen.market, "market asset column (default: first asset)");
  scenarios->add_option("--seed", scen.seed, "k-means seed");
  scenarios->add_option("--k", scen.k, "number of regimes");
  scenarios->add_flag("--raw-features", scen.raw_features, "cluster unstandardized features");
  scenarios->add_option("--out-dir,-o", scen.out_dir, "output directory");

  double epsilon = 0.1, eta = 0.5, mu = 0.5;
  auto* baselines = app.add_subcommand("baselines", "Gamma-criteria over the band and the rex criterion");
  add_common(baselines, common, true);
  baselines->add_option("--epsilon", epsilon, "band radius of the credal set");
  baselines->add_option("--eta", eta, "weight on the infimum in the Gamma mix");
  baselines->add_option("--mu", mu, "trust parameter of rex");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitInput;
  }

  try {
    if (*analyze) return run_analyze(common, tol, threads);
    if (*path) return run_path(common, tol, cost_mode, costs_file, lambda_max, grid, threads);
    if (*scenarios) return run_scenarios(scen);
    if (*baselines) return run_baselines(common, epsilon, eta, mu);
  } catch (const InputError& e) {
    std::cerr << "input error: " << e.what() << '\n';
    return kExitInput;
  } catch (const ConsistencyError& e) {
    std::cerr << "consistency error: " << e.what() << '\n';
    return kExitConsistency;
  } catch (const SolverError& e) {
    std::cerr << "solver error: " << e.what() << '\n';
    return kExitSolver;
  } catch (const DimensionError& e) {
    std::cerr << "input error: " << e.what() << '\n';
    return kExitInput;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << '\n';
    return kExitSolver;
  }
  return kExitInput;
}
