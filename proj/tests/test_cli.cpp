#include <gtest/gtest.h>

#include <sys/wait.h>
#include <unistd.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>

#include "oracles.hpp"
#include "robust_bayes/io.hpp"
#include "robust_bayes/scenarios.hpp"
#include "test_support.hpp"

namespace fs = std::filesystem;
using namespace robust_bayes;

namespace {

const std::string kCli = ROBUST_BAYES_CLI;
const std::string kData = ROBUST_BAYES_DATA_DIR;
const std::string kSource = ROBUST_BAYES_SOURCE_DIR;

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
    dir_ = fs::temp_directory_path() / ("robust_bayes_cli_" + std::string(info->name()) + "_" +
                                        std::to_string(::getpid()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  fs::path path(const std::string& name) const { return dir_ / name; }

  fs::path file(const std::string& name, const std::string& content) const {
    std::ofstream(path(name), std::ios::binary) << content;
    return path(name);
  }

  // Runs the CLI with stdout/stderr captured into err_.
  int run(const std::string& args) {
    const auto log = path("cli.log");
    const std::string cmd = "\"" + kCli + "\" " + args + " > \"" + log.string() + "\" 2>&1";
    const int status = std::system(cmd.c_str());
    err_ = read(log);
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  }

  static std::string read(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
  }

  // value column of a tidy CSV keyed by "prior/act/measure"
  static std::map<std::string, std::string> tidy(const fs::path& p) {
    std::istringstream in(read(p));
    const auto t = io::read_csv(in, p.string());
    std::map<std::string, std::string> out;
    for (const auto& r : t.rows) out[r.fields[0] + "/" + r.fields[1] + "/" + r.fields[2]] = r.fields[3];
    return out;
  }

  fs::path dir_;
  std::string err_;
};

const char* kToyUtilities = "act,s1,s2\na,1,0\nb,0,1\n";
const char* kToyPriors = "prior,s1,s2\np0,0.7,0.3\n";

std::string planted_monthly_csv(const oracle::PlantedPanel& planted) {
  const auto& p = planted.panel;
  std::string out = "date";
  for (const auto& a : p.assets) out += "," + a;
  out += ",market_vol\n";
  for (std::size_t t = 0; t < p.num_months(); ++t) {
    out += p.months[t];
    for (std::size_t k = 0; k < p.assets.size(); ++k) out += "," + io::format_exact(p.returns(t, k));
    out += "," + io::format_exact((*p.volatility)[t]) + "\n";
  }
  return out;
}

bool have_jsonschema() { return std::system("python3 -c 'import jsonschema' > /dev/null 2>&1") == 0; }

}  // namespace

TEST_F(CliTest, HelpExitsZero) { EXPECT_EQ(run("--help"), 0); }

TEST_F(CliTest, UnknownSubcommandIsInputError) { EXPECT_EQ(run("frobnicate"), 2); }

TEST_F(CliTest, AnalyzeToy) {
  const auto u = file("u.csv", kToyUtilities), p = file("p.csv", kToyPriors);
  ASSERT_EQ(run("analyze -u " + u.string() + " -p " + p.string() + " -o " + dir_.string()), 0) << err_;
  const auto rows = tidy(path("stability.csv"));
  const double rob = std::stod(rows.at("p0/a/rob"));
  EXPECT_LE(rob, 0.2);
  EXPECT_GE(rob, 0.2 - 1e-6);
  EXPECT_NEAR(std::stod(rows.at("p0/b/con")), 0.2, 1e-9);
  EXPECT_EQ(rows.at("p0/b/rob"), "NOT_BAYES");
  EXPECT_EQ(rows.at("p0/a/is_bayes"), "1");
  // Sentinels are written quoted.
  EXPECT_NE(read(path("stability.csv")).find("p0,b,rob,\"NOT_BAYES\""), std::string::npos);
}

TEST_F(CliTest, AnalyzeTable3DefaultCatalog) {
  ASSERT_EQ(run("analyze -u " + kData + "/utilities_table3.csv -o " + dir_.string()), 0) << err_;
  const auto rows = tidy(path("stability.csv"));
  EXPECT_EQ(rows.size(), 6u * 8u * 4u);
  for (const std::string a : {"a1", "a2", "a3", "a4", "a5", "a6"}) {
    EXPECT_EQ(rows.at("uniform/" + a + "/is_bayes"), a == "a3" ? "1" : "0") << a;
    if (a != "a3") {
      EXPECT_GT(std::stod(rows.at("uniform/" + a + "/con")), 0.0);
    }
  }
  EXPECT_GT(std::stod(rows.at("uniform/a3/rob")), 0.0);
  EXPECT_NEAR(std::stod(rows.at("uniform/a3/expected_utility")), 0.0065, 1e-12);
}

TEST_F(CliTest, AnalyzeInputErrors) {
  const auto bad = file("bad.csv", "act,s1,s2\na,1,0\nb,0\n");
  EXPECT_EQ(run("analyze -u " + bad.string() + " -o " + dir_.string()), 2);
  EXPECT_NE(err_.find(":3:"), std::string::npos) << err_;

  const auto u = file("u.csv", kToyUtilities);
  const auto empty = file("empty.csv", "");
  EXPECT_EQ(run("analyze -u " + u.string() + " -p " + empty.string() + " -o " + dir_.string()), 2);
  const auto header_only = file("header.csv", "prior,s1,s2\n");
  EXPECT_EQ(run("analyze -u " + u.string() + " -p " + header_only.string() + " -o " + dir_.string()), 2);
  EXPECT_EQ(run("analyze -u " + path("missing.csv").string()), 2);
  EXPECT_EQ(run("analyze"), 2);
  EXPECT_EQ(run("analyze -u " + u.string() + " -p " + file("p.csv", kToyPriors).string() + " --tol 0"), 2);
  EXPECT_FALSE(fs::exists(path("stability.csv")));
}

TEST_F(CliTest, DimensionMismatchIsConsistencyError) {
  const auto u = file("u.csv", kToyUtilities);
  const auto p3 = file("p3.csv", "prior,s1,s2,s3\np,0.2,0.3,0.5\n");
  EXPECT_EQ(run("analyze -u " + u.string() + " -p " + p3.string() + " -o " + dir_.string()), 3);
  const auto renamed = file("pr.csv", "prior,x1,x2\np,0.5,0.5\n");
  EXPECT_EQ(run("analyze -u " + u.string() + " -p " + renamed.string() + " -o " + dir_.string()), 3);
  // Table 3 against a two-state prior file
  EXPECT_EQ(run("baselines -u " + kData + "/utilities_table3.csv -p " + file("p.csv", kToyPriors).string()), 3);
}

TEST_F(CliTest, PathArgumentErrors) {
  const auto u = file("u.csv", kToyUtilities), p = file("p.csv", kToyPriors);
  const std::string base = "path -u " + u.string() + " -p " + p.string() + " -o " + dir_.string();
  EXPECT_EQ(run(base + " --lambda-max -1"), 2);
  EXPECT_EQ(run(base + " --lambda-max 0"), 2);
  EXPECT_EQ(run(base + " --grid 0"), 2);
  EXPECT_EQ(run(base + " --cost-mode magic"), 2);
  EXPECT_EQ(run(base + " --cost-mode file"), 2);
  EXPECT_EQ(run(base + " --cost-mode file --costs " + file("c.csv", "act,cost\na,1\nzz,2\n").string()), 3);
}

TEST_F(CliTest, BaselinesArgumentErrors) {
  const auto u = file("u.csv", kToyUtilities), p = file("p.csv", kToyPriors);
  const std::string base = "baselines -u " + u.string() + " -p " + p.string() + " -o " + dir_.string();
  EXPECT_EQ(run(base + " --epsilon 1.5"), 2);
  EXPECT_EQ(run(base + " --epsilon -0.1"), 2);
  EXPECT_EQ(run(base + " --mu 2"), 2);
  EXPECT_EQ(run(base + " --eta -1"), 2);
  EXPECT_EQ(run(base + " --prior nope"), 2);
}

TEST_F(CliTest, BaselinesAtZeroEpsilon) {
  ASSERT_EQ(run("baselines -u " + kData + "/utilities_table3.csv --epsilon 0 -o " + dir_.string()), 0) << err_;
  const auto rows = tidy(path("baselines.csv"));
  for (const auto& [key, value] : rows) {
    if (key.size() < 10 || key.substr(key.size() - 10) != "/gamma_min") continue;
    const auto stem = key.substr(0, key.size() - 10);
    EXPECT_EQ(value, rows.at(stem + "/expected_utility")) << key;
    EXPECT_EQ(rows.at(stem + "/gamma_max"), value) << key;
  }
  const auto choice = read(path("baselines_choice.csv"));
  EXPECT_NE(choice.find("uniform,bayes,a3,"), std::string::npos);
}

TEST_F(CliTest, PathEngineeredCrossingFromCostsFile) {
  // a is Bayes (score 1 - c~ lambda), b is the only non-Bayes act (-1 - 0.2 lambda):
  // crossing at 2 / 0.8 = 2.5.
  const auto u = file("u.csv", kToyUtilities), p = file("p.csv", kToyPriors);
  const auto c = file("c.csv", "act,cost\nb,0.2\na,1.0\n");
  ASSERT_EQ(run("path -u " + u.string() + " -p " + p.string() + " --cost-mode file --costs " + c.string() +
                " --grid 0.0001 -o " + dir_.string()),
            0)
      << err_;
  std::istringstream in(read(path("path_breakpoints.csv")));
  const auto t = io::read_csv(in, "bps");
  ASSERT_EQ(t.rows.size(), 1u);
  EXPECT_NEAR(std::stod(t.rows[0].fields[1]), 2.5, 1e-9);
  EXPECT_EQ(t.rows[0].fields[2], "a");
  EXPECT_EQ(t.rows[0].fields[3], "b");

  // The grid switches exactly once, at the breakpoint.
  std::istringstream gin(read(path("path_grid.csv")));
  const auto g = io::read_csv(gin, "grid");
  for (const auto& r : g.rows) {
    const double lam = std::stod(r.fields[1]);
    if (std::abs(lam - 2.5) < 1e-9) continue;
    EXPECT_EQ(r.fields[2], lam < 2.5 ? "a" : "b") << lam;
  }
}

TEST_F(CliTest, PathEqualCostsHasNoBreakpoints) {
  const auto c = file("c.csv", "act,cost\na1,1\na2,1\na3,1\na4,1\na5,1\na6,1\n");
  ASSERT_EQ(run("path -u " + kData + "/utilities_table3.csv --cost-mode file --costs " + c.string() + " -o " +
                dir_.string()),
            0)
      << err_;
  EXPECT_EQ(read(path("path_breakpoints.csv")), "prior,lambda,from,to\n");
}

TEST_F(CliTest, PathTable3VarianceCostsIsMonotone) {
  ASSERT_EQ(run("path -u " + kData + "/utilities_table3.csv -o " + dir_.string()), 0) << err_;
  std::istringstream in(read(path("path_breakpoints.csv")));
  const auto t = io::read_csv(in, "bps");
  std::map<std::string, double> last;
  for (const auto& r : t.rows) {
    const double lam = std::stod(r.fields[1]);
    EXPECT_GT(lam, 0.0);
    EXPECT_LT(lam, 3.0);
    if (last.count(r.fields[0])) {
      EXPECT_GT(lam, last[r.fields[0]]);
    }
    last[r.fields[0]] = lam;
  }
  std::istringstream gin(read(path("path_grid.csv")));
  EXPECT_EQ(io::read_csv(gin, "grid").rows.size(), 8u * 301u);
}

TEST_F(CliTest, JsonReportsMatchSchemas) {
  if (!have_jsonschema()) GTEST_SKIP() << "python3 jsonschema not available";
  ASSERT_EQ(run("analyze -u " + kData + "/utilities_table3.csv -o " + dir_.string()), 0) << err_;
  ASSERT_EQ(run("path -u " + kData + "/utilities_table3.csv -o " + dir_.string()), 0) << err_;
  const auto d = test_support::dominated();
  const auto u = file("dom.csv", io::utilities_csv(d));
  const auto pr = file("p.csv", kToyPriors);
  ASSERT_EQ(run("analyze -u " + u.string() + " -p " + pr.string() + " -o " + (dir_ / "dom").string()), 0) << err_;
  ASSERT_EQ(run("path -u " + u.string() + " -p " + pr.string() + " -o " + (dir_ / "dom").string()), 0) << err_;
  const std::string validate = "python3 \"" + kSource + "/tools/validate_json.py\" ";
  for (const auto& [schema, doc] : {std::pair{"stability_report", dir_ / "stability.json"},
                                    std::pair{"path_report", dir_ / "path.json"},
                                    std::pair{"stability_report", dir_ / "dom" / "stability.json"},
                                    std::pair{"path_report", dir_ / "dom" / "path.json"}}) {
    const std::string cmd = validate + "\"" + kSource + "/schemas/" + schema + ".schema.json\" \"" + doc.string() + "\"";
    EXPECT_EQ(std::system(cmd.c_str()), 0) << cmd;
  }
  // The dominated act carries a certificate.
  EXPECT_NE(read(dir_ / "dom" / "stability.json").find("\"min_margin\""), std::string::npos);
}

TEST_F(CliTest, ScenariosByteIdenticalAndRoundTrip) {
  const auto planted = oracle::planted_panel(21);
  const auto m = file("monthly.csv", planted_monthly_csv(planted));
  const std::string base = "scenarios -m " + m.string() + " -w " + kData + "/weights_table2.csv --seed 42";
  ASSERT_EQ(run(base + " -o " + (dir_ / "r1").string()), 0) << err_;
  ASSERT_EQ(run(base + " -o " + (dir_ / "r2").string()), 0) << err_;
  EXPECT_EQ(read(dir_ / "r1" / "utilities.csv"), read(dir_ / "r2" / "utilities.csv"));
  EXPECT_EQ(read(dir_ / "r1" / "regimes.csv"), read(dir_ / "r2" / "regimes.csv"));

  // Parsing the written file gives exactly the in-process problem.
  const auto panel = io::parse_monthly(io::read_csv_file(m));
  const auto book = io::parse_weights(io::read_csv_file(kData + "/weights_table2.csv"));
  const auto expected = build_scenarios(panel, book, std::nullopt, {}).problem;
  EXPECT_EQ(io::parse_utilities(io::read_csv_file(dir_ / "r1" / "utilities.csv")), expected);
  EXPECT_EQ(expected.states(), (std::vector<std::string>{"Expansion", "Recovery", "Stagnation", "Recession"}));

  // The scenarios output feeds straight into analyze with the default catalog.
  EXPECT_EQ(run("analyze -u " + (dir_ / "r1" / "utilities.csv").string() + " -o " + (dir_ / "r1").string()), 0)
      << err_;
}

TEST_F(CliTest, ScenariosSingleRegimeIsOverallMean) {
  const auto planted = oracle::planted_panel(22);
  const auto m = file("monthly.csv", planted_monthly_csv(planted));
  ASSERT_EQ(run("scenarios -m " + m.string() + " -w " + kData + "/weights_table2.csv --k 1 -o " + dir_.string()), 0)
      << err_;
  const auto u = io::parse_utilities(io::read_csv_file(path("utilities.csv")));
  ASSERT_EQ(u.num_states(), 1u);
  const auto panel = io::parse_monthly(io::read_csv_file(m));
  const auto book = io::parse_weights(io::read_csv_file(kData + "/weights_table2.csv"));
  const auto r = portfolio_returns(panel, book);
  for (std::size_t a = 0; a < u.num_acts(); ++a) {
    double mean = 0.0;
    for (std::size_t t = 0; t < r.rows(); ++t) mean += r(t, a);
    EXPECT_NEAR(u.utility(a, 0), mean / static_cast<double>(r.rows()), 1e-12);
  }
}

TEST_F(CliTest, ScenariosMissingMonthsAreListed) {
  const auto m = file("monthly.csv",
                      "date,Equity,Bonds,Commodities,RealEstate,IntlEquity,market_vol\n"
                      "2020-01,0.1,0.1,0.1,0.1,0.1,0.01\n"
                      "2020-02,,0.1,0.1,0.1,0.1,0.01\n"
                      "2020-03,0.1,0.1,NA,0.1,0.1,0.01\n");
  EXPECT_EQ(run("scenarios -m " + m.string() + " -w " + kData + "/weights_table2.csv -o " + dir_.string()), 2);
  EXPECT_NE(err_.find("2020-02"), std::string::npos) << err_;
  EXPECT_NE(err_.find("2020-03"), std::string::npos) << err_;
}

TEST_F(CliTest, ScenariosDailyVolatility) {
  // Six months, two calm and four volatile, each with 5 trading days.
  std::string monthly = "date,Equity,Bonds,Commodities,RealEstate,IntlEquity\n";
  std::string daily = "date,Equity\n";
  for (int mth = 1; mth <= 6; ++mth) {
    char label[16];
    std::snprintf(label, sizeof label, "2021-%02d", mth);
    monthly += std::string(label) + (mth % 2 ? ",0.02" : ",-0.02") + ",0.001,0.002,0.003,0.004\n";
    const double amp = mth <= 2 ? 0.001 : 0.02;
    for (int d = 1; d <= 5; ++d)
      daily += std::string(label) + "-0" + std::to_string(d) + "," + io::format_exact(d % 2 ? amp : -amp) + "\n";
  }
  const auto m = file("monthly.csv", monthly), d = file("daily.csv", daily);
  EXPECT_EQ(run("scenarios -m " + m.string() + " -d " + d.string() + " -w " + kData + "/weights_table2.csv --k 2 -o " +
                dir_.string()),
            0)
      << err_;
  // Without daily data or a market_vol column there is no volatility feature.
  EXPECT_EQ(run("scenarios -m " + m.string() + " -w " + kData + "/weights_table2.csv -o " + dir_.string()), 2);
  EXPECT_EQ(run("scenarios -m " + m.string() + " -w " + kData + "/weights_table2.csv --market Gold -o " +
                dir_.string()),
            3);
}
