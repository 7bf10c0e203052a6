#pragma once

// CSV ingestion and atomic output for the file formats used by the CLI:
//
//   utilities.csv  act,<state1>,...,<stateM>
//   priors.csv     prior,<state1>,...,<stateM>
//   costs.csv      act,cost
//   monthly.csv    date,<ASSET1>,...,<ASSETK>[,market_vol]   (date YYYY-MM)
//   daily.csv      date,<MARKET>                             (date YYYY-MM-DD)
//   weights.csv    portfolio,<ASSET1>,...,<ASSETK>
//
// Malformed input raises InputError with a "source:line:" prefix.

#include <cctype>
#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <istream>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "robust_bayes/common.hpp"
#include "robust_bayes/decision.hpp"
#include "robust_bayes/scenarios.hpp"

namespace robust_bayes::io {

struct CsvRow {
  std::size_t line = 0;
  std::vector<std::string> fields;
};

struct CsvTable {
  std::string source;
  std::size_t header_line = 0;
  std::vector<std::string> header;
  std::vector<CsvRow> rows;
};

[[noreturn]] inline void fail(const std::string& source, std::size_t line, const std::string& what) {
  throw InputError(source + ":" + std::to_string(line) + ": " + what);
}

inline std::string trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

inline std::vector<std::string> split_csv_line(std::string_view line, const std::string& source, std::size_t lineno) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false, was_quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char ch = line[i];
    if (quoted) {
      if (ch == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cur += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cur += ch;
      }
    } else if (ch == '"') {
      if (!trim(cur).empty()) fail(source, lineno, "unexpected quote inside field");
      cur.clear();
      quoted = was_quoted = true;
    } else if (ch == ',') {
      out.push_back(was_quoted ? cur : trim(cur));
      cur.clear();
      was_quoted = false;
    } else {
      cur += ch;
    }
  }
  if (quoted) fail(source, lineno, "unterminated quoted field");
  out.push_back(was_quoted ? cur : trim(cur));
  return out;
}

/// Reads a rectangular CSV with a header. Blank lines are skipped; every data
/// row must have as many fields as the header.
inline CsvTable read_csv(std::istream& in, const std::string& source) {
  CsvTable table;
  table.source = source;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (lineno == 1 && line.rfind("\xEF\xBB\xBF", 0) == 0) line.erase(0, 3);
    if (trim(line).empty()) continue;
    auto fields = split_csv_line(line, source, lineno);
    if (table.header.empty()) {
      table.header = std::move(fields);
      table.header_line = lineno;
      continue;
    }
    if (fields.size() != table.header.size())
      fail(source, lineno,
           "expected " + std::to_string(table.header.size()) + " fields, found " + std::to_string(fields.size()));
    table.rows.push_back({lineno, std::move(fields)});
  }
  if (table.header.empty()) throw InputError(source + ": empty file (missing header)");
  return table;
}

inline CsvTable read_csv_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError(path.string() + ": cannot open file");
  return read_csv(in, path.string());
}

inline double parse_number(const std::string& text, const std::string& source, std::size_t line,
                           const std::string& column) {
  double v = 0.0;
  std::string_view s = text;
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(v))
    fail(source, line, "column '" + column + "': '" + text + "' is not a finite number");
  return v;
}

inline void expect_first_column(const CsvTable& t, std::string_view name) {
  if (t.header.front() != name)
    fail(t.source, t.header_line, "first header column must be '" + std::string(name) + "', found '" + t.header.front() + "'");
}

inline void check_unique(const std::vector<std::string>& names, const CsvTable& t, const std::string& what) {
  std::set<std::string> seen;
  for (const auto& n : names) {
    if (n.empty()) fail(t.source, t.header_line, "empty " + what + " name");
    if (!seen.insert(n).second) fail(t.source, t.header_line, "duplicate " + what + " '" + n + "'");
  }
}

// Rows of label + numbers, shared by utilities/priors/weights.
struct LabeledMatrix {
  std::vector<std::string> columns;
  std::vector<std::string> labels;
  Matrix values;
  std::vector<std::size_t> lines;
};

inline LabeledMatrix read_labeled_matrix(const CsvTable& t, std::string_view first, const std::string& row_kind) {
  expect_first_column(t, first);
  LabeledMatrix out;
  out.columns.assign(t.header.begin() + 1, t.header.end());
  if (out.columns.empty()) fail(t.source, t.header_line, "no value columns");
  check_unique(out.columns, t, "column");
  if (t.rows.empty()) throw InputError(t.source + ": no " + row_kind + " rows");
  out.values = Matrix(0, out.columns.size());
  std::set<std::string> seen;
  for (const auto& r : t.rows) {
    const std::string& label = r.fields.front();
    if (label.empty()) fail(t.source, r.line, "empty " + row_kind + " name");
    if (!seen.insert(label).second) fail(t.source, r.line, "duplicate " + row_kind + " '" + label + "'");
    std::vector<double> values;
    for (std::size_t c = 1; c < r.fields.size(); ++c)
      values.push_back(parse_number(r.fields[c], t.source, r.line, t.header[c]));
    out.labels.push_back(label);
    out.values.append_row(values);
    out.lines.push_back(r.line);
  }
  return out;
}

inline DecisionProblem parse_utilities(const CsvTable& t) {
  auto m = read_labeled_matrix(t, "act", "act");
  return DecisionProblem(std::move(m.labels), std::move(m.columns), std::move(m.values));
}

struct PriorFile {
  std::vector<std::string> states;
  std::vector<Prior> priors;
};

inline PriorFile parse_priors(const CsvTable& t) {
  auto m = read_labeled_matrix(t, "prior", "prior");
  PriorFile out{m.columns, {}};
  for (std::size_t i = 0; i < m.labels.size(); ++i) {
    const auto row = m.values.row(i);
    try {
      out.priors.push_back(Prior::make(m.labels[i], std::vector<double>(row.begin(), row.end())));
    } catch (const InputError& e) {
      fail(t.source, m.lines[i], e.what());
    }
  }
  return out;
}

struct CostFile {
  std::vector<std::string> acts;
  std::vector<double> costs;
  std::vector<std::size_t> lines;
};

inline CostFile parse_costs(const CsvTable& t) {
  if (t.header.size() != 2 || t.header[0] != "act" || t.header[1] != "cost")
    fail(t.source, t.header_line, "header must be 'act,cost'");
  auto m = read_labeled_matrix(t, "act", "act");
  CostFile out;
  for (std::size_t i = 0; i < m.labels.size(); ++i) {
    const double c = m.values(i, 0);
    if (c < 0.0) fail(t.source, m.lines[i], "cost must be >= 0");
    out.acts.push_back(m.labels[i]);
    out.costs.push_back(c);
    out.lines.push_back(m.lines[i]);
  }
  return out;
}

inline bool is_digits(std::string_view s) {
  for (char c : s)
    if (!std::isdigit(static_cast<unsigned char>(c))) return false;
  return !s.empty();
}

inline bool valid_month(std::string_view s) {
  if (s.size() != 7 || s[4] != '-' || !is_digits(s.substr(0, 4)) || !is_digits(s.substr(5, 2))) return false;
  const int mm = (s[5] - '0') * 10 + (s[6] - '0');
  return mm >= 1 && mm <= 12;
}

inline bool valid_day(std::string_view s) {
  if (s.size() != 10 || s[7] != '-' || !valid_month(s.substr(0, 7)) || !is_digits(s.substr(8, 2))) return false;
  const int dd = (s[8] - '0') * 10 + (s[9] - '0');
  return dd >= 1 && dd <= 31;
}

inline bool is_missing(const std::string& field) {
  return field.empty() || field == "NA" || field == "NaN" || field == "nan" || field == "null";
}

inline constexpr std::string_view kVolatilityColumn = "market_vol";

/// Months with missing asset returns are collected and reported together.
inline ReturnPanel parse_monthly(const CsvTable& t) {
  expect_first_column(t, "date");
  ReturnPanel panel;
  std::vector<std::string> cols(t.header.begin() + 1, t.header.end());
  const bool has_vol = !cols.empty() && cols.back() == kVolatilityColumn;
  if (has_vol) cols.pop_back();
  if (cols.empty()) fail(t.source, t.header_line, "no asset columns");
  check_unique(cols, t, "asset");
  panel.assets = cols;
  panel.returns = Matrix(0, cols.size());
  if (has_vol) panel.volatility.emplace();
  if (t.rows.empty()) throw InputError(t.source + ": no monthly rows");

  std::vector<std::string> missing;
  for (const auto& r : t.rows) {
    const std::string& date = r.fields[0];
    if (!valid_month(date)) fail(t.source, r.line, "date '" + date + "' is not YYYY-MM");
    if (!panel.months.empty() && !(panel.months.back() < date))
      fail(t.source, r.line, "month " + date + " is not after " + panel.months.back());
    std::vector<double> row;
    bool gap = false;
    for (std::size_t c = 1; c <= cols.size(); ++c) {
      if (is_missing(r.fields[c])) {
        gap = true;
        row.push_back(0.0);
      } else {
        row.push_back(parse_number(r.fields[c], t.source, r.line, t.header[c]));
      }
    }
    if (gap) missing.push_back(date);
    if (has_vol) {
      const auto& f = r.fields.back();
      if (is_missing(f)) fail(t.source, r.line, "missing market_vol");
      const double v = parse_number(f, t.source, r.line, std::string(kVolatilityColumn));
      if (v < 0.0) fail(t.source, r.line, "market_vol must be >= 0");
      panel.volatility->push_back(v);
    }
    panel.months.push_back(date);
    panel.returns.append_row(row);
  }
  if (!missing.empty()) {
    std::string list;
    for (const auto& m : missing) list += (list.empty() ? "" : ", ") + m;
    throw InputError(t.source + ": missing asset returns in months: " + list);
  }
  return panel;
}

inline DailySeries parse_daily(const CsvTable& t) {
  expect_first_column(t, "date");
  if (t.header.size() != 2) fail(t.source, t.header_line, "header must be 'date,<MARKET>'");
  DailySeries d;
  for (const auto& r : t.rows) {
    if (!valid_day(r.fields[0])) fail(t.source, r.line, "date '" + r.fields[0] + "' is not YYYY-MM-DD");
    d.dates.push_back(r.fields[0]);
    d.values.push_back(parse_number(r.fields[1], t.source, r.line, t.header[1]));
  }
  return d;
}

inline PortfolioBook parse_weights(const CsvTable& t) {
  auto m = read_labeled_matrix(t, "portfolio", "portfolio");
  PortfolioBook book{m.labels, m.columns, m.values};
  for (std::size_t i = 0; i < book.portfolios.size(); ++i) {
    double total = 0.0;
    for (double w : book.weights.row(i)) {
      if (w < 0.0) fail(t.source, m.lines[i], "negative weight");
      total += w;
    }
    if (std::abs(total - 1.0) > 1e-9) fail(t.source, m.lines[i], "weights sum to " + std::to_string(total) + ", expected 1");
  }
  return book;
}

// ---------------------------------------------------------------------------
// Output

/// 9 significant digits, the precision of every report.
inline std::string format_number(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

/// Shortest representation that round-trips exactly (used for files that are
/// read back as inputs).
inline std::string format_exact(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

inline std::string csv_field(std::string_view s) {
  if (s.find_first_of(",\"\n\r") == std::string_view::npos) return std::string(s);
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

inline std::string quoted(std::string_view s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

/// Writes to a temporary sibling and renames it into place.
inline void write_atomic(const std::filesystem::path& path, const std::string& content) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  const auto tmp = std::filesystem::path(path.string() + ".tmp");
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw InputError(tmp.string() + ": cannot open for writing");
    out << content;
    if (!out.flush()) throw InputError(tmp.string() + ": write failed");
  }
  std::filesystem::rename(tmp, path);
}

/// utilities.csv text; exact round-trip through parse_utilities.
inline std::string utilities_csv(const DecisionProblem& p) {
  std::ostringstream os;
  os << "act";
  for (const auto& s : p.states()) os << ',' << csv_field(s);
  os << '\n';
  for (std::size_t a = 0; a < p.num_acts(); ++a) {
    os << csv_field(p.acts()[a]);
    for (double v : p.row(a)) os << ',' << format_exact(v);
    os << '\n';
  }
  return os.str();
}

inline std::string priors_csv(const std::vector<std::string>& states, const std::vector<Prior>& priors) {
  std::ostringstream os;
  os << "prior";
  for (const auto& s : states) os << ',' << csv_field(s);
  os << '\n';
  for (const auto& p : priors) {
    os << csv_field(p.name);
    for (double v : p.mass) os << ',' << format_exact(v);
    os << '\n';
  }
  return os.str();
}

}  // namespace robust_bayes::io
