#pragma once

#include "mixreg/distributions.hpp"
#include "mixreg/errors.hpp"
#include "mixreg/model.hpp"

#include <charconv>
#include <cstdio>
#include <cmath>
#include <fstream>
#include <istream>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

namespace mixreg {

namespace detail {

inline std::string_view trim(std::string_view s)
{
  const auto first = s.find_first_not_of(" \t\r\"");
  if (first == std::string_view::npos) {
    return {};
  }
  const auto last = s.find_last_not_of(" \t\r\"");
  return s.substr(first, last - first + 1);
}

inline std::vector<std::string_view> split_fields(std::string_view line)
{
  char sep = ',';
  if (line.find(',') == std::string_view::npos) {
    sep = line.find(';') != std::string_view::npos ? ';' : '\t';
  }
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const auto pos = line.find(sep, start);
    out.push_back(trim(line.substr(start, pos - start)));
    if (pos == std::string_view::npos) {
      break;
    }
    start = pos + 1;
  }
  if (sep == '\t' && out.size() == 1) {
    // whitespace separated
    out.clear();
    std::size_t i = 0;
    while (i < line.size()) {
      while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) {
        ++i;
      }
      std::size_t j = i;
      while (j < line.size() && line[j] != ' ' && line[j] != '\t') {
        ++j;
      }
      if (j > i) {
        out.push_back(trim(line.substr(i, j - i)));
      }
      i = j;
    }
  }
  return out;
}

/// Parses the whole field as a double; nan and inf spellings parse and are rejected by callers.
inline std::optional<double> parse_number(std::string_view s)
{
  if (s.empty()) {
    return std::nullopt;
  }
  if (s.front() == '+') {
    s.remove_prefix(1);
  }
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    return std::nullopt;
  }
  return v;
}

} // namespace detail

/// Reads (x, y) pairs from CSV text. The first two columns are used. A first
/// row that does not parse as numbers is treated as a header. Blank lines and
/// lines starting with '#' are skipped. Non-finite or malformed data rows are
/// rejected with the 0-based data row index.
inline std::vector<Observation> read_csv(std::istream& in)
{
  std::vector<Observation> rows;
  std::string line;
  bool first = true;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string_view view = detail::trim(line);
    if (view.empty() || view.front() == '#') {
      continue;
    }
    const auto fields = detail::split_fields(view);
    std::optional<double> x;
    std::optional<double> y;
    if (fields.size() >= 2) {
      x = detail::parse_number(fields[0]);
      y = detail::parse_number(fields[1]);
    }
    if (first) {
      first = false;
      if (!x || !y) {
        continue;
      }
    }
    const std::size_t row = rows.size();
    if (!x || !y) {
      throw IngestionError("malformed data row " + std::to_string(row) + " (line " +
                             std::to_string(line_no) + ")",
                           row);
    }
    if (!std::isfinite(*x) || !std::isfinite(*y)) {
      throw IngestionError("non-finite value in row " + std::to_string(row) + " (line " +
                             std::to_string(line_no) + ")",
                           row);
    }
    rows.push_back({ *x, *y });
  }
  if (rows.empty()) {
    throw IngestionError("no data rows found");
  }
  return rows;
}

inline std::vector<Observation> read_csv_file(const std::string& path)
{
  std::ifstream in(path);
  if (!in) {
    throw IngestionError("cannot open input file '" + path + "'");
  }
  return read_csv(in);
}

/// Reads a two-column (t, F(t)) table for a tabulated known law.
inline TabulatedCdfError read_cdf_table(const std::string& path)
{
  const auto rows = read_csv_file(path);
  TabulatedCdfError tab;
  for (const Observation& o : rows) {
    tab.t.push_back(o.x);
    tab.cdf.push_back(o.y);
  }
  return tab;
}

/// Parses normal:<sigma> | gamma:<shape>:<rate>:<var> | exp:<var> | table:<path>.
/// A space may stand in for the first colon ("normal 1").
inline ErrorDistribution parse_known_spec(std::string_view spec)
{
  std::string s(detail::trim(spec));
  const auto sep = s.find_first_of(": ");
  const std::string kind = s.substr(0, sep);
  const std::string rest = sep == std::string::npos ? std::string() : s.substr(sep + 1);
  std::vector<double> args;
  if (kind != "table") {
    std::stringstream ss(rest);
    std::string item;
    while (std::getline(ss, item, ':')) {
      const auto v = detail::parse_number(detail::trim(item));
      if (!v || !std::isfinite(*v)) {
        throw ConfigError("known-spec '" + s + "': bad number '" + item + "'");
      }
      args.push_back(*v);
    }
  }
  if (kind == "normal" && args.size() == 1) {
    return NormalError{ args[0] };
  }
  if (kind == "gamma" && args.size() == 3) {
    return ShiftedGammaError{ args[0], args[1], args[2] };
  }
  if (kind == "exp" && args.size() == 1) {
    return ShiftedExponentialError{ args[0] };
  }
  if (kind == "table" && !rest.empty()) {
    try {
      return read_cdf_table(rest);
    } catch (const IngestionError& e) {
      throw ConfigError("known-spec table '" + rest + "': " + e.what());
    }
  }
  throw ConfigError("known-spec '" + s +
                    "' not understood; expected normal:<sigma>, gamma:<shape>:<rate>:<var>, "
                    "exp:<var> or table:<path>");
}

/// Parses "a,b" into (alpha*, beta*).
inline std::pair<double, double> parse_transform(std::string_view spec)
{
  const auto comma = spec.find(',');
  if (comma == std::string_view::npos) {
    throw ConfigError("transform must be given as a,b");
  }
  const auto a = detail::parse_number(detail::trim(spec.substr(0, comma)));
  const auto b = detail::parse_number(detail::trim(spec.substr(comma + 1)));
  if (!a || !b || !std::isfinite(*a) || !std::isfinite(*b)) {
    throw ConfigError("transform must be two finite numbers a,b");
  }
  return { *a, *b };
}

/// Tab-separated table with a header row; numbers printed with 17 significant digits.
class TsvWriter
{
public:
  TsvWriter(std::ostream& os, const std::vector<std::string>& header)
    : os_(os)
    , columns_(header.size())
  {
    for (std::size_t k = 0; k < header.size(); ++k) {
      os_ << (k ? "\t" : "") << header[k];
    }
    os_ << '\n';
  }

  void row(const std::vector<double>& values)
  {
    if (values.size() != columns_) {
      throw ConfigError("TSV row width does not match header");
    }
    char buf[40];
    for (std::size_t k = 0; k < values.size(); ++k) {
      std::snprintf(buf, sizeof buf, "%.17g", values[k]);
      os_ << (k ? "\t" : "") << buf;
    }
    os_ << '\n';
  }

private:
  std::ostream& os_;
  std::size_t columns_;
};

} // namespace mixreg
