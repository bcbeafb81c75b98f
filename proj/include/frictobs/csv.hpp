#pragma once

// Numeric CSV tables with a fixed header. Values are written in the shortest
// representation that parses back to the same double.

#include <charconv>
#include <cstddef>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "frictobs/observer.hpp"
#include "frictobs/plant.hpp"

namespace frictobs::csv {

inline const std::vector<std::string> kMeasuredHeader{"t", "x", "u"};
inline const std::vector<std::string> kSimHeader{"t", "x", "v", "f", "u"};
inline const std::vector<std::string> kEstimatesHeader{"t", "w2_tilde", "w3_tilde", "phi", "e_obs"};

/// Schema or parse failure. `row` is the 1-based line number in the file
/// (the header is line 1); `column` is 1-based, 0 when not applicable.
class CsvError : public std::runtime_error {
 public:
  CsvError(const std::string& what, std::size_t row, std::size_t column = 0)
      : std::runtime_error(what), row_(row), column_(column) {}
  std::size_t row() const { return row_; }
  std::size_t column() const { return column_; }

 private:
  std::size_t row_;
  std::size_t column_;
};

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;
};

inline std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

inline bool parse_double(std::string_view s, double& out) {
  if (s.empty()) return false;
  if (s.front() == '+') s.remove_prefix(1);
  const auto res = std::from_chars(s.data(), s.data() + s.size(), out);
  return res.ec == std::errc() && res.ptr == s.data() + s.size();
}

inline std::vector<std::string_view> split(std::string_view line, char sep = ',') {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = line.find(sep, start);
    if (pos == std::string_view::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
}

inline void write(std::ostream& os, const Table& table) {
  for (std::size_t i = 0; i < table.header.size(); ++i) {
    os << (i ? "," : "") << table.header[i];
  }
  os << '\n';
  for (const auto& row : table.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) os << (i ? "," : "") << format_double(row[i]);
    os << '\n';
  }
}

inline Table read(std::istream& is, const std::vector<std::string>& expected) {
  Table table;
  table.header = expected;
  std::string line;
  if (!std::getline(is, line)) throw CsvError("missing header, expected " + std::to_string(expected.size()) + " columns", 1);
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const auto names = split(line);
  bool ok = names.size() == expected.size();
  for (std::size_t i = 0; ok && i < names.size(); ++i) ok = names[i] == expected[i];
  if (!ok) {
    std::string want;
    for (std::size_t i = 0; i < expected.size(); ++i) want += (i ? "," : "") + expected[i];
    throw CsvError("header mismatch: expected '" + want + "', got '" + line + "'", 1);
  }
  std::size_t lineno = 1;
  while (std::getline(is, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto cells = split(line);
    if (cells.size() != expected.size()) {
      throw CsvError("line " + std::to_string(lineno) + ": expected " + std::to_string(expected.size()) +
                         " columns, got " + std::to_string(cells.size()),
                     lineno);
    }
    std::vector<double> row(cells.size());
    for (std::size_t c = 0; c < cells.size(); ++c) {
      if (!parse_double(cells[c], row[c])) {
        throw CsvError("line " + std::to_string(lineno) + ", column " + std::to_string(c + 1) + " ('" +
                           expected[c] + "'): not a number: '" + std::string(cells[c]) + "'",
                       lineno, c + 1);
      }
    }
    table.rows.push_back(std::move(row));
  }
  return table;
}

inline Table read_file(const std::string& path, const std::vector<std::string>& expected) {
  std::ifstream in(path);
  if (!in) throw CsvError("cannot open '" + path + "'", 0);
  return read(in, expected);
}

inline void write_file(const std::string& path, const Table& table) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  write(out, table);
  if (!out) throw std::runtime_error("write failed for '" + path + "'");
}

// Typed views.

inline Table to_table(const Trajectory& traj) {
  Table t{kSimHeader, {}};
  t.rows.reserve(traj.size());
  for (const auto& s : traj) t.rows.push_back({s.t, s.x, s.v, s.f, s.u});
  return t;
}

inline Trajectory to_trajectory(const Table& table) {
  Trajectory traj;
  traj.reserve(table.rows.size());
  for (const auto& r : table.rows) traj.push_back({r[0], r[1], r[2], r[3], r[4]});
  return traj;
}

inline Table to_table(const MeasuredSeries& series) {
  Table t{kMeasuredHeader, {}};
  t.rows.reserve(series.size());
  for (const auto& s : series) t.rows.push_back({s.t, s.x, s.u});
  return t;
}

inline MeasuredSeries to_measured(const Table& table) {
  MeasuredSeries series;
  series.reserve(table.rows.size());
  for (const auto& r : table.rows) series.push_back({r[0], r[1], r[2]});
  return series;
}

/// Estimates with e_obs = x_meas - x_int.
inline Table to_table(const std::vector<EstimateSample>& est, const MeasuredSeries& measured) {
  if (est.size() != measured.size()) throw std::invalid_argument("to_table: length mismatch");
  Table t{kEstimatesHeader, {}};
  t.rows.reserve(est.size());
  for (std::size_t k = 0; k < est.size(); ++k) {
    const auto& e = est[k];
    t.rows.push_back({e.t, e.w2_tilde, e.w3_tilde, e.phi, measured[k].x - e.x_int});
  }
  return t;
}

}  // namespace frictobs::csv
