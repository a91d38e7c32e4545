#ifndef COMPOSOPT_BENCH_CSV_HPP
#define COMPOSOPT_BENCH_CSV_HPP

// Trace serialization. One row per state x_1 ... x_{K+1}; values carry 17
// significant digits so parsing reproduces every double bit for bit. Cells
// that do not exist for a row (step quantities of the last state, oracle
// columns outside verify mode, time_s without timing) are empty.

#include <cstdio>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "composopt/pagm.hpp"
#include "composopt/scgm.hpp"

namespace composopt::bench {

inline const std::vector<std::string>& scgm_csv_header() {
  static const std::vector<std::string> h = {"k",        "obj",       "envelope", "radius",
                                             "residual", "step_norm", "time_s"};
  return h;
}

inline const std::vector<std::string>& pagm_csv_header() {
  static const std::vector<std::string> h = {"k",       "obj",     "fmu",       "grad_norm",
                                             "delta_k", "Delta_k", "sub_exact", "time_s"};
  return h;
}

using Cell = std::optional<double>;

struct TraceTable {
  std::vector<std::string> header;
  std::vector<std::vector<Cell>> rows;

  std::size_t column(const std::string& name) const {
    for (std::size_t i = 0; i < header.size(); ++i)
      if (header[i] == name) return i;
    throw InvalidArgument("trace csv: no column '" + name + "'");
  }
  const Cell& at(std::size_t row, const std::string& name) const {
    return rows.at(row).at(column(name));
  }
  /// Value that must be present; the error names the row and column.
  double value(std::size_t row, const std::string& name) const {
    const Cell& c = at(row, name);
    if (!c) throw InvalidArgument("trace csv: empty '" + name + "' in row " + std::to_string(row + 1));
    return *c;
  }
};

inline std::string format_cell(const Cell& c) {
  if (!c) return {};
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", *c);
  return buf;
}

inline std::string to_csv(const TraceTable& t) {
  std::ostringstream out;
  for (std::size_t i = 0; i < t.header.size(); ++i) out << (i ? "," : "") << t.header[i];
  out << '\n';
  for (const auto& row : t.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i) out << ',';
      // k is an integer column.
      if (i == 0 && row[i]) out << static_cast<unsigned long long>(*row[i]);
      else out << format_cell(row[i]);
    }
    out << '\n';
  }
  return out.str();
}

inline TraceTable scgm_table(const ScgmTrace& trace, bool timing) {
  TraceTable t;
  t.header = scgm_csv_header();
  const std::size_t K = trace.K();
  for (std::size_t k = 1; k <= K + 1; ++k) {
    const ScgmState& s = trace.state(k);
    Cell step;
    if (k <= K) step = (trace.state(k + 1).x - s.x).norm();
    Cell time;
    if (timing) time = trace.elapsed_s.at(k - 1);
    t.rows.push_back({static_cast<double>(k), s.objective, s.envelope, s.radius(), s.residual(),
                      step, time});
  }
  return t;
}

/// `obj` is f(x1^k) = h2(g2(x1^k)) - h1(g1(x1^k)).
inline TraceTable pagm_table(const DCProblem& problem, const PagmTrace& trace, bool timing) {
  TraceTable t;
  t.header = pagm_csv_header();
  const std::size_t K = trace.K();
  for (std::size_t k = 1; k <= K + 1; ++k) {
    const PagmState& s = trace.state(k);
    Cell fmu, grad, delta, Delta, exact, time;
    if (trace.verified && s.oracle) {
      fmu = s.oracle->f_mu();
      Delta = trace.Delta.at(k);
      if (k <= K) delta = trace.delta.at(k);
    }
    if (k <= K) {
      grad = s.approx_grad.norm();
      exact = s.sub_exact ? 1.0 : 0.0;
    }
    if (timing) time = trace.elapsed_s.at(k - 1);
    t.rows.push_back({static_cast<double>(k), problem.objective(s.x1), fmu, grad, delta, Delta,
                      exact, time});
  }
  return t;
}

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

inline Cell parse_cell(const std::string& s, std::size_t line_no) {
  if (s.empty()) return std::nullopt;
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != s.size())
    throw InvalidArgument("trace csv: line " + std::to_string(line_no) + ": bad number '" + s + "'");
  return v;
}

}  // namespace detail

inline TraceTable parse_csv(std::istream& in) {
  TraceTable t;
  std::string line;
  if (!std::getline(in, line)) throw InvalidArgument("trace csv: empty input");
  t.header = detail::split_csv_line(line);
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto cells = detail::split_csv_line(line);
    if (cells.size() != t.header.size())
      throw InvalidArgument("trace csv: line " + std::to_string(line_no) + " has " +
                            std::to_string(cells.size()) + " cells, expected " +
                            std::to_string(t.header.size()));
    std::vector<Cell> row;
    row.reserve(cells.size());
    for (const auto& c : cells) row.push_back(detail::parse_cell(c, line_no));
    t.rows.push_back(std::move(row));
  }
  return t;
}

inline TraceTable read_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("trace csv: cannot open '" + path + "'");
  return parse_csv(in);
}

inline void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  out << text;
  if (!out) throw std::runtime_error("write failed for '" + path + "'");
}

}  // namespace composopt::bench

#endif  // COMPOSOPT_BENCH_CSV_HPP
