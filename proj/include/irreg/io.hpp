#ifndef IRREG_IO_HPP
#define IRREG_IO_HPP

// Plain-text serialization: CSV with shortest round-trip decimals and
// "# key=value" metadata lines, plus aligned-column text tables.

#include <charconv>
#include <cstdint>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "irreg/errors.hpp"
#include "irreg/estimators.hpp"
#include "irreg/samplers.hpp"

namespace irreg::io {

using Metadata = std::map<std::string, std::string>;

/// Shortest decimal that parses back to the same double.
inline std::string format_double(double x) {
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, r.ptr);
}

inline std::string format_u64(std::uint64_t x) {
  char buf[32];
  const auto r = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, r.ptr);
}

inline std::string format_hex(std::uint64_t x) {
  char buf[32];
  const auto r = std::to_chars(buf, buf + sizeof buf, x, 16);
  std::string s(buf, r.ptr);
  return std::string(16 - s.size(), '0') + s;
}

inline double parse_double(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  double x = 0.0;
  const auto r = std::from_chars(s.data(), s.data() + s.size(), x);
  if (r.ec != std::errc() || r.ptr != s.data() + s.size()) {
    throw ValidationError("not a number: '" + std::string(s) + "'");
  }
  return x;
}

inline std::uint64_t parse_u64(std::string_view s) {
  std::uint64_t x = 0;
  const auto r = std::from_chars(s.data(), s.data() + s.size(), x);
  if (r.ec != std::errc() || r.ptr != s.data() + s.size()) {
    throw ValidationError("not an unsigned integer: '" + std::string(s) + "'");
  }
  return x;
}

inline std::vector<std::string_view> split(std::string_view line, char sep = ',') {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (std::size_t i = 0; i <= line.size(); ++i) {
    if (i == line.size() || line[i] == sep) {
      out.push_back(line.substr(start, i - start));
      start = i + 1;
    }
  }
  return out;
}

/// A CSV table: metadata, column names and numeric rows.
struct Table {
  Metadata meta;
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;

  std::size_t column(std::string_view name) const {
    for (std::size_t i = 0; i < columns.size(); ++i) {
      if (columns[i] == name) return i;
    }
    throw ValidationError("missing column '" + std::string(name) + "'");
  }

  const std::string& get(const std::string& key) const {
    const auto it = meta.find(key);
    if (it == meta.end()) throw ValidationError("missing metadata '" + key + "'");
    return it->second;
  }
};

inline void write_table(std::ostream& os, const Table& t) {
  for (const auto& [k, v] : t.meta) os << "# " << k << '=' << v << '\n';
  for (std::size_t i = 0; i < t.columns.size(); ++i) os << (i ? "," : "") << t.columns[i];
  os << '\n';
  for (const auto& row : t.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) os << (i ? "," : "") << format_double(row[i]);
    os << '\n';
  }
}

inline Table read_table(std::istream& is) {
  Table t;
  std::string line;
  bool header = false;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line[0] == '#') {
      const auto eq = line.find('=');
      if (eq == std::string::npos) continue;
      std::string key = line.substr(1, eq - 1);
      key.erase(0, key.find_first_not_of(' '));
      t.meta[key] = line.substr(eq + 1);
      continue;
    }
    if (!header) {
      for (auto c : split(line)) t.columns.emplace_back(c);
      header = true;
      continue;
    }
    const auto cells = split(line);
    if (cells.size() != t.columns.size()) {
      throw ValidationError("line " + std::to_string(lineno) + ": expected " + std::to_string(t.columns.size()) +
                            " fields");
    }
    std::vector<double> row;
    row.reserve(cells.size());
    for (auto c : cells) row.push_back(parse_double(c));
    t.rows.push_back(std::move(row));
  }
  if (!header) throw ValidationError("CSV has no header row");
  return t;
}

// Regression samples ---------------------------------------------------------

inline Table to_table(const RegressionSample& s, Metadata meta = {}) {
  Table t;
  t.meta = std::move(meta);
  t.meta["kind"] = "regression";
  t.meta["n"] = format_u64(s.n);
  t.meta["seed"] = format_u64(s.seed);
  t.meta["spec_hash"] = format_hex(s.spec_ref);
  t.columns = {"x", "y"};
  for (std::size_t i = 0; i < s.xs.size(); ++i) t.rows.push_back({s.xs[i], s.ys[i]});
  return t;
}

inline RegressionSample regression_from_table(const Table& t) {
  RegressionSample s;
  const auto cx = t.column("x");
  const auto cy = t.column("y");
  for (const auto& r : t.rows) {
    s.xs.push_back(r[cx]);
    s.ys.push_back(r[cy]);
  }
  s.n = s.xs.size();
  if (t.meta.count("n") && parse_u64(t.get("n")) != s.n) throw ValidationError("row count differs from header n");
  if (t.meta.count("seed")) s.seed = parse_u64(t.get("seed"));
  if (t.meta.count("spec_hash")) s.spec_ref = std::stoull(t.get("spec_hash"), nullptr, 16);
  for (std::size_t i = 1; i < s.n; ++i) {
    if (s.xs[i] < s.xs[i - 1]) throw ValidationError("design points must be sorted");
  }
  return s;
}

// Point-process realizations -------------------------------------------------

inline Table to_table(const PointProcessRealization& x, Metadata meta = {}) {
  Table t;
  t.meta = std::move(meta);
  t.meta["kind"] = "point_process";
  t.meta["tag"] = to_string(x.tag);
  t.meta["n"] = format_double(x.n);
  t.meta["seed"] = format_u64(x.seed);
  t.meta["y_bound"] = format_double(x.y_bound);
  t.meta["intensity_mass"] = format_double(x.intensity_mass);
  t.columns = {"x", "y", "pass", "extreme"};
  for (const auto& p : x.points) {
    t.rows.push_back({p.x, p.y, static_cast<double>(p.pass), p.extreme ? 1.0 : 0.0});
  }
  return t;
}

inline PointProcessRealization realization_from_table(const Table& t) {
  PointProcessRealization x;
  x.tag = process_tag_from_string(t.get("tag"));
  x.n = parse_double(t.get("n"));
  x.y_bound = parse_double(t.get("y_bound"));
  if (t.meta.count("seed")) x.seed = parse_u64(t.get("seed"));
  if (t.meta.count("intensity_mass")) x.intensity_mass = parse_double(t.get("intensity_mass"));
  const auto cx = t.column("x");
  const auto cy = t.column("y");
  const bool has_pass = std::find(t.columns.begin(), t.columns.end(), "pass") != t.columns.end();
  const bool has_ext = std::find(t.columns.begin(), t.columns.end(), "extreme") != t.columns.end();
  for (const auto& r : t.rows) {
    Point p;
    p.x = r[cx];
    p.y = r[cy];
    if (has_pass) p.pass = static_cast<int>(r[t.column("pass")]);
    if (has_ext) p.extreme = r[t.column("extreme")] != 0.0;
    x.points.push_back(p);
  }
  return x;
}

// Pilot estimates ------------------------------------------------------------

inline Table to_table(const PilotEstimate& p, Metadata meta = {}) {
  Table t;
  t.meta = std::move(meta);
  t.meta["kind"] = "pilot";
  t.meta["bandwidth"] = format_double(p.bandwidth);
  t.meta["truncated"] = p.truncated ? "true" : "false";
  t.columns = {"x", "value", "derivative"};
  for (std::size_t i = 0; i < p.grid.size(); ++i) t.rows.push_back({p.grid[i], p.values[i], p.derivs[i]});
  return t;
}

inline std::string to_string(const Table& t) {
  std::ostringstream os;
  write_table(os, t);
  return os.str();
}

// Aligned text ---------------------------------------------------------------

/// Two-column "name  value" block with names padded to a common width.
inline std::string aligned(const std::vector<std::pair<std::string, std::string>>& rows) {
  std::size_t w = 0;
  for (const auto& r : rows) w = std::max(w, r.first.size());
  std::string out;
  for (const auto& [k, v] : rows) out += k + std::string(w - k.size() + 2, ' ') + v + '\n';
  return out;
}

}  // namespace irreg::io

#endif  // IRREG_IO_HPP
