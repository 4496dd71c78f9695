#pragma once

// Small CSV helpers shared by the module writers and readers. Numbers are
// written in shortest round-trip form so files re-read bit-exactly.

#include <charconv>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "errors.hpp"

namespace rapsim::csv {

inline std::string format(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

template <class It>
std::string join(It first, It last) {
  std::string out;
  for (auto it = first; it != last; ++it) {
    if (it != first) out += ',';
    out += format(static_cast<double>(*it));
  }
  return out;
}

inline double parse_double(std::string_view s, const std::string& where) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  double v = 0.0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size())
    throw ValidationError(where + ": cannot parse number '" + std::string(s) + "'");
  return v;
}

inline std::vector<std::string_view> split(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (std::size_t i = 0; i <= line.size(); ++i) {
    if (i == line.size() || line[i] == ',') {
      out.push_back(line.substr(start, i - start));
      start = i + 1;
    }
  }
  return out;
}

/// Parsed numeric table: `#`-prefixed comment lines, one header row, rows of numbers.
struct Table {
  std::vector<std::string> comments;  // without the leading '#'
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;
};

inline Table read_table(std::istream& in, const std::string& source) {
  Table t;
  std::string line;
  std::size_t lineno = 0;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line.front() == '#') {
      t.comments.push_back(line.substr(1));
      continue;
    }
    auto cells = split(line);
    if (!have_header) {
      for (auto c : cells) {
        std::string s(c);
        while (!s.empty() && s.front() == ' ') s.erase(s.begin());
        while (!s.empty() && s.back() == ' ') s.pop_back();
        t.header.push_back(s);
      }
      have_header = true;
      continue;
    }
    if (cells.size() != t.header.size())
      throw ValidationError(source + ":" + std::to_string(lineno) + ": expected " +
                            std::to_string(t.header.size()) + " columns");
    std::vector<double> row;
    row.reserve(cells.size());
    for (auto c : cells) row.push_back(parse_double(c, source + ":" + std::to_string(lineno)));
    t.rows.push_back(std::move(row));
  }
  if (!have_header) throw ValidationError(source + ": missing header row");
  return t;
}

inline Table read_table_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError(path + ": cannot open");
  return read_table(in, path);
}

/// Value of a `# key=value` comment line, or empty.
inline std::string comment_value(const Table& t, std::string_view key) {
  for (const auto& c : t.comments) {
    std::string_view s = c;
    while (!s.empty() && s.front() == ' ') s.remove_prefix(1);
    if (s.substr(0, key.size()) == key && s.size() > key.size() && s[key.size()] == '=')
      return std::string(s.substr(key.size() + 1));
  }
  return {};
}

}  // namespace rapsim::csv
