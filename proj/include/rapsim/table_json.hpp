#pragma once

// Column-oriented JSON form of the CSV tables: `# key=value` comment lines go
// to "meta", each column to an array under "columns". The conversion is
// lossless in both directions, so every module CSV reader also accepts the
// JSON artifacts after json_to_csv.

#include <sstream>
#include <string>

#include <json.hpp>

#include "csv.hpp"
#include "errors.hpp"

namespace rapsim {

inline nlohmann::ordered_json csv_to_json(const std::string& csv_text, const std::string& source = "table") {
  std::istringstream in(csv_text);
  const auto t = csv::read_table(in, source);
  nlohmann::ordered_json meta = nlohmann::ordered_json::object();
  for (const auto& c : t.comments) {
    const auto eq = c.find('=');
    std::string key = c.substr(0, eq);
    while (!key.empty() && key.front() == ' ') key.erase(key.begin());
    detail::require(eq != std::string::npos && !key.empty(), source + ": comment '" + c + "' is not key=value");
    meta[key] = csv::parse_double(c.substr(eq + 1), source + ": " + key);
  }
  nlohmann::ordered_json cols = nlohmann::ordered_json::object();
  for (std::size_t k = 0; k < t.header.size(); ++k) {
    auto col = nlohmann::ordered_json::array();
    for (const auto& r : t.rows) col.push_back(r[k]);
    cols[t.header[k]] = std::move(col);
  }
  return {{"meta", meta}, {"columns", cols}};
}

inline std::string json_to_csv(const nlohmann::ordered_json& j, const std::string& source = "table") {
  detail::require(j.is_object() && j.contains("columns") && j["columns"].is_object(),
                  source + ": expected an object with \"columns\"");
  std::ostringstream os;
  if (j.contains("meta"))
    for (const auto& [k, v] : j["meta"].items()) os << "# " << k << '=' << csv::format(v.get<double>()) << '\n';
  const auto& cols = j["columns"];
  std::size_t rows = 0;
  bool first = true;
  for (const auto& [k, v] : cols.items()) {
    detail::require(v.is_array(), source + ": column '" + k + "' must be an array");
    if (first) rows = v.size();
    detail::require(v.size() == rows, source + ": columns differ in length");
    os << (first ? "" : ",") << k;
    first = false;
  }
  os << '\n';
  for (std::size_t i = 0; i < rows; ++i) {
    first = true;
    for (const auto& [k, v] : cols.items()) {
      os << (first ? "" : ",") << csv::format(v[i].get<double>());
      first = false;
    }
    os << '\n';
  }
  return os.str();
}

}  // namespace rapsim
