#pragma once

/// A small rectangular results table written as CSV or JSON.

#include "sphlap/io.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <ostream>
#include <stdexcept>
#include <string>
#include <utility>
#include <variant>
#include <vector>

namespace sphlap {

/// An empty cell (std::monostate) is written as an empty CSV field or JSON null.
using Cell = std::variant<std::monostate, std::string, double, std::int64_t>;

struct Table {
  std::vector<std::string> columns;
  std::vector<std::vector<Cell>> rows;

  void add_row(std::vector<Cell> row) {
    if (row.size() != columns.size()) throw std::invalid_argument("Table: row width mismatch");
    rows.push_back(std::move(row));
  }
};

namespace detail {

inline std::string csv_field(const Cell& c) {
  if (std::holds_alternative<double>(c)) return format_double(std::get<double>(c));
  if (std::holds_alternative<std::int64_t>(c)) return std::to_string(std::get<std::int64_t>(c));
  if (std::holds_alternative<std::string>(c)) {
    const auto& s = std::get<std::string>(c);
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string q = "\"";
    for (char ch : s) q += ch == '"' ? std::string("\"\"") : std::string(1, ch);
    return q + "\"";
  }
  return "";
}

inline nlohmann::json json_value(const Cell& c) {
  if (std::holds_alternative<double>(c)) return std::get<double>(c);
  if (std::holds_alternative<std::int64_t>(c)) return std::get<std::int64_t>(c);
  if (std::holds_alternative<std::string>(c)) return std::get<std::string>(c);
  return nullptr;
}

}  // namespace detail

inline void write_csv(std::ostream& out, const Table& t) {
  for (std::size_t j = 0; j < t.columns.size(); ++j) out << (j ? "," : "") << t.columns[j];
  out << '\n';
  for (const auto& row : t.rows) {
    for (std::size_t j = 0; j < row.size(); ++j) out << (j ? "," : "") << detail::csv_field(row[j]);
    out << '\n';
  }
}

/// Array of objects keyed by column name.
[[nodiscard]] inline nlohmann::json to_json(const Table& t) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& row : t.rows) {
    nlohmann::json obj = nlohmann::json::object();
    for (std::size_t j = 0; j < row.size(); ++j) obj[t.columns[j]] = detail::json_value(row[j]);
    arr.push_back(std::move(obj));
  }
  return arr;
}

}  // namespace sphlap
