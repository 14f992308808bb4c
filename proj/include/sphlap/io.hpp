#pragma once

/// File formats: point CSV, mixture-model JSON and compositional CSV.
///
/// Doubles are written in the shortest decimal form that round-trips exactly.

#include "sphlap/metrics.hpp"
#include "sphlap/mixture.hpp"
#include "sphlap/sphere.hpp"

#include <Eigen/Core>
#include <nlohmann/json.hpp>

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <system_error>
#include <utility>
#include <vector>

namespace sphlap {

/// Points whose norm deviates from 1 by more than this trigger a warning on load.
inline constexpr double kRenormalizeWarn = 1e-6;

class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Shortest decimal representation that parses back to the same double.
[[nodiscard]] inline std::string format_double(double v) {
  char buf[64];
  const auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  if (ec != std::errc{}) throw std::runtime_error("format_double: conversion failed");
  return {buf, end};
}

namespace detail {

/// Splits one CSV record. Double-quoted fields may contain commas and "" escapes.
inline std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cur += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(std::move(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  fields.push_back(std::move(cur));
  return fields;
}

inline std::string trim(std::string s) {
  const auto not_space = [](unsigned char c) { return !std::isspace(c); };
  s.erase(s.begin(), std::find_if(s.begin(), s.end(), not_space));
  s.erase(std::find_if(s.rbegin(), s.rend(), not_space).base(), s.end());
  return s;
}

inline bool getline_lf(std::istream& in, std::string& line) {
  if (!std::getline(in, line)) return false;
  if (!line.empty() && line.back() == '\r') line.pop_back();
  return true;
}

inline double parse_double(const std::string& field, std::size_t line_no, const std::string& what) {
  const std::string t = trim(field);
  double v = 0.0;
  const char* first = t.data();
  const char* last = t.data() + t.size();
  if (!t.empty() && *first == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, last, v);
  if (t.empty() || ec != std::errc{} || ptr != last || !std::isfinite(v)) {
    throw ParseError("line " + std::to_string(line_no) + ": " + what + " '" + field +
                     "' is not a finite number");
  }
  return v;
}

inline std::ifstream open_input(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open '" + path + "' for reading");
  return in;
}

inline std::ofstream open_output(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
  return out;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Point CSV: header x0,...,xp with an optional trailing "label" column.

struct PointTable {
  std::vector<UnitVector> points;
  std::optional<LabelVector> labels;
  /// Non-fatal issues, e.g. rows re-normalized onto the sphere.
  std::vector<std::string> warnings;
};

[[nodiscard]] inline PointTable read_points_csv(std::istream& in) {
  std::string line;
  if (!detail::getline_lf(in, line)) throw ParseError("line 1: missing header");
  const auto header = detail::split_csv(line);
  std::size_t dims = 0;
  while (dims < header.size() && detail::trim(header[dims]) == "x" + std::to_string(dims)) ++dims;
  const bool has_label = dims + 1 == header.size() && detail::trim(header[dims]) == "label";
  if (dims < 2 || (dims != header.size() && !has_label)) {
    throw ParseError("line 1: expected header x0,...,xp[,label], got '" + line + "'");
  }
  PointTable table;
  if (has_label) table.labels.emplace();
  std::size_t line_no = 1;
  while (detail::getline_lf(in, line)) {
    ++line_no;
    if (detail::trim(line).empty()) continue;
    const auto fields = detail::split_csv(line);
    if (fields.size() != header.size()) {
      throw ParseError("line " + std::to_string(line_no) + ": expected " +
                       std::to_string(header.size()) + " fields, got " + std::to_string(fields.size()));
    }
    Eigen::VectorXd v(static_cast<Eigen::Index>(dims));
    for (std::size_t j = 0; j < dims; ++j) {
      v[static_cast<Eigen::Index>(j)] = detail::parse_double(fields[j], line_no, "coordinate");
    }
    const double norm = v.norm();
    if (!(norm > 0.0)) {
      throw ParseError("line " + std::to_string(line_no) + ": zero vector cannot be normalized");
    }
    if (std::abs(norm - 1.0) > kRenormalizeWarn) {
      table.warnings.push_back("line " + std::to_string(line_no) + ": norm " + format_double(norm) +
                               " re-normalized to 1");
    }
    table.points.emplace_back(std::move(v));
    if (has_label) {
      const double lab = detail::parse_double(fields[dims], line_no, "label");
      if (lab < 0.0 || lab != std::floor(lab)) {
        throw ParseError("line " + std::to_string(line_no) + ": label must be a non-negative integer");
      }
      table.labels->push_back(static_cast<int>(lab));
    }
  }
  return table;
}

[[nodiscard]] inline PointTable read_points_csv(const std::string& path) {
  auto in = detail::open_input(path);
  return read_points_csv(in);
}

/// Writes the header for dimension p and one row per point. With n = 0 only
/// the header is written, so `p` is passed explicitly.
inline void write_points_csv(std::ostream& out, int p, const std::vector<UnitVector>& points,
                             const LabelVector* labels = nullptr) {
  if (labels != nullptr && labels->size() != points.size()) {
    throw std::invalid_argument("write_points_csv: labels/points length mismatch");
  }
  for (int j = 0; j <= p; ++j) out << (j ? "," : "") << 'x' << j;
  if (labels != nullptr) out << ",label";
  out << '\n';
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (points[i].dim() != p) throw std::invalid_argument("write_points_csv: dimension mismatch");
    for (Eigen::Index j = 0; j < points[i].size(); ++j) {
      out << (j ? "," : "") << format_double(points[i][j]);
    }
    if (labels != nullptr) out << ',' << (*labels)[i];
    out << '\n';
  }
}

inline void write_points_csv(const std::string& path, int p, const std::vector<UnitVector>& points,
                             const LabelVector* labels = nullptr) {
  auto out = detail::open_output(path);
  write_points_csv(out, p, points, labels);
}

inline void write_labels_csv(std::ostream& out, const LabelVector& labels) {
  out << "index,label\n";
  for (std::size_t i = 0; i < labels.size(); ++i) out << i << ',' << labels[i] << '\n';
}

// ---------------------------------------------------------------------------
// Model JSON: {K, homogeneous, weights[], locations[][], scales[]}.

[[nodiscard]] inline nlohmann::json to_json(const UnitVector& x) {
  nlohmann::json arr = nlohmann::json::array();
  for (Eigen::Index i = 0; i < x.size(); ++i) arr.push_back(x[i]);
  return arr;
}

[[nodiscard]] inline nlohmann::json mixture_to_json(const SLMixture& m) {
  m.validate();
  nlohmann::json j;
  j["K"] = m.K();
  j["homogeneous"] = m.homogeneous;
  j["weights"] = m.weights;
  j["locations"] = nlohmann::json::array();
  for (const auto& mu : m.locations) j["locations"].push_back(to_json(mu));
  j["scales"] = m.scales;
  return j;
}

/// Inverse of mixture_to_json. Coordinates are taken verbatim (no
/// re-normalization beyond UnitVector's own), so a round trip is lossless.
[[nodiscard]] inline SLMixture mixture_from_json(const nlohmann::json& j) {
  SLMixture m;
  try {
    const int K = j.at("K").get<int>();
    m.homogeneous = j.at("homogeneous").get<bool>();
    m.weights = j.at("weights").get<std::vector<double>>();
    m.scales = j.at("scales").get<std::vector<double>>();
    for (const auto& loc : j.at("locations")) {
      const auto v = loc.get<std::vector<double>>();
      m.locations.emplace_back(Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size())));
    }
    if (K != m.K()) throw std::invalid_argument("model JSON: K does not match the weight count");
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("model JSON: ") + e.what());
  }
  m.validate();
  return m;
}

// ---------------------------------------------------------------------------
// Compositional CSV: named non-negative category columns plus a group column.

struct CompositionalRecord {
  std::string id;
  std::vector<double> values;
  std::optional<std::string> group;
};

struct CompositionalTable {
  std::vector<std::string> categories;
  std::vector<CompositionalRecord> records;
};

/// Reads the given category columns and an optional group column. The record
/// id is taken from a column named "id" when present, else the 1-based row number.
[[nodiscard]] inline CompositionalTable read_compositional_csv(
    std::istream& in, const std::vector<std::string>& categories,
    const std::optional<std::string>& group_column) {
  std::string line;
  if (!detail::getline_lf(in, line)) throw ParseError("line 1: missing header");
  std::vector<std::string> header = detail::split_csv(line);
  for (auto& h : header) h = detail::trim(h);
  const auto find = [&](const std::string& name) -> std::optional<std::size_t> {
    const auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) return std::nullopt;
    return static_cast<std::size_t>(it - header.begin());
  };
  std::vector<std::string> missing;
  std::vector<std::size_t> cat_idx;
  for (const auto& c : categories) {
    if (auto i = find(c)) cat_idx.push_back(*i);
    else missing.push_back(c);
  }
  std::optional<std::size_t> group_idx;
  if (group_column) {
    group_idx = find(*group_column);
    if (!group_idx) missing.push_back(*group_column);
  }
  if (!missing.empty()) {
    std::string msg = "missing column(s):";
    for (const auto& m : missing) msg += " " + m;
    msg += "; available columns:";
    for (const auto& h : header) msg += " " + h;
    throw ParseError(msg);
  }
  const auto id_idx = find("id");

  CompositionalTable table{categories, {}};
  std::size_t line_no = 1;
  while (detail::getline_lf(in, line)) {
    ++line_no;
    if (detail::trim(line).empty()) continue;
    const auto fields = detail::split_csv(line);
    if (fields.size() != header.size()) {
      throw ParseError("line " + std::to_string(line_no) + ": expected " +
                       std::to_string(header.size()) + " fields, got " + std::to_string(fields.size()));
    }
    CompositionalRecord rec;
    rec.id = id_idx ? detail::trim(fields[*id_idx]) : std::to_string(table.records.size() + 1);
    for (std::size_t i : cat_idx) {
      const double v = detail::parse_double(fields[i], line_no, header[i]);
      if (v < 0.0) {
        throw ParseError("line " + std::to_string(line_no) + ": negative value in column " + header[i]);
      }
      rec.values.push_back(v);
    }
    if (group_idx) rec.group = detail::trim(fields[*group_idx]);
    table.records.push_back(std::move(rec));
  }
  return table;
}

[[nodiscard]] inline CompositionalTable read_compositional_csv(
    const std::string& path, const std::vector<std::string>& categories,
    const std::optional<std::string>& group_column) {
  auto in = detail::open_input(path);
  return read_compositional_csv(in, categories, group_column);
}

/// l1-normalize then take element-wise square roots: a point on S^{D-1}.
/// Throws for a row without positive mass, naming the record id.
[[nodiscard]] inline UnitVector sqrt_transform(const std::vector<double>& values,
                                               const std::string& id = "") {
  double total = 0.0;
  for (double v : values) {
    if (!(v >= 0.0) || !std::isfinite(v)) {
      throw std::invalid_argument("record " + id + ": compositional values must be finite and >= 0");
    }
    total += v;
  }
  if (!(total > 0.0)) throw std::invalid_argument("record " + id + ": zero-sum row");
  Eigen::VectorXd x(static_cast<Eigen::Index>(values.size()));
  for (std::size_t i = 0; i < values.size(); ++i) {
    x[static_cast<Eigen::Index>(i)] = std::sqrt(values[i] / total);
  }
  return UnitVector(std::move(x));
}

/// Integer codes for group names in order of first appearance.
[[nodiscard]] inline LabelVector encode_groups(const std::vector<std::string>& groups,
                                               std::vector<std::string>* names = nullptr) {
  std::map<std::string, int> codes;
  std::vector<std::string> order;
  LabelVector out;
  out.reserve(groups.size());
  for (const auto& g : groups) {
    auto [it, inserted] = codes.emplace(g, static_cast<int>(order.size()));
    if (inserted) order.push_back(g);
    out.push_back(it->second);
  }
  if (names != nullptr) *names = std::move(order);
  return out;
}

}  // namespace sphlap
