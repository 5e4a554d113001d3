// Copyright 2026 The cfrenew Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef CFRENEW_TABLE_IO_HPP
#define CFRENEW_TABLE_IO_HPP

// JSON and CSV forms of a distribution_table. Both carry the same
// information: the CSV keeps the non-tabular fields as a JSON header line
// starting with "# cfrenew-table ".

#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "cfrenew/errors.hpp"
#include "cfrenew/limit_law.hpp"

namespace cfrenew {

inline constexpr int table_schema_version = 1;

namespace detail {

inline nlohmann::json table_header(const distribution_table& t) {
  nlohmann::json j;
  j["schema_version"] = table_schema_version;
  j["kind"] = t.kind;
  j["N"] = t.N;
  j["edges"] = t.edges;
  j["tuples"] = t.tuples;
  j["sample_count"] = t.sample_count;
  j["rejected"] = t.rejected;
  j["R"] = t.R ? nlohmann::json(*t.R) : nlohmann::json(nullptr);
  j["normalization"] = t.normalization;
  j["normalization_error"] = t.normalization_error;
  j["config"] = t.config;
  return j;
}

inline distribution_table table_from_header(const nlohmann::json& j) {
  if (!j.contains("schema_version") || j.at("schema_version").get<int>() != table_schema_version) {
    throw error(errc::incompatible_tables, "unsupported table schema_version");
  }
  distribution_table t;
  t.kind = j.at("kind").get<std::string>();
  t.N = j.at("N").get<std::size_t>();
  t.edges = j.at("edges").get<std::vector<double>>();
  t.tuples = j.at("tuples").get<std::vector<digit_tuple>>();
  t.sample_count = j.at("sample_count").get<std::uint64_t>();
  t.rejected = j.at("rejected").get<std::uint64_t>();
  if (!j.at("R").is_null()) t.R = j.at("R").get<double>();
  t.normalization = j.at("normalization").get<double>();
  t.normalization_error = j.at("normalization_error").get<double>();
  t.config = j.at("config");
  t.resize();
  return t;
}

inline std::string tuple_label(const digit_tuple& t) {
  if (t.empty()) return "*";
  std::string s;
  for (std::size_t i = 0; i < t.size(); ++i) {
    if (i) s += '-';
    s += std::to_string(t[i]);
  }
  return s;
}

inline std::string format_double(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

template <class T>
std::vector<std::vector<T>> as_matrix(const std::vector<T>& flat, std::size_t cols) {
  std::vector<std::vector<T>> m;
  for (std::size_t i = 0; i < flat.size(); i += cols) m.emplace_back(flat.begin() + i, flat.begin() + i + cols);
  return m;
}

template <class T>
std::vector<T> flatten(const nlohmann::json& j, std::size_t rows, std::size_t cols) {
  const auto m = j.get<std::vector<std::vector<T>>>();
  if (m.size() != rows) throw error(errc::incompatible_tables, "matrix row count differs from the bins");
  std::vector<T> out;
  out.reserve(rows * cols);
  for (const auto& r : m) {
    if (r.size() != cols) throw error(errc::incompatible_tables, "matrix column count differs from the tuples");
    out.insert(out.end(), r.begin(), r.end());
  }
  return out;
}

}  // namespace detail

inline nlohmann::json to_json(const distribution_table& t) {
  nlohmann::json j = detail::table_header(t);
  j["mass"] = detail::as_matrix(t.mass, t.cols());
  j["error"] = detail::as_matrix(t.error, t.cols());
  if (!t.counts.empty()) j["counts"] = detail::as_matrix(t.counts, t.cols());
  return j;
}

inline distribution_table table_from_json(const nlohmann::json& j) {
  try {
    distribution_table t = detail::table_from_header(j);
    t.mass = detail::flatten<double>(j.at("mass"), t.rows(), t.cols());
    t.error = detail::flatten<double>(j.at("error"), t.rows(), t.cols());
    if (j.contains("counts")) t.counts = detail::flatten<std::uint64_t>(j.at("counts"), t.rows(), t.cols());
    return t;
  } catch (const nlohmann::json::exception& e) {
    throw error(errc::incompatible_tables, std::string("malformed table JSON: ") + e.what());
  }
}

inline void write_json(std::ostream& os, const distribution_table& t) { os << to_json(t).dump(2) << '\n'; }

/// One row per (ratio bin, digit column).
inline void write_csv(std::ostream& os, const distribution_table& t) {
  os << "# cfrenew-table " << detail::table_header(t).dump() << '\n';
  os << "row,ratio_lo,ratio_hi,tuple,mass,error,count\n";
  for (std::size_t r = 0; r < t.rows(); ++r) {
    for (std::size_t c = 0; c < t.cols(); ++c) {
      const std::size_t i = r * t.cols() + c;
      os << r << ',' << detail::format_double(t.edges[r]) << ','
         << (r + 1 < t.rows() ? detail::format_double(t.edges[r + 1]) : std::string("inf")) << ','
         << (c == t.other_column() ? std::string("other") : detail::tuple_label(t.tuples[c])) << ','
         << detail::format_double(t.mass[i]) << ',' << detail::format_double(t.error[i]) << ','
         << (t.counts.empty() ? std::string() : std::to_string(t.counts[i])) << '\n';
    }
  }
}

inline distribution_table read_csv(std::istream& is) {
  std::string line;
  const std::string tag = "# cfrenew-table ";
  if (!std::getline(is, line) || line.rfind(tag, 0) != 0) {
    throw error(errc::incompatible_tables, "missing cfrenew-table header line");
  }
  distribution_table t;
  try {
    t = detail::table_from_header(nlohmann::json::parse(line.substr(tag.size())));
  } catch (const nlohmann::json::exception& e) {
    throw error(errc::incompatible_tables, std::string("malformed CSV header: ") + e.what());
  }
  std::getline(is, line);  // column names
  bool any_count = false;
  std::vector<std::uint64_t> counts(t.rows() * t.cols(), 0);
  std::size_t seen = 0;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) f.push_back(cell);
    if (line.back() == ',') f.emplace_back();
    if (f.size() != 7) throw error(errc::incompatible_tables, "CSV row needs 7 fields: " + line);
    if (seen >= t.mass.size()) throw error(errc::incompatible_tables, "too many CSV rows");
    t.mass[seen] = std::stod(f[4]);
    t.error[seen] = std::stod(f[5]);
    if (!f[6].empty()) {
      any_count = true;
      counts[seen] = std::stoull(f[6]);
    }
    ++seen;
  }
  if (seen != t.mass.size()) throw error(errc::incompatible_tables, "CSV row count differs from the header");
  if (any_count) t.counts = std::move(counts);
  return t;
}

}  // namespace cfrenew

#endif  // CFRENEW_TABLE_IO_HPP
