//
// Copyright 2026 The dpsynth Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
//
#pragma once

#include <charconv>
#include <cstddef>
#include <cstdint>
#include <fstream>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <variant>
#include <vector>

#include "dpsynth/error.h"
#include "json.hpp"

namespace dpsynth {

enum class ColumnKind { kBoundedInteger, kCategorical };

// A typed cell: integer for bounded-integer columns, label for categorical.
using CellValue = std::variant<std::int64_t, std::string>;

inline std::string_view trim_ascii(std::string_view s) {
  constexpr std::string_view kSpace = " \t\r\n";
  const auto first = s.find_first_not_of(kSpace);
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(kSpace);
  return s.substr(first, last - first + 1);
}

inline std::optional<std::int64_t> parse_int64(std::string_view text) {
  text = trim_ascii(text);
  if (!text.empty() && text.front() == '+') text.remove_prefix(1);
  std::int64_t value = 0;
  const auto* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (text.empty() || ec != std::errc() || ptr != end) return std::nullopt;
  return value;
}

// The value domain of one column. Every value maps to exactly one bin:
// bounded-integer columns have one bin per integer in [lo, hi], categorical
// columns one bin per label in declaration order.
class ColumnDomain {
 public:
  // Largest bin count a single column may declare; bins are stored as 32-bit
  // indices.
  static constexpr std::uint64_t kMaxBins =
      std::numeric_limits<std::uint32_t>::max();

  static ColumnDomain bounded_integer(std::string name, std::int64_t lo,
                                      std::int64_t hi) {
    check_name(name);
    if (lo > hi) {
      throw ArgumentError("column '" + name + "': lo (" + std::to_string(lo) +
                          ") exceeds hi (" + std::to_string(hi) + ")");
    }
    const auto span = static_cast<std::uint64_t>(hi) -
                      static_cast<std::uint64_t>(lo);
    if (span >= kMaxBins) {
      throw ArgumentError("column '" + name + "': integer range too wide");
    }
    ColumnDomain d;
    d.name_ = std::move(name);
    d.kind_ = ColumnKind::kBoundedInteger;
    d.lo_ = lo;
    d.hi_ = hi;
    return d;
  }

  static ColumnDomain categorical(std::string name,
                                  std::vector<std::string> labels) {
    check_name(name);
    if (labels.empty()) {
      throw ArgumentError("column '" + name + "': no categories");
    }
    if (labels.size() >= kMaxBins) {
      throw ArgumentError("column '" + name + "': too many categories");
    }
    ColumnDomain d;
    d.name_ = std::move(name);
    d.kind_ = ColumnKind::kCategorical;
    for (std::size_t i = 0; i < labels.size(); ++i) {
      if (labels[i].empty()) {
        throw ArgumentError("column '" + d.name_ + "': empty category label");
      }
      if (!d.index_.emplace(labels[i], i).second) {
        throw ArgumentError("column '" + d.name_ +
                            "': duplicate category '" + labels[i] + "'");
      }
    }
    d.labels_ = std::move(labels);
    return d;
  }

  const std::string& name() const { return name_; }
  ColumnKind kind() const { return kind_; }
  bool is_integer() const { return kind_ == ColumnKind::kBoundedInteger; }
  std::int64_t lo() const { return lo_; }
  std::int64_t hi() const { return hi_; }
  const std::vector<std::string>& labels() const { return labels_; }

  std::size_t bin_count() const {
    if (is_integer()) {
      return static_cast<std::size_t>(static_cast<std::uint64_t>(hi_) -
                                      static_cast<std::uint64_t>(lo_)) + 1;
    }
    return labels_.size();
  }

  // nullopt is the out-of-domain marker. A value of the wrong type is out of
  // domain.
  std::optional<std::size_t> bin_index(const CellValue& value) const {
    if (is_integer()) {
      const auto* v = std::get_if<std::int64_t>(&value);
      if (v == nullptr || *v < lo_ || *v > hi_) return std::nullopt;
      return static_cast<std::size_t>(static_cast<std::uint64_t>(*v) -
                                      static_cast<std::uint64_t>(lo_));
    }
    const auto* s = std::get_if<std::string>(&value);
    if (s == nullptr) return std::nullopt;
    return lookup(*s);
  }

  // Bin of a raw text field, surrounding whitespace ignored.
  std::optional<std::size_t> parse_bin(std::string_view text) const {
    if (is_integer()) {
      const auto v = parse_int64(text);
      if (!v) return std::nullopt;
      return bin_index(*v);
    }
    return lookup(std::string(trim_ascii(text)));
  }

  CellValue decode(std::size_t bin) const {
    check_bin(bin);
    if (is_integer()) return lo_ + static_cast<std::int64_t>(bin);
    return labels_[bin];
  }

  std::string label(std::size_t bin) const {
    check_bin(bin);
    if (is_integer()) return std::to_string(lo_ + static_cast<std::int64_t>(bin));
    return labels_[bin];
  }

  friend bool operator==(const ColumnDomain& a, const ColumnDomain& b) {
    return a.name_ == b.name_ && a.kind_ == b.kind_ && a.lo_ == b.lo_ &&
           a.hi_ == b.hi_ && a.labels_ == b.labels_;
  }

 private:
  ColumnDomain() = default;

  static void check_name(const std::string& name) {
    if (name.empty()) throw ArgumentError("column name must not be empty");
  }

  void check_bin(std::size_t bin) const {
    if (bin >= bin_count()) {
      throw ArgumentError("bin " + std::to_string(bin) +
                          " out of range for column '" + name_ + "'");
    }
  }

  std::optional<std::size_t> lookup(const std::string& label) const {
    const auto it = index_.find(label);
    if (it == index_.end()) return std::nullopt;
    return it->second;
  }

  std::string name_;
  ColumnKind kind_ = ColumnKind::kBoundedInteger;
  std::int64_t lo_ = 0;
  std::int64_t hi_ = 0;
  std::vector<std::string> labels_;
  std::unordered_map<std::string, std::size_t> index_;
};

inline std::optional<std::size_t> bin_index(const CellValue& value,
                                            const ColumnDomain& domain) {
  return domain.bin_index(value);
}

using Schema = std::vector<ColumnDomain>;

// Schema files are JSON:
//
//   {"columns": [
//     {"name": "Age", "kind": "integer", "lo": 17, "hi": 90},
//     {"name": "Occupation", "kind": "categorical",
//      "categories": ["Adm-clerical", "Armed-Forces"]}
//   ]}
//
// "int" and "cat" are accepted as short kind names.
inline Schema parse_schema(std::string_view text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw IngestionError(std::string("schema is not valid JSON: ") + e.what());
  }
  if (!doc.is_object() || !doc.contains("columns") ||
      !doc["columns"].is_array()) {
    throw IngestionError("schema must be an object with a \"columns\" array");
  }
  Schema schema;
  std::unordered_set<std::string> seen;
  try {
    for (const auto& col : doc["columns"]) {
      const auto name = col.at("name").get<std::string>();
      const auto kind = col.at("kind").get<std::string>();
      if (!seen.insert(name).second) {
        throw IngestionError("schema lists column '" + name + "' twice");
      }
      if (kind == "integer" || kind == "int") {
        schema.push_back(ColumnDomain::bounded_integer(
            name, col.at("lo").get<std::int64_t>(),
            col.at("hi").get<std::int64_t>()));
      } else if (kind == "categorical" || kind == "cat") {
        schema.push_back(ColumnDomain::categorical(
            name, col.at("categories").get<std::vector<std::string>>()));
      } else {
        throw IngestionError("column '" + name + "': unknown kind '" + kind +
                             "'");
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw IngestionError(std::string("malformed schema: ") + e.what());
  } catch (const ArgumentError& e) {
    throw IngestionError(std::string("invalid schema: ") + e.what());
  }
  if (schema.empty()) throw IngestionError("schema declares no columns");
  return schema;
}

inline Schema load_schema(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open schema file '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_schema(buf.str());
}

inline std::string schema_to_json(const Schema& schema) {
  nlohmann::json cols = nlohmann::json::array();
  for (const auto& d : schema) {
    if (d.is_integer()) {
      cols.push_back({{"name", d.name()},
                      {"kind", "integer"},
                      {"lo", d.lo()},
                      {"hi", d.hi()}});
    } else {
      cols.push_back(
          {{"name", d.name()}, {"kind", "categorical"}, {"categories", d.labels()}});
    }
  }
  return nlohmann::json{{"columns", cols}}.dump(2);
}

}  // namespace dpsynth
