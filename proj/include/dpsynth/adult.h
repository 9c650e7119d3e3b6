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

// Helpers for the UCI Adult census file (adult.data, 1994 census extract).

#include <algorithm>
#include <cstdint>
#include <istream>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "dpsynth/csv.h"
#include "dpsynth/error.h"
#include "dpsynth/schema.h"

namespace dpsynth::adult {

inline constexpr std::string_view kSourceUrl =
    "https://archive.ics.uci.edu/ml/machine-learning-databases/adult/adult.data";

inline const std::vector<std::string>& column_names() {
  static const std::vector<std::string> kColumns = {
      "Age",          "Workclass",     "fnlwgt",       "Education",
      "Education-Num", "Marital Status", "Occupation",  "Relationship",
      "Race",         "Sex",           "Capital Gain", "Capital Loss",
      "Hours per week", "Country",     "Target"};
  return kColumns;
}

inline const std::vector<std::string>& occupations() {
  static const std::vector<std::string> kOccupations = {
      "Adm-clerical",      "Armed-Forces",    "Craft-repair",
      "Exec-managerial",   "Farming-fishing", "Handlers-cleaners",
      "Machine-op-inspct", "Other-service",   "Priv-house-serv",
      "Prof-specialty",    "Protective-serv", "Sales",
      "Tech-support",      "Transport-moving"};
  return kOccupations;
}

inline constexpr std::int64_t kMinAge = 17;
inline constexpr std::int64_t kMaxAge = 90;
inline constexpr std::size_t kMinRows = 30000;

// Age and Occupation, the columns of the census crosstab. Rows whose
// occupation is unknown ("?") fall outside the domain and are rejected.
inline Schema schema() {
  return {ColumnDomain::bounded_integer("Age", kMinAge, kMaxAge),
          ColumnDomain::categorical("Occupation", occupations())};
}

// Converts either the raw UCI layout (no header, ", " separators) or an
// already-normalized CSV into a comma-separated file with a header row and
// trimmed fields.
inline std::string normalize(std::istream& in) {
  CsvReader reader(in, ',');
  std::ostringstream out;
  write_csv_row(out, column_names());
  bool first = true;
  while (auto record = reader.next()) {
    for (auto& f : *record) f = std::string(trim_ascii(f));
    if (first) {
      first = false;
      if (*record == column_names()) continue;
    }
    write_csv_row(out, *record);
  }
  return out.str();
}

struct Validation {
  bool ok = true;
  std::string failed_check;
  std::string detail;
  std::size_t rows = 0;
};

// Sanity checks on a normalized file. The first failure is reported by name:
// header, column-count, age-range, occupation-categories or row-count.
inline Validation validate(std::istream& in) {
  auto fail = [](std::string check, std::string detail, std::size_t rows) {
    return Validation{false, std::move(check), std::move(detail), rows};
  };
  CsvReader reader(in, ',');
  const auto header = reader.next();
  if (!header || *header != column_names()) {
    return fail("header", "first line is not the expected 15-column header", 0);
  }
  const auto occ_col = static_cast<std::size_t>(
      std::find(column_names().begin(), column_names().end(), "Occupation") -
      column_names().begin());
  std::set<std::string> seen_occupations;
  std::size_t rows = 0;
  while (auto record = reader.next()) {
    ++rows;
    if (record->size() != column_names().size()) {
      return fail("column-count",
                  "line " + std::to_string(reader.line_number()) + " has " +
                      std::to_string(record->size()) + " fields",
                  rows);
    }
    const auto age = parse_int64((*record)[0]);
    if (!age || *age < kMinAge || *age > kMaxAge) {
      return fail("age-range",
                  "line " + std::to_string(reader.line_number()) + " has age '" +
                      (*record)[0] + "'",
                  rows);
    }
    if ((*record)[occ_col] != "?") seen_occupations.insert((*record)[occ_col]);
  }
  const std::set<std::string> expected(occupations().begin(), occupations().end());
  if (seen_occupations != expected) {
    return fail("occupation-categories",
                "found " + std::to_string(seen_occupations.size()) +
                    " distinct occupations, expected the 14 census categories",
                rows);
  }
  if (rows < kMinRows) {
    return fail("row-count",
                std::to_string(rows) + " rows, expected at least " + std::to_string(kMinRows),
                rows);
  }
  return {true, {}, {}, rows};
}

}  // namespace dpsynth::adult
