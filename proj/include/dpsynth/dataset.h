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

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <fstream>
#include <istream>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "dpsynth/csv.h"
#include "dpsynth/error.h"
#include "dpsynth/schema.h"

namespace dpsynth {

// An immutable table whose every cell is in-domain. Cells are stored as bin
// indices in row-major order; typed values are decoded on demand. Row order
// carries no meaning.
class TabularDataset {
 public:
  TabularDataset(Schema schema, std::string name = {})
      : schema_(std::move(schema)), name_(std::move(name)) {}

  const Schema& schema() const { return schema_; }
  const std::string& name() const { return name_; }
  std::size_t num_columns() const { return schema_.size(); }
  std::size_t num_rows() const {
    return schema_.empty() ? 0 : bins_.size() / schema_.size();
  }
  bool empty() const { return bins_.empty(); }

  std::optional<std::size_t> find_column(std::string_view name) const {
    for (std::size_t i = 0; i < schema_.size(); ++i) {
      if (schema_[i].name() == name) return i;
    }
    return std::nullopt;
  }

  std::size_t column_index(std::string_view name) const {
    if (auto i = find_column(name)) return *i;
    throw ArgumentError("unknown column '" + std::string(name) + "'");
  }

  std::uint32_t bin(std::size_t row, std::size_t col) const {
    return bins_[row * schema_.size() + col];
  }

  CellValue value(std::size_t row, std::size_t col) const {
    return schema_[col].decode(bin(row, col));
  }

  std::span<const std::uint32_t> row_bins(std::size_t row) const {
    return std::span<const std::uint32_t>(bins_).subspan(row * schema_.size(),
                                                         schema_.size());
  }

  // Neighbor obtained by deleting one row.
  TabularDataset without_row(std::size_t row) const {
    if (row >= num_rows()) throw ArgumentError("row index out of range");
    TabularDataset out(schema_, name_);
    out.bins_.reserve(bins_.size() - schema_.size());
    const auto w = static_cast<std::ptrdiff_t>(schema_.size());
    const auto cut = bins_.begin() + static_cast<std::ptrdiff_t>(row) * w;
    out.bins_.insert(out.bins_.end(), bins_.begin(), cut);
    out.bins_.insert(out.bins_.end(), cut + w, bins_.end());
    return out;
  }

 private:
  friend class DatasetBuilder;

  Schema schema_;
  std::string name_;
  std::vector<std::uint32_t> bins_;
};

// Accumulates rows, rejecting (and counting) any row with an out-of-domain
// cell.
class DatasetBuilder {
 public:
  explicit DatasetBuilder(Schema schema, std::string name = {})
      : data_(std::move(schema), std::move(name)) {
    if (data_.schema_.empty()) throw ArgumentError("schema has no columns");
  }

  bool add_row(std::span<const CellValue> cells) {
    const auto& schema = data_.schema_;
    if (cells.size() != schema.size()) {
      ++rejected_;
      return false;
    }
    scratch_.clear();
    for (std::size_t c = 0; c < cells.size(); ++c) {
      const auto b = schema[c].bin_index(cells[c]);
      if (!b) {
        ++rejected_;
        return false;
      }
      scratch_.push_back(static_cast<std::uint32_t>(*b));
    }
    data_.bins_.insert(data_.bins_.end(), scratch_.begin(), scratch_.end());
    return true;
  }

  bool add_row(std::initializer_list<CellValue> cells) {
    return add_row(std::span<const CellValue>(cells.begin(), cells.size()));
  }

  // Row given directly as bin indices.
  bool add_bins(std::span<const std::uint32_t> bins) {
    const auto& schema = data_.schema_;
    if (bins.size() != schema.size()) {
      ++rejected_;
      return false;
    }
    for (std::size_t c = 0; c < bins.size(); ++c) {
      if (bins[c] >= schema[c].bin_count()) {
        ++rejected_;
        return false;
      }
    }
    data_.bins_.insert(data_.bins_.end(), bins.begin(), bins.end());
    return true;
  }

  void reserve(std::size_t rows) {
    data_.bins_.reserve(rows * data_.schema_.size());
  }

  std::size_t rejected() const { return rejected_; }
  std::size_t accepted() const { return data_.num_rows(); }

  TabularDataset build() && { return std::move(data_); }

 private:
  TabularDataset data_;
  std::size_t rejected_ = 0;
  std::vector<std::uint32_t> scratch_;
};

struct CsvOptions {
  char delimiter = ',';
};

struct IngestResult {
  TabularDataset dataset;
  std::size_t rejected_rows = 0;
};

// Reads delimiter-separated text with a header row. Columns not named in the
// schema are dropped; a row with a missing, unparseable or out-of-domain cell
// is rejected and counted.
inline IngestResult ingest_csv(std::istream& in, const Schema& schema,
                               const CsvOptions& options = {},
                               std::string name = {}) {
  if (!in) throw IoError("unreadable input stream");
  CsvReader reader(in, options.delimiter);
  const auto header = reader.next();
  if (!header) throw IngestionError("input has no header row");

  std::vector<std::size_t> source_column(schema.size());
  for (std::size_t c = 0; c < schema.size(); ++c) {
    const auto it = std::find_if(header->begin(), header->end(), [&](const auto& h) {
      return trim_ascii(h) == schema[c].name();
    });
    if (it == header->end()) {
      throw IngestionError("header is missing schema column '" +
                           schema[c].name() + "'");
    }
    source_column[c] = static_cast<std::size_t>(it - header->begin());
  }

  DatasetBuilder builder(schema, std::move(name));
  std::vector<std::uint32_t> bins(schema.size());
  std::size_t rejected = 0;
  while (auto record = reader.next()) {
    bool ok = record->size() == header->size();
    for (std::size_t c = 0; ok && c < schema.size(); ++c) {
      const auto b = schema[c].parse_bin((*record)[source_column[c]]);
      if (b) {
        bins[c] = static_cast<std::uint32_t>(*b);
      } else {
        ok = false;
      }
    }
    if (ok) {
      builder.add_bins(bins);
    } else {
      ++rejected;
    }
  }
  return {std::move(builder).build(), rejected};
}

inline IngestResult ingest_csv_file(const std::string& path, const Schema& schema,
                                    const CsvOptions& options = {}) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open input file '" + path + "'");
  auto stem = path.substr(path.find_last_of('/') + 1);
  if (const auto dot = stem.rfind('.'); dot != std::string::npos && dot > 0) {
    stem.resize(dot);
  }
  return ingest_csv(in, schema, options, stem);
}

// Writes a header of column names and one decoded row per record.
inline void write_csv(std::ostream& out, const TabularDataset& data,
                      char delimiter = ',') {
  std::vector<std::string> fields;
  for (const auto& d : data.schema()) fields.push_back(d.name());
  write_csv_row(out, fields, delimiter);
  for (std::size_t r = 0; r < data.num_rows(); ++r) {
    for (std::size_t c = 0; c < data.num_columns(); ++c) {
      fields[c] = data.schema()[c].label(data.bin(r, c));
    }
    write_csv_row(out, fields, delimiter);
  }
}

// True iff the two datasets share a schema and one is the other plus exactly
// one row (add/remove-one neighbors).
inline bool are_neighbors(const TabularDataset& a, const TabularDataset& b) {
  if (a.schema() != b.schema()) return false;
  const auto& big = a.num_rows() > b.num_rows() ? a : b;
  const auto& small = a.num_rows() > b.num_rows() ? b : a;
  if (big.num_rows() != small.num_rows() + 1) return false;
  auto sorted_rows = [](const TabularDataset& d) {
    std::vector<std::vector<std::uint32_t>> rows;
    rows.reserve(d.num_rows());
    for (std::size_t r = 0; r < d.num_rows(); ++r) {
      const auto bins = d.row_bins(r);
      rows.emplace_back(bins.begin(), bins.end());
    }
    std::sort(rows.begin(), rows.end());
    return rows;
  };
  const auto big_rows = sorted_rows(big);
  const auto small_rows = sorted_rows(small);
  // Multiset inclusion with exactly one leftover.
  std::size_t i = 0, j = 0, extra = 0;
  while (i < big_rows.size()) {
    if (j < small_rows.size() && big_rows[i] == small_rows[j]) {
      ++i;
      ++j;
    } else {
      ++extra;
      ++i;
    }
  }
  return extra == 1 && j == small_rows.size();
}

}  // namespace dpsynth
