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
#include <limits>
#include <numeric>
#include <span>
#include <string>
#include <string_view>
#include <unordered_set>
#include <utility>
#include <vector>

#include "dpsynth/dataset.h"
#include "dpsynth/error.h"
#include "dpsynth/schema.h"

namespace dpsynth {

inline constexpr std::size_t kDefaultCellCap = 10'000'000;

// The ordered column names of a k-way marginal.
struct MarginalSpec {
  std::vector<std::string> columns;

  // "Age,Occupation" -> {"Age", "Occupation"}.
  static MarginalSpec parse(std::string_view joined) {
    MarginalSpec spec;
    while (true) {
      const auto comma = joined.find(',');
      spec.columns.emplace_back(trim_ascii(joined.substr(0, comma)));
      if (comma == std::string_view::npos) break;
      joined.remove_prefix(comma + 1);
    }
    return spec;
  }

  std::string to_string() const {
    std::string out;
    for (std::size_t i = 0; i < columns.size(); ++i) {
      if (i > 0) out += ',';
      out += columns[i];
    }
    return out;
  }

  friend bool operator==(const MarginalSpec&, const MarginalSpec&) = default;
};

// Product of `dims`, throwing CapacityError when it exceeds `cap` (or
// overflows).
inline std::size_t checked_cell_count(std::span<const std::size_t> dims,
                                      std::size_t cap) {
  std::size_t cells = 1;
  std::string product;
  bool overflow = false;
  for (auto d : dims) {
    if (!product.empty()) product += " x ";
    product += std::to_string(d);
    if (d != 0 && cells > std::numeric_limits<std::size_t>::max() / d) {
      overflow = true;
    } else {
      cells *= d;
    }
  }
  if (overflow || cells > cap) {
    throw CapacityError("marginal needs " + product + " = " +
                            (overflow ? std::string("overflowing") : std::to_string(cells)) +
                            " cells, above the cap of " + std::to_string(cap),
                        cap);
  }
  return cells;
}

// The bin grid of a marginal: resolved column domains and row-major layout.
// Shared by exact, noisy and normalized tables.
class MarginalGrid {
 public:
  MarginalGrid(MarginalSpec spec, std::vector<ColumnDomain> domains,
               std::size_t cell_cap = kDefaultCellCap)
      : spec_(std::move(spec)), domains_(std::move(domains)) {
    if (spec_.columns.size() != domains_.size() || domains_.empty()) {
      throw ArgumentError("marginal spec and domains disagree");
    }
    for (std::size_t i = 0; i < domains_.size(); ++i) {
      if (domains_[i].name() != spec_.columns[i]) {
        throw ArgumentError("marginal spec and domains disagree on column " +
                            std::to_string(i));
      }
      dims_.push_back(domains_[i].bin_count());
    }
    cells_ = checked_cell_count(dims_, cell_cap);
  }

  const MarginalSpec& spec() const { return spec_; }
  const std::vector<ColumnDomain>& domains() const { return domains_; }
  const std::vector<std::size_t>& dims() const { return dims_; }
  std::size_t cell_count() const { return cells_; }
  std::size_t arity() const { return dims_.size(); }

  std::size_t flat_index(std::span<const std::size_t> bins) const {
    std::size_t flat = 0;
    for (std::size_t i = 0; i < dims_.size(); ++i) flat = flat * dims_[i] + bins[i];
    return flat;
  }

  std::vector<std::size_t> unflatten(std::size_t flat) const {
    std::vector<std::size_t> bins(dims_.size());
    for (std::size_t i = dims_.size(); i-- > 0;) {
      bins[i] = flat % dims_[i];
      flat /= dims_[i];
    }
    return bins;
  }

  // Display labels of one cell, one per column.
  std::vector<std::string> cell_labels(std::size_t flat) const {
    const auto bins = unflatten(flat);
    std::vector<std::string> out;
    out.reserve(bins.size());
    for (std::size_t i = 0; i < bins.size(); ++i) out.push_back(domains_[i].label(bins[i]));
    return out;
  }

  friend bool operator==(const MarginalGrid& a, const MarginalGrid& b) {
    return a.spec_ == b.spec_ && a.domains_ == b.domains_;
  }

 private:
  MarginalSpec spec_;
  std::vector<ColumnDomain> domains_;
  std::vector<std::size_t> dims_;
  std::size_t cells_ = 0;
};

// Resolves `spec` against a schema. Columns must be distinct, present and at
// least one.
inline MarginalGrid resolve_marginal(const Schema& schema, const MarginalSpec& spec,
                                     std::size_t cell_cap = kDefaultCellCap) {
  if (spec.columns.empty()) throw ArgumentError("marginal spec names no columns");
  std::unordered_set<std::string> seen;
  std::vector<ColumnDomain> domains;
  for (const auto& name : spec.columns) {
    if (!seen.insert(name).second) {
      throw ArgumentError("marginal spec repeats column '" + name + "'");
    }
    const auto it = std::find_if(schema.begin(), schema.end(),
                                 [&](const ColumnDomain& d) { return d.name() == name; });
    if (it == schema.end()) {
      throw ArgumentError("marginal spec names unknown column '" + name + "'");
    }
    domains.push_back(*it);
  }
  return MarginalGrid(spec, std::move(domains), cell_cap);
}

// Exact counts over a marginal grid.
class ContingencyTable {
 public:
  ContingencyTable(MarginalGrid grid, std::vector<std::uint64_t> counts)
      : grid_(std::move(grid)), counts_(std::move(counts)) {
    if (counts_.size() != grid_.cell_count()) {
      throw ArgumentError("count vector length does not match the grid");
    }
    total_ = std::accumulate(counts_.begin(), counts_.end(), std::uint64_t{0});
  }

  const MarginalGrid& grid() const { return grid_; }
  const MarginalSpec& spec() const { return grid_.spec(); }
  const std::vector<std::size_t>& dims() const { return grid_.dims(); }
  const std::vector<std::uint64_t>& counts() const { return counts_; }
  std::uint64_t total() const { return total_; }

  std::uint64_t at(std::span<const std::size_t> bins) const {
    return counts_[grid_.flat_index(bins)];
  }
  std::uint64_t at(std::initializer_list<std::size_t> bins) const {
    return at(std::span<const std::size_t>(bins.begin(), bins.size()));
  }

  // Count at a cell addressed by typed values, e.g. {17, "Adm-clerical"}.
  std::uint64_t at_values(std::span<const CellValue> values) const {
    if (values.size() != grid_.arity()) throw ArgumentError("wrong number of values");
    std::vector<std::size_t> bins(values.size());
    for (std::size_t i = 0; i < values.size(); ++i) {
      const auto b = grid_.domains()[i].bin_index(values[i]);
      if (!b) throw ArgumentError("value outside the domain of '" + spec().columns[i] + "'");
      bins[i] = *b;
    }
    return at(bins);
  }
  std::uint64_t at_values(std::initializer_list<CellValue> values) const {
    return at_values(std::span<const CellValue>(values.begin(), values.size()));
  }

 private:
  MarginalGrid grid_;
  std::vector<std::uint64_t> counts_;
  std::uint64_t total_ = 0;
};

// Cross-tabulates the spec's columns: counts[t] = rows whose spec columns bin
// to tuple t.
inline ContingencyTable build_marginal(const TabularDataset& data,
                                       const MarginalSpec& spec,
                                       std::size_t cell_cap = kDefaultCellCap) {
  auto grid = resolve_marginal(data.schema(), spec, cell_cap);
  std::vector<std::size_t> cols;
  for (const auto& name : spec.columns) cols.push_back(data.column_index(name));
  std::vector<std::uint64_t> counts(grid.cell_count(), 0);
  const auto& dims = grid.dims();
  for (std::size_t r = 0; r < data.num_rows(); ++r) {
    std::size_t flat = 0;
    for (std::size_t i = 0; i < cols.size(); ++i) flat = flat * dims[i] + data.bin(r, cols[i]);
    ++counts[flat];
  }
  return ContingencyTable(std::move(grid), std::move(counts));
}

// Sums a row-major array over every axis not in `keep` (kept axes retain
// their relative order). Works for exact and noisy tables alike.
template <class T>
std::vector<T> project(std::span<const std::size_t> dims, std::span<const T> values,
                       std::span<const std::size_t> keep) {
  std::size_t cells = 1;
  for (auto d : dims) cells *= d;
  if (values.size() != cells) throw ArgumentError("value array does not match dims");
  std::vector<std::size_t> kept_dims;
  for (auto axis : keep) {
    if (axis >= dims.size()) throw ArgumentError("projection axis out of range");
    kept_dims.push_back(dims[axis]);
  }
  std::size_t out_cells = 1;
  for (auto d : kept_dims) out_cells *= d;
  std::vector<T> out(out_cells, T{});
  std::vector<std::size_t> idx(dims.size(), 0);
  for (std::size_t flat = 0; flat < cells; ++flat) {
    std::size_t target = 0;
    for (std::size_t k = 0; k < keep.size(); ++k) target = target * kept_dims[k] + idx[keep[k]];
    out[target] += values[flat];
    for (std::size_t a = dims.size(); a-- > 0;) {
      if (++idx[a] < dims[a]) break;
      idx[a] = 0;
    }
  }
  return out;
}

// Exact count of rows with lo <= column <= hi, by a scan over the rows.
inline std::uint64_t range_query(const TabularDataset& data, std::string_view column,
                                 std::int64_t lo, std::int64_t hi) {
  const auto col = data.column_index(column);
  const auto& domain = data.schema()[col];
  if (!domain.is_integer()) {
    throw UnsupportedQueryError("range query on categorical column '" +
                                std::string(column) + "'");
  }
  if (lo > hi) throw ArgumentError("range query with lo > hi");
  const auto first = std::max(lo, domain.lo());
  const auto last = std::min(hi, domain.hi());
  if (first > last) return 0;
  const auto b0 = static_cast<std::uint64_t>(first - domain.lo());
  const auto b1 = static_cast<std::uint64_t>(last - domain.lo());
  std::uint64_t n = 0;
  for (std::size_t r = 0; r < data.num_rows(); ++r) {
    const auto b = data.bin(r, col);
    n += (b >= b0 && b <= b1) ? 1 : 0;
  }
  return n;
}

// Same query answered from a one-way table.
inline std::uint64_t range_query(const ContingencyTable& one_way, std::int64_t lo,
                                 std::int64_t hi) {
  if (one_way.grid().arity() != 1) throw ArgumentError("range query needs a one-way table");
  const auto& domain = one_way.grid().domains()[0];
  if (!domain.is_integer()) {
    throw UnsupportedQueryError("range query on categorical column '" + domain.name() + "'");
  }
  if (lo > hi) throw ArgumentError("range query with lo > hi");
  const auto first = std::max(lo, domain.lo());
  const auto last = std::min(hi, domain.hi());
  if (first > last) return 0;
  const auto b0 = static_cast<std::size_t>(static_cast<std::uint64_t>(first - domain.lo()));
  const auto b1 = static_cast<std::size_t>(static_cast<std::uint64_t>(last - domain.lo()));
  std::uint64_t n = 0;
  for (auto b = b0; b <= b1; ++b) n += one_way.counts()[b];
  return n;
}

}  // namespace dpsynth
