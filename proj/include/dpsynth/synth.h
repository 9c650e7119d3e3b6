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
#include <cmath>
#include <cstdint>
#include <iomanip>
#include <numeric>
#include <sstream>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "dpsynth/accountant.h"
#include "dpsynth/dataset.h"
#include "dpsynth/marginal.h"
#include "dpsynth/privatize.h"
#include "dpsynth/random.h"
#include "json.hpp"

namespace dpsynth {

// Nonnegative weights summing to one over a marginal grid.
class ProbabilityTable {
 public:
  static constexpr double kSumTolerance = 1e-9;

  ProbabilityTable(MarginalGrid grid, std::vector<double> weights)
      : grid_(std::move(grid)), weights_(std::move(weights)) {
    if (weights_.size() != grid_.cell_count()) {
      throw ArgumentError("weight vector length does not match the grid");
    }
    double sum = 0.0;
    for (double w : weights_) {
      if (!(w >= 0.0) || !std::isfinite(w)) throw ArgumentError("weights must be finite and nonnegative");
      sum += w;
    }
    if (std::fabs(sum - 1.0) > kSumTolerance) throw ArgumentError("weights must sum to 1");
  }

  const MarginalGrid& grid() const { return grid_; }
  const MarginalSpec& spec() const { return grid_.spec(); }
  const std::vector<std::size_t>& dims() const { return grid_.dims(); }
  const std::vector<double>& weights() const { return weights_; }

 private:
  MarginalGrid grid_;
  std::vector<double> weights_;
};

// Clip at zero, then normalize to sum 1. If nothing survives clipping the
// result is uniform. Empty input yields an empty vector.
inline std::vector<double> postprocess_weights(std::span<const double> counts) {
  std::vector<double> w(counts.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < counts.size(); ++i) {
    w[i] = counts[i] > 0.0 ? counts[i] : 0.0;
    sum += w[i];
  }
  if (w.empty()) return w;
  if (!(sum > 0.0) || !std::isfinite(sum)) {
    std::fill(w.begin(), w.end(), 1.0 / static_cast<double>(w.size()));
    return w;
  }
  for (double& x : w) x /= sum;
  return w;
}

// Pure post-processing of a noisy marginal; consumes no budget.
inline ProbabilityTable postprocess(const NoisyMarginal& noisy) {
  return ProbabilityTable(noisy.grid, postprocess_weights(noisy.noisy_counts));
}

// Share of absolute noisy mass that clipping removed.
inline double clipped_mass_fraction(std::span<const double> counts) {
  double neg = 0.0, pos = 0.0;
  for (double c : counts) (c < 0.0 ? neg : pos) += std::fabs(c);
  return neg + pos > 0.0 ? neg / (neg + pos) : 0.0;
}

// Index of the cell holding quantile `u` in [0, 1): the first i with
// cumulative[i] > u * total. Zero-weight cells are never selected.
inline std::size_t pick_cell(std::span<const double> cumulative, double u) {
  const double total = cumulative.back();
  const auto it = std::upper_bound(cumulative.begin(), cumulative.end(), u * total);
  if (it != cumulative.end()) return static_cast<std::size_t>(it - cumulative.begin());
  // u * total rounded up to total: take the last cell with positive weight.
  std::size_t i = cumulative.size() - 1;
  while (i > 0 && cumulative[i - 1] == cumulative[i]) --i;
  return i;
}

// n independent draws from the table, decoded into rows over the marginal's
// columns. Post-processing: touches no accountant.
template <BitSource64 G>
TabularDataset sample_rows(const ProbabilityTable& table, std::size_t n, G& gen,
                           std::string name = {}) {
  const auto& weights = table.weights();
  std::vector<double> cumulative(weights.size());
  std::partial_sum(weights.begin(), weights.end(), cumulative.begin());
  DatasetBuilder builder(table.grid().domains(), std::move(name));
  builder.reserve(n);
  std::vector<std::uint32_t> bins(table.grid().arity());
  for (std::size_t r = 0; r < n; ++r) {
    const auto cell = table.grid().unflatten(pick_cell(cumulative, uniform_unit(gen)));
    std::copy(cell.begin(), cell.end(), bins.begin());
    builder.add_bins(bins);
  }
  return std::move(builder).build();
}

struct Provenance {
  std::string source;
  std::vector<MarginalSpec> specs;
  double epsilon = 0.0;
  std::uint64_t seed = 0;
};

struct SyntheticDataset {
  TabularDataset data;
  Provenance provenance;
};

struct SpecReport {
  MarginalSpec spec;
  double epsilon = 0.0;
  std::size_t cells = 0;
  std::size_t rows = 0;
  double clipped_mass_fraction = 0.0;
  bool uniform_fallback = false;
  // Data-independent expectation of sum |noise| = cells * sensitivity / eps.
  double expected_l1_noise = 0.0;
};

struct SynthesisReport {
  std::string source;
  std::uint64_t seed = 0;
  double total_epsilon = 0.0;
  std::size_t rows_requested = 0;
  std::vector<SpecReport> specs;
  std::vector<LedgerEntry> ledger;
  double spent = 0.0;

  std::string to_text() const {
    std::ostringstream out;
    out << std::setprecision(17);
    out << "source: " << source << "\n";
    out << "seed: " << seed << "\n";
    out << "total_epsilon: " << total_epsilon << "\n";
    out << "rows: " << rows_requested << "\n";
    out << "specs: " << specs.size() << "\n";
    for (std::size_t i = 0; i < specs.size(); ++i) {
      const auto& s = specs[i];
      const auto p = "spec." + std::to_string(i) + ".";
      out << p << "columns: " << s.spec.to_string() << "\n";
      out << p << "epsilon: " << s.epsilon << "\n";
      out << p << "cells: " << s.cells << "\n";
      out << p << "rows: " << s.rows << "\n";
      out << p << "clipped_mass_fraction: " << s.clipped_mass_fraction << "\n";
      out << p << "uniform_fallback: " << (s.uniform_fallback ? "true" : "false") << "\n";
      out << p << "expected_l1_noise: " << s.expected_l1_noise << "\n";
    }
    for (std::size_t i = 0; i < ledger.size(); ++i) {
      out << "ledger." << i << ": description=" << ledger[i].description
          << " epsilon=" << ledger[i].epsilon
          << " cumulative=" << ledger[i].cumulative << "\n";
    }
    out << "spent: " << spent << "\n";
    return out.str();
  }

  nlohmann::json to_json() const {
    nlohmann::json j;
    j["source"] = source;
    j["seed"] = seed;
    j["total_epsilon"] = total_epsilon;
    j["rows"] = rows_requested;
    j["specs"] = nlohmann::json::array();
    for (const auto& s : specs) {
      j["specs"].push_back({{"columns", s.spec.columns},
                            {"epsilon", s.epsilon},
                            {"cells", s.cells},
                            {"rows", s.rows},
                            {"clipped_mass_fraction", s.clipped_mass_fraction},
                            {"uniform_fallback", s.uniform_fallback},
                            {"expected_l1_noise", s.expected_l1_noise}});
    }
    j["ledger"] = nlohmann::json::array();
    for (const auto& e : ledger) {
      j["ledger"].push_back(
          {{"description", e.description}, {"epsilon", e.epsilon}, {"cumulative", e.cumulative}});
    }
    j["spent"] = spent;
    return j;
  }
};

struct GenerateResult {
  std::vector<SyntheticDataset> synthetic;
  SynthesisReport report;
  PrivacyAccountant accountant;
};

// End-to-end synthesis: the total budget is split evenly over the specs
// (sequential composition); each spec is cross-tabulated, noised, clipped and
// normalized, then sampled into its own table of n rows. Spec i draws all of
// its randomness from derive_rng(seed, i).
//
// Every spec is resolved before any budget is spent, so capacity and schema
// errors leave nothing charged.
inline GenerateResult generate(const TabularDataset& data, std::span<const MarginalSpec> specs,
                               Epsilon total_epsilon, std::size_t n, std::uint64_t seed,
                               std::size_t cell_cap = kDefaultCellCap) {
  if (specs.empty()) throw ArgumentError("no marginal specs given");
  for (const auto& spec : specs) resolve_marginal(data.schema(), spec, cell_cap);

  const Epsilon share(total_epsilon.value() / static_cast<double>(specs.size()));
  PrivacyAccountant accountant(total_epsilon);
  SynthesisReport report;
  report.source = data.name();
  report.seed = seed;
  report.total_epsilon = total_epsilon.value();
  report.rows_requested = n;
  std::vector<SyntheticDataset> out;

  for (std::size_t i = 0; i < specs.size(); ++i) {
    auto gen = derive_rng(seed, i);
    const auto table = build_marginal(data, specs[i], cell_cap);
    const auto noisy = privatize_marginal(table, share, accountant, gen);
    const auto probs = postprocess(noisy);
    auto rows = sample_rows(probs, n, gen, data.name() + "_synthetic");

    SpecReport sr;
    sr.spec = specs[i];
    sr.epsilon = accountant.ledger().back().epsilon;
    sr.cells = table.grid().cell_count();
    sr.rows = rows.num_rows();
    sr.clipped_mass_fraction = clipped_mass_fraction(noisy.noisy_counts);
    sr.uniform_fallback = std::none_of(noisy.noisy_counts.begin(), noisy.noisy_counts.end(),
                                       [](double c) { return c > 0.0; });
    sr.expected_l1_noise = static_cast<double>(sr.cells) * noisy.sensitivity / share.value();
    report.specs.push_back(std::move(sr));

    out.push_back({std::move(rows),
                   Provenance{data.name(), {specs[i]}, share.value(), seed}});
  }
  report.ledger = accountant.ledger();
  report.spent = accountant.spent();
  return {std::move(out), std::move(report), std::move(accountant)};
}

}  // namespace dpsynth
