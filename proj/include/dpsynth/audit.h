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
#include <concepts>
#include <cstdint>
#include <iomanip>
#include <limits>
#include <optional>
#include <sstream>
#include <span>
#include <string>
#include <vector>

#include "dpsynth/accountant.h"
#include "dpsynth/dataset.h"
#include "dpsynth/marginal.h"
#include "dpsynth/privatize.h"
#include "dpsynth/synth.h"
#include "json.hpp"

namespace dpsynth {

// Two-sided 99% standard normal quantile.
inline constexpr double kZ99 = 2.5758293035489004;

// Fewest Monte-Carlo trials an estimate may use.
inline constexpr std::uint64_t kMinAuditTrials = 10'000;

// A measurable output set: cell `cell` of the mechanism output lies in the
// half-open interval (lower, upper]. Out-of-range cells never match.
struct OutputEvent {
  std::string description;
  std::size_t cell = 0;
  double lower = -std::numeric_limits<double>::infinity();
  double upper = std::numeric_limits<double>::infinity();

  bool contains(std::span<const double> output) const {
    if (cell >= output.size()) return false;
    const double x = output[cell];
    return x > lower && x <= upper;
  }

  static OutputEvent left_tail(std::size_t cell, double threshold) {
    std::ostringstream d;
    d << "cell[" << cell << "] <= " << threshold;
    return {d.str(), cell, -std::numeric_limits<double>::infinity(), threshold};
  }

  static OutputEvent always() { return {"always", 0}; }
};

struct ProbabilityEstimate {
  std::uint64_t hits = 0;
  std::uint64_t trials = 0;
  double p = 0.0;
  double lower = 0.0;
  double upper = 1.0;

  bool covers(double value) const { return value >= lower && value <= upper; }
};

// Wilson score interval for a binomial proportion.
inline ProbabilityEstimate wilson_interval(std::uint64_t hits, std::uint64_t trials,
                                           double z = kZ99) {
  if (trials == 0) throw ArgumentError("no trials");
  const double n = static_cast<double>(trials);
  const double p = static_cast<double>(hits) / n;
  const double z2 = z * z;
  const double denom = 1.0 + z2 / n;
  const double centre = (p + z2 / (2.0 * n)) / denom;
  const double half = z * std::sqrt(p * (1.0 - p) / n + z2 / (4.0 * n * n)) / denom;
  return {hits, trials, p, std::max(0.0, centre - half), std::min(1.0, centre + half)};
}

// A randomized function of a dataset producing a real vector.
template <class M, class G>
concept Mechanism = requires(M& m, const TabularDataset& d, G& g) {
  { m(d, g) } -> std::convertible_to<std::vector<double>>;
};

// privatize_marginal as a stand-alone mechanism: each call noises the spec's
// marginal under a fresh accountant holding exactly epsilon. Setting
// `sensitivity` below 1 understates it and breaks the guarantee.
struct LaplaceMarginalMechanism {
  MarginalSpec spec;
  Epsilon epsilon{1.0};
  double sensitivity = 1.0;

  template <BitSource64 G>
  std::vector<double> operator()(const TabularDataset& data, G& gen) const {
    PrivacyAccountant accountant(epsilon);
    return privatize_marginal(build_marginal(data, spec), epsilon, accountant, gen, sensitivity)
        .noisy_counts;
  }
};

// Monte-Carlo estimates of Pr[M(data) in event] for several events, sharing
// the same trials.
template <class M, BitSource64 G>
  requires Mechanism<M, G>
std::vector<ProbabilityEstimate> estimate_event_probabilities(
    M& mechanism, const TabularDataset& data, std::span<const OutputEvent> events,
    std::uint64_t trials, G& gen, double z = kZ99) {
  if (trials < kMinAuditTrials) {
    throw ArgumentError("at least " + std::to_string(kMinAuditTrials) + " trials required");
  }
  std::vector<std::uint64_t> hits(events.size(), 0);
  for (std::uint64_t t = 0; t < trials; ++t) {
    const std::vector<double> out = mechanism(data, gen);
    for (std::size_t e = 0; e < events.size(); ++e) hits[e] += events[e].contains(out) ? 1 : 0;
  }
  std::vector<ProbabilityEstimate> est;
  est.reserve(events.size());
  for (auto h : hits) est.push_back(wilson_interval(h, trials, z));
  return est;
}

template <class M, BitSource64 G>
  requires Mechanism<M, G>
ProbabilityEstimate estimate_event_probability(M& mechanism, const TabularDataset& data,
                                               const OutputEvent& event, std::uint64_t trials,
                                               G& gen) {
  return estimate_event_probabilities(mechanism, data, std::span<const OutputEvent>(&event, 1),
                                      trials, gen)
      .front();
}

struct EventVerdict {
  OutputEvent event;
  ProbabilityEstimate on_d;
  ProbabilityEstimate on_d_prime;
  // Larger of the two point ratios p_D / p_D' and p_D' / p_D.
  double ratio = 1.0;
  // Larger of the two conservative ratios lower(p_a) / upper(p_b).
  double ratio_lower_bound = 0.0;
  bool pass = true;
};

struct DpAuditReport {
  double epsilon = 0.0;
  double slack = 0.0;
  std::uint64_t trials = 0;
  double bound = 0.0;  // e^epsilon * (1 + slack)
  std::vector<EventVerdict> events;
  bool pass = true;

  std::string to_text() const {
    std::ostringstream out;
    out << std::setprecision(10);
    out << "epsilon: " << epsilon << "\n";
    out << "trials_per_side: " << trials << "\n";
    out << "slack: " << slack << "\n";
    out << "bound: " << bound << "\n";
    for (std::size_t i = 0; i < events.size(); ++i) {
      const auto& v = events[i];
      const auto p = "event." + std::to_string(i) + ".";
      out << p << "description: " << v.event.description << "\n";
      out << p << "p_d: " << v.on_d.p << " [" << v.on_d.lower << ", " << v.on_d.upper << "]\n";
      out << p << "p_d_prime: " << v.on_d_prime.p << " [" << v.on_d_prime.lower << ", "
          << v.on_d_prime.upper << "]\n";
      out << p << "ratio: " << v.ratio << "\n";
      out << p << "ratio_lower_bound: " << v.ratio_lower_bound << "\n";
      out << p << "verdict: " << (v.pass ? "pass" : "fail") << "\n";
    }
    out << "verdict: " << (pass ? "pass" : "fail") << "\n";
    return out.str();
  }

  nlohmann::json to_json() const {
    nlohmann::json j{{"epsilon", epsilon}, {"trials_per_side", trials}, {"slack", slack},
                     {"bound", bound},     {"verdict", pass ? "pass" : "fail"}};
    j["events"] = nlohmann::json::array();
    for (const auto& v : events) {
      auto ratio = std::isfinite(v.ratio) ? nlohmann::json(v.ratio) : nlohmann::json("inf");
      j["events"].push_back({{"description", v.event.description},
                             {"p_d", v.on_d.p},
                             {"p_d_ci", {v.on_d.lower, v.on_d.upper}},
                             {"p_d_prime", v.on_d_prime.p},
                             {"p_d_prime_ci", {v.on_d_prime.lower, v.on_d_prime.upper}},
                             {"ratio", ratio},
                             {"ratio_lower_bound", v.ratio_lower_bound},
                             {"verdict", v.pass ? "pass" : "fail"}});
    }
    return j;
  }
};

inline bool same_rows(const TabularDataset& a, const TabularDataset& b) {
  if (a.schema() != b.schema() || a.num_rows() != b.num_rows()) return false;
  auto sorted = [](const TabularDataset& d) {
    std::vector<std::vector<std::uint32_t>> rows;
    for (std::size_t r = 0; r < d.num_rows(); ++r) {
      const auto bins = d.row_bins(r);
      rows.emplace_back(bins.begin(), bins.end());
    }
    std::sort(rows.begin(), rows.end());
    return rows;
  };
  return sorted(a) == sorted(b);
}

namespace internal {

inline double safe_ratio(double num, double den) {
  if (den > 0.0) return num / den;
  return num > 0.0 ? std::numeric_limits<double>::infinity() : 1.0;
}

}  // namespace internal

// Statistical falsifier for the epsilon-DP inequality on one neighboring
// pair. For every event both directions are checked: an event fails when the
// conservative ratio lower(p_a) / upper(p_b) exceeds e^epsilon * (1 + slack).
// The audit can refute a guarantee, never prove one.
//
// D and D' must be add/remove-one neighbors (identical datasets are accepted
// as the degenerate case).
template <class M, BitSource64 G>
  requires Mechanism<M, G>
DpAuditReport audit_dp(M& mechanism, const TabularDataset& d, const TabularDataset& d_prime,
                       std::span<const OutputEvent> events, Epsilon epsilon,
                       std::uint64_t trials, double slack, G& gen) {
  if (!are_neighbors(d, d_prime) && !same_rows(d, d_prime)) {
    throw ArgumentError("audit datasets must differ by exactly one row");
  }
  if (!(slack > 0.0 && slack <= 0.5)) throw ArgumentError("slack must lie in (0, 0.5]");
  if (events.empty()) throw ArgumentError("audit needs at least one event");

  const auto on_d = estimate_event_probabilities(mechanism, d, events, trials, gen);
  const auto on_d_prime = estimate_event_probabilities(mechanism, d_prime, events, trials, gen);

  DpAuditReport report;
  report.epsilon = epsilon.value();
  report.slack = slack;
  report.trials = trials;
  report.bound = std::exp(epsilon.value()) * (1.0 + slack);
  for (std::size_t i = 0; i < events.size(); ++i) {
    EventVerdict v{events[i], on_d[i], on_d_prime[i]};
    v.ratio = std::max(internal::safe_ratio(on_d[i].p, on_d_prime[i].p),
                       internal::safe_ratio(on_d_prime[i].p, on_d[i].p));
    v.ratio_lower_bound = std::max(on_d[i].lower / on_d_prime[i].upper,
                                   on_d_prime[i].lower / on_d[i].upper);
    v.pass = !(v.ratio_lower_bound > report.bound);
    report.pass = report.pass && v.pass;
    report.events.push_back(std::move(v));
  }
  return report;
}

// Left-tail events for auditing a count marginal on a neighboring pair. Every
// cell whose counts differ gets one event per threshold; if none differ, all
// cells do. Without explicit thresholds, {low - 0.5, low + 0.5, high + 0.5}
// around the two counts is used, which brackets the region where the
// Laplace likelihood ratio is extremal.
inline std::vector<OutputEvent> tail_events(const ContingencyTable& on_d,
                                            const ContingencyTable& on_d_prime,
                                            const std::vector<double>& thresholds = {}) {
  if (!(on_d.grid() == on_d_prime.grid())) throw ArgumentError("tables have different grids");
  std::vector<std::size_t> cells;
  for (std::size_t i = 0; i < on_d.counts().size(); ++i) {
    if (on_d.counts()[i] != on_d_prime.counts()[i]) cells.push_back(i);
  }
  if (cells.empty()) {
    for (std::size_t i = 0; i < on_d.counts().size(); ++i) cells.push_back(i);
  }
  std::vector<OutputEvent> events;
  for (auto cell : cells) {
    std::vector<double> ts = thresholds;
    if (ts.empty()) {
      const auto lo = static_cast<double>(std::min(on_d.counts()[cell], on_d_prime.counts()[cell]));
      const auto hi = static_cast<double>(std::max(on_d.counts()[cell], on_d_prime.counts()[cell]));
      ts = {lo - 0.5, lo + 0.5, hi + 0.5};
      std::sort(ts.begin(), ts.end());
      ts.erase(std::unique(ts.begin(), ts.end()), ts.end());
    }
    for (double t : ts) events.push_back(OutputEvent::left_tail(cell, t));
  }
  return events;
}

// Total L1 distance between exact and noisy counts.
inline double utility_l1(const ContingencyTable& truth, const NoisyMarginal& estimate) {
  if (!(truth.grid() == estimate.grid)) throw ArgumentError("utility_l1: shape mismatch");
  double l1 = 0.0;
  for (std::size_t i = 0; i < truth.counts().size(); ++i) {
    l1 += std::fabs(static_cast<double>(truth.counts()[i]) - estimate.noisy_counts[i]);
  }
  return l1;
}

// L1 distance after scaling the probabilities by `total` (default: the true
// row count).
inline double utility_l1(const ContingencyTable& truth, const ProbabilityTable& estimate,
                         std::optional<double> total = std::nullopt) {
  if (!(truth.grid() == estimate.grid())) throw ArgumentError("utility_l1: shape mismatch");
  const double scale = total.value_or(static_cast<double>(truth.total()));
  double l1 = 0.0;
  for (std::size_t i = 0; i < truth.counts().size(); ++i) {
    l1 += std::fabs(static_cast<double>(truth.counts()[i]) - scale * estimate.weights()[i]);
  }
  return l1;
}

// L1 distance between two exact tables on the same grid, e.g. a synthetic
// histogram against the original.
inline double utility_l1(const ContingencyTable& truth, const ContingencyTable& other) {
  if (!(truth.grid() == other.grid())) throw ArgumentError("utility_l1: shape mismatch");
  double l1 = 0.0;
  for (std::size_t i = 0; i < truth.counts().size(); ++i) {
    l1 += std::fabs(static_cast<double>(truth.counts()[i]) - static_cast<double>(other.counts()[i]));
  }
  return l1;
}

}  // namespace dpsynth
