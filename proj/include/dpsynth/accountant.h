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

#include <cmath>
#include <iomanip>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "dpsynth/error.h"
#include "dpsynth/laplace.h"
#include "json.hpp"

namespace dpsynth {

struct LedgerEntry {
  std::string description;
  double epsilon = 0.0;
  // Budget spent after this entry.
  double cumulative = 0.0;
};

// Sequential-composition budget tracker with an append-only ledger.
//
// Invariants: spent() is the left-to-right sum of the ledger epsilons and
// never exceeds budget(). A refused charge leaves the accountant untouched.
//
// Not thread-safe: concurrent callers must serialize charges.
class PrivacyAccountant {
 public:
  // Relative slack for floating-point rounding in budget splits such as n
  // charges of budget/n. A charge that overshoots by at most this much is
  // recorded as exactly the remaining budget.
  static constexpr double kRoundingSlack = 1e-9;

  explicit PrivacyAccountant(Epsilon budget) : budget_(budget.value()) {}

  double budget() const { return budget_; }
  double spent() const { return spent_; }
  double remaining() const { return budget_ - spent_; }
  const std::vector<LedgerEntry>& ledger() const { return ledger_; }

  // The epsilon that would be recorded for a request, or nullopt if the
  // request must be refused.
  std::optional<double> admissible(double epsilon) const {
    if (!(epsilon > 0.0) || !std::isfinite(epsilon)) return std::nullopt;
    if (spent_ + epsilon <= budget_) return epsilon;
    if (epsilon - remaining() > kRoundingSlack * budget_) return std::nullopt;
    // Within rounding of the remaining budget: record the exact remainder,
    // nudged down until the running sum stays within the budget.
    double e = remaining();
    while (e > 0.0 && spent_ + e > budget_) e = std::nextafter(e, 0.0);
    if (!(e > 0.0)) return std::nullopt;
    return e;
  }

  bool can_charge(Epsilon epsilon) const { return admissible(epsilon.value()).has_value(); }

  // Appends an entry or throws BudgetExceededError with the remaining budget.
  const LedgerEntry& charge(std::string description, Epsilon epsilon) {
    const auto e = admissible(epsilon.value());
    if (!e) {
      std::ostringstream msg;
      msg << std::setprecision(17) << "privacy budget exhausted: requested "
          << epsilon.value() << ", remaining " << remaining() << " of "
          << budget_;
      throw BudgetExceededError(msg.str(), epsilon.value(), remaining());
    }
    spent_ += *e;
    ledger_.push_back({std::move(description), *e, spent_});
    return ledger_.back();
  }

  // Non-throwing variant; false means refused and nothing changed.
  bool try_charge(std::string description, Epsilon epsilon) {
    if (!can_charge(epsilon)) return false;
    charge(std::move(description), epsilon);
    return true;
  }

  // Human-readable ledger: one line per entry plus totals.
  std::string to_text() const {
    std::ostringstream out;
    out << std::setprecision(17);
    out << "budget: " << budget_ << "\n";
    out << "entries: " << ledger_.size() << "\n";
    for (std::size_t i = 0; i < ledger_.size(); ++i) {
      out << "entry." << i << ": description=" << ledger_[i].description
          << " epsilon=" << ledger_[i].epsilon
          << " cumulative=" << ledger_[i].cumulative << "\n";
    }
    out << "spent: " << spent_ << "\n";
    out << "remaining: " << remaining() << "\n";
    return out.str();
  }

  nlohmann::json to_json() const {
    nlohmann::json entries = nlohmann::json::array();
    for (const auto& e : ledger_) {
      entries.push_back({{"description", e.description},
                         {"epsilon", e.epsilon},
                         {"cumulative", e.cumulative}});
    }
    return {{"budget", budget_}, {"spent", spent_}, {"entries", entries}};
  }

  // Rebuilds an accountant by replaying the stored entries, so a tampered or
  // inconsistent ledger is rejected rather than trusted.
  static PrivacyAccountant from_json(const nlohmann::json& doc) {
    try {
      PrivacyAccountant acc(Epsilon(doc.at("budget").get<double>()));
      for (const auto& e : doc.at("entries")) {
        const auto eps = e.at("epsilon").get<double>();
        if (!acc.admissible(eps) || *acc.admissible(eps) != eps) {
          throw IngestionError("ledger entries exceed the recorded budget");
        }
        acc.charge(e.at("description").get<std::string>(), Epsilon(eps));
      }
      return acc;
    } catch (const nlohmann::json::exception& e) {
      throw IngestionError(std::string("malformed ledger: ") + e.what());
    } catch (const ArgumentError& e) {
      throw IngestionError(std::string("malformed ledger: ") + e.what());
    }
  }

 private:
  double budget_;
  double spent_ = 0.0;
  std::vector<LedgerEntry> ledger_;
};

}  // namespace dpsynth
