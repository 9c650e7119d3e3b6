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

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "dpsynth/accountant.h"
#include "dpsynth/laplace.h"
#include "dpsynth/marginal.h"

namespace dpsynth {

// Laplace-noised counts of a marginal. Counts may be negative.
struct NoisyMarginal {
  MarginalGrid grid;
  std::vector<double> noisy_counts;
  Epsilon epsilon_charged;
  double sensitivity = 1.0;

  const MarginalSpec& spec() const { return grid.spec(); }
  const std::vector<std::size_t>& dims() const { return grid.dims(); }
};

// Adds independent Lap(sensitivity / epsilon) noise to every cell. The cells
// partition the rows, so by parallel composition the whole table costs one
// epsilon and gets exactly one ledger entry.
//
// Affordability is checked before any noise is drawn; on refusal the
// accountant and the generator are left untouched.
//
// `sensitivity` is 1 for count marginals. Other values exist so the audit can
// exercise a mechanism that understates it.
template <BitSource64 G>
NoisyMarginal privatize_marginal(const ContingencyTable& table, Epsilon epsilon,
                                 PrivacyAccountant& accountant, G& gen,
                                 double sensitivity = 1.0) {
  if (!(sensitivity > 0.0) || !std::isfinite(sensitivity)) {
    throw ArgumentError("sensitivity must be positive and finite");
  }
  if (!accountant.can_charge(epsilon)) {
    // Throws with the remaining budget.
    accountant.charge("marginal(" + table.spec().to_string() + ")", epsilon);
  }
  std::vector<double> noisy(table.counts().size());
  for (std::size_t i = 0; i < noisy.size(); ++i) {
    noisy[i] = laplace_mech(static_cast<double>(table.counts()[i]), sensitivity,
                            epsilon, gen);
  }
  accountant.charge("marginal(" + table.spec().to_string() + ")", epsilon);
  return {table.grid(), std::move(noisy), epsilon, sensitivity};
}

}  // namespace dpsynth
