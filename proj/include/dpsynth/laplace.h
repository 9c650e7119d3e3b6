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
#include <string>

#include "dpsynth/error.h"
#include "dpsynth/random.h"

namespace dpsynth {

// A privacy-loss bound. Always positive and finite.
class Epsilon {
 public:
  explicit Epsilon(double value) : value_(value) {
    if (!(value > 0.0) || !std::isfinite(value)) {
      throw ArgumentError("epsilon must be positive and finite, got " +
                          std::to_string(value));
    }
  }

  double value() const { return value_; }

  friend bool operator==(Epsilon, Epsilon) = default;

 private:
  double value_;
};

// One draw from Laplace(0, scale) by inversion: u ~ U(-1/2, 1/2),
// x = -scale * sgn(u) * ln(1 - 2|u|).
//
// The sampler works on IEEE doubles and inherits the floating-point
// side-channel caveats of textbook Laplace noise (Mironov 2012). Snapping or
// discrete Laplace noise is not implemented.
template <BitSource64 G>
double laplace_sample(double scale, G& gen) {
  if (!(scale > 0.0) || !std::isfinite(scale)) {
    throw ArgumentError("Laplace scale must be positive and finite, got " +
                        std::to_string(scale));
  }
  double u;
  do {
    u = uniform_unit(gen) - 0.5;
  } while (u == -0.5);
  const double magnitude = -scale * std::log1p(-2.0 * std::fabs(u));
  return u < 0.0 ? -magnitude : (u > 0.0 ? magnitude : 0.0);
}

// value + Lap(sensitivity / epsilon).
template <BitSource64 G>
double laplace_mech(double value, double sensitivity, Epsilon epsilon, G& gen) {
  if (!(sensitivity > 0.0) || !std::isfinite(sensitivity)) {
    throw ArgumentError("sensitivity must be positive and finite");
  }
  return value + laplace_sample(sensitivity / epsilon.value(), gen);
}

// Analytic CDF of Laplace(mu, scale).
inline double laplace_cdf(double x, double mu, double scale) {
  const double z = (x - mu) / scale;
  return z < 0.0 ? 0.5 * std::exp(z) : 1.0 - 0.5 * std::exp(-z);
}

}  // namespace dpsynth
