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

#include <concepts>
#include <cstdint>
#include <limits>
#include <random>

namespace dpsynth {

// Every stochastic operation takes a caller-owned generator. mt19937_64 has a
// standard-mandated output sequence, so seeded runs are reproducible across
// toolchains. Generators must not be shared between concurrent callers.
using Rng = std::mt19937_64;

// A generator producing uniformly distributed 64-bit words.
template <class G>
concept BitSource64 =
    std::uniform_random_bit_generator<G> && (G::min() == 0) &&
    (G::max() == std::numeric_limits<std::uint64_t>::max());

constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline Rng make_rng(std::uint64_t seed) { return Rng(seed); }

// Independent stream `stream` of the master seed. Used wherever work is split
// into tasks that could run in parallel.
inline Rng derive_rng(std::uint64_t master_seed, std::uint64_t stream) {
  return Rng(splitmix64(master_seed ^ splitmix64(stream + 1)));
}

// Uniform on [0, 1) with 53 random bits. std::uniform_real_distribution is
// implementation-defined, so it is avoided to keep outputs portable.
template <BitSource64 G>
double uniform_unit(G& gen) {
  return static_cast<double>(gen() >> 11) * 0x1.0p-53;
}

}  // namespace dpsynth
