/*
 * Copyright 2026 The defnoc Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 * http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <cstdint>
#include <limits>
#include <stdexcept>

namespace defnoc {

/// splitmix64 generator. Every stochastic decision in a simulation draws
/// from one of these, so a seed fully determines a run.
class Rng {
 public:
  constexpr explicit Rng(std::uint64_t seed = 0) noexcept : state_(seed) {}

  constexpr std::uint64_t next() noexcept {
    state_ += 0x9E3779B97F4A7C15ull;
    std::uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
  }

  /// Uniform integer in [0, n). The draw is split into floor((2^64-1)/n)
  /// wide buckets counted from the top of the range; a draw falling into
  /// the partial bucket past n is rejected and redrawn. At least one draw
  /// is always consumed, including for n == 1.
  std::uint64_t below(std::uint64_t n) {
    if (n == 0) throw std::invalid_argument("Rng::below: n must be >= 1");
    const std::uint64_t bucket = std::numeric_limits<std::uint64_t>::max() / n;
    for (;;) {
      const std::uint64_t r = next() / bucket;
      if (r < n) return r;
    }
  }

  /// Uniform double in [0, 1) from the top 53 bits.
  double uniform() noexcept {
    return static_cast<double>(next() >> 11) * 0x1.0p-53;
  }

  bool coin() noexcept { return (next() >> 63) != 0; }

  constexpr std::uint64_t state() const noexcept { return state_; }

  friend constexpr bool operator==(const Rng&, const Rng&) = default;

 private:
  std::uint64_t state_;
};

/// Derives an independent stream seed; used to keep traffic and router
/// arbitration decoupled so the same seed offers the same load to every
/// network configuration.
constexpr std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) noexcept {
  Rng r(seed ^ (stream * 0xD1B54A32D192ED03ull));
  r.next();
  return r.next();
}

}  // namespace defnoc
