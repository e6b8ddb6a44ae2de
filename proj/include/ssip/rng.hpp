// Copyright 2026 The SSIP Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <bit>
#include <random>

#include "ssip/siphash.hpp"

namespace ssip {

/// Seeded deterministic RNG. mt19937_64 is fully specified by the standard,
/// so the same seed produces the same stream on every platform; `below` uses
/// mask-and-reject so draws are unbiased and stdlib-distribution-independent.
class Rng {
 public:
  explicit Rng(uint64_t seed) : seed_(seed), gen_(seed) {}
  explicit Rng(const Seed16& seed)
      : Rng(siphash24(seed, to_bytes("rng-seed"))) {}

  uint64_t next() { return gen_(); }

  /// Uniform in [0, bound). bound must be nonzero.
  uint64_t below(uint64_t bound) {
    if (bound == 0) throw SsipError("Rng::below called with bound 0");
    if (bound == 1) return 0;
    const uint64_t mask = ~uint64_t{0} >> std::countl_zero(bound - 1);
    for (;;) {
      const uint64_t v = gen_() & mask;
      if (v < bound) return v;
    }
  }

  bool bit() { return gen_() & 1; }

  void fill(std::span<uint8_t> out) {
    size_t i = 0;
    while (i < out.size()) {
      uint64_t v = gen_();
      for (int b = 0; b < 8 && i < out.size(); ++b, ++i) {
        out[i] = uint8_t(v >> (8 * b));
      }
    }
  }

  Seed16 seed16() {
    Seed16 s;
    fill(s);
    return s;
  }

  /// Independent labeled stream derived from the original seed. Forking does
  /// not consume or depend on draws made from this instance.
  Rng fork(std::string_view label, uint64_t counter = 0) const {
    return Rng(siphash24(seed_from_u64(seed_), label, counter));
  }

 private:
  uint64_t seed_;
  std::mt19937_64 gen_;
};

}  // namespace ssip
