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

#include <cmath>
#include <optional>

#include "ssip/rng.hpp"

namespace ssip {

/// Default 46-bit prime: 2^46 - 21. Sized to the plaintext space the
/// protocols assume; overridable per session.
inline constexpr uint64_t kDefaultPrime = 70368744177643ULL;

/// Default fixed-point fraction bits. Leaves ~20 bits of headroom in the
/// default field for sums of up to 2^16 products of values with |x| <= 4.
inline constexpr uint32_t kDefaultFractionBits = 12;

namespace detail {

inline uint64_t mulmod_u64(uint64_t a, uint64_t b, uint64_t p) {
  return static_cast<uint64_t>((static_cast<unsigned __int128>(a) * b) % p);
}

inline uint64_t powmod_u64(uint64_t base, uint64_t exp, uint64_t p) {
  uint64_t acc = 1 % p;
  base %= p;
  while (exp) {
    if (exp & 1) acc = mulmod_u64(acc, base, p);
    base = mulmod_u64(base, base, p);
    exp >>= 1;
  }
  return acc;
}

/// Deterministic Miller-Rabin for 64-bit integers.
inline bool is_prime_u64(uint64_t n) {
  if (n < 2) return false;
  for (uint64_t q : {2ULL, 3ULL, 5ULL, 7ULL, 11ULL, 13ULL, 17ULL, 19ULL,
                     23ULL, 29ULL, 31ULL, 37ULL}) {
    if (n == q) return true;
    if (n % q == 0) return false;
  }
  uint64_t d = n - 1;
  int r = 0;
  while ((d & 1) == 0) {
    d >>= 1;
    ++r;
  }
  for (uint64_t a : {2ULL, 3ULL, 5ULL, 7ULL, 11ULL, 13ULL, 17ULL, 19ULL,
                     23ULL, 29ULL, 31ULL, 37ULL}) {
    uint64_t x = powmod_u64(a, d, n);
    if (x == 1 || x == n - 1) continue;
    bool witness = true;
    for (int i = 0; i < r - 1; ++i) {
      x = mulmod_u64(x, x, n);
      if (x == n - 1) {
        witness = false;
        break;
      }
    }
    if (witness) return false;
  }
  return true;
}

}  // namespace detail

/// Prime modulus of the working field F_p. The production default is 46 bits;
/// smaller primes are accepted so protocol internals can be exercised
/// exhaustively at toy sizes (e.g. p = 97).
struct FieldModulus {
  uint64_t p;

  explicit FieldModulus(uint64_t prime = kDefaultPrime) : p(prime) {
    if (p < 3 || p >= (1ULL << 63)) {
      throw SsipError("field modulus out of range");
    }
    if (!detail::is_prime_u64(p)) {
      throw SsipError("field modulus is not prime");
    }
  }

  bool operator==(const FieldModulus&) const = default;
};

/// Element of F_p; immutable value type carrying its modulus.
struct FieldElement {
  uint64_t value = 0;
  uint64_t p = kDefaultPrime;

  FieldElement() = default;
  FieldElement(uint64_t v, const FieldModulus& m) : value(v % m.p), p(m.p) {}
  FieldElement(uint64_t v, uint64_t prime) : value(v % prime), p(prime) {}

  FieldModulus modulus() const {
    FieldModulus m;
    m.p = p;  // already validated at construction of the original modulus
    return m;
  }

  bool operator==(const FieldElement& o) const {
    return value == o.value && p == o.p;
  }

 private:
  friend struct FieldModulus;
};

namespace detail {
inline void check_same(const FieldElement& a, const FieldElement& b) {
  if (a.p != b.p) throw ModulusMismatch();
}
}  // namespace detail

inline FieldElement operator+(FieldElement a, FieldElement b) {
  detail::check_same(a, b);
  uint64_t s = a.value + b.value;  // p < 2^63, no overflow
  if (s >= a.p) s -= a.p;
  return FieldElement{s, a.p};
}

inline FieldElement operator-(FieldElement a, FieldElement b) {
  detail::check_same(a, b);
  uint64_t s = a.value >= b.value ? a.value - b.value
                                  : a.value + a.p - b.value;
  return FieldElement{s, a.p};
}

inline FieldElement operator*(FieldElement a, FieldElement b) {
  detail::check_same(a, b);
  return FieldElement{detail::mulmod_u64(a.value, b.value, a.p), a.p};
}

inline FieldElement operator-(FieldElement a) {
  return FieldElement{a.value == 0 ? 0 : a.p - a.value, a.p};
}

enum class FieldOp { kAdd, kSub, kMul, kNeg };

inline FieldElement field_op(FieldElement a, FieldElement b, FieldOp kind) {
  switch (kind) {
    case FieldOp::kAdd:
      return a + b;
    case FieldOp::kSub:
      return a - b;
    case FieldOp::kMul:
      return a * b;
    case FieldOp::kNeg:
      return -a;
  }
  throw SsipError("unknown field op");
}

/// Uniform element of the full field.
inline FieldElement sample_uniform(Rng& rng, const FieldModulus& m) {
  return FieldElement{rng.below(m.p), m.p};
}

/// Uniform element of [0, upper] (inclusive). Used for the range-restricted
/// membership masks, which must not wrap modulo p when a value in [0, k] is
/// added.
inline FieldElement sample_uniform_upto(Rng& rng, const FieldModulus& m,
                                        uint64_t upper) {
  if (upper >= m.p) throw SsipError("mask range exceeds field");
  return FieldElement{rng.below(upper + 1), m.p};
}

// ----------------------------------------------------------------------------
// Fixed-point encoding of reals into F_p
// ----------------------------------------------------------------------------

/// Headroom budget the codec is validated against: results remain decodable
/// for sums of up to `max_terms` products of inputs with |x| <= max_abs.
struct CodecBudget {
  uint64_t max_terms = uint64_t{1} << 16;
  double max_abs = 4.0;
};

/// Maps reals to field elements as round(x * 2^f) with negatives embedded in
/// the upper half of F_p. After one multiplication values carry scale 2^(2f);
/// decode takes the scale level explicitly.
class FixedPointCodec {
 public:
  /// Throws unless 2f + ceil(log2(max_terms * max_abs^2)) < log2(p).
  /// Pass std::nullopt to skip the headroom check (toy configurations).
  FixedPointCodec(const FieldModulus& m,
                  uint32_t fraction_bits = kDefaultFractionBits,
                  std::optional<CodecBudget> budget = CodecBudget{})
      : mod_(m), f_(fraction_bits) {
    if (f_ >= 62) throw SsipError("fraction_bits too large");
    if (budget) {
      const double need =
          2.0 * f_ +
          std::ceil(std::log2(double(budget->max_terms) * budget->max_abs *
                              budget->max_abs));
      if (need >= std::log2(double(mod_.p))) {
        throw SsipError(
            "fixed-point headroom check failed: 2f + log2(terms*max^2) must "
            "be below log2(p)");
      }
    }
  }

  uint32_t fraction_bits() const { return f_; }
  const FieldModulus& modulus() const { return mod_; }

  FieldElement encode(double x) const {
    const double scaled = x * double(uint64_t{1} << f_);
    if (!(std::abs(scaled) < double(mod_.p) / 2.0)) {
      throw CodecOverflow("value out of fixed-point range");
    }
    const int64_t q = llround(scaled);
    if (q >= 0) return FieldElement{uint64_t(q), mod_.p};
    return FieldElement{mod_.p - uint64_t(-q), mod_.p};
  }

  /// scale_levels is 1 for freshly encoded values and 2 after one
  /// encoded-by-encoded multiplication.
  double decode(FieldElement e, int scale_levels = 1) const {
    if (e.p != mod_.p) throw ModulusMismatch();
    if (scale_levels != 1 && scale_levels != 2) {
      throw SsipError("scale_levels must be 1 or 2");
    }
    const double centered = e.value <= (mod_.p - 1) / 2
                                ? double(e.value)
                                : -double(mod_.p - e.value);
    return centered / std::pow(2.0, double(f_) * scale_levels);
  }

 private:
  FieldModulus mod_;
  uint32_t f_;
};

}  // namespace ssip
