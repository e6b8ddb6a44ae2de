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

#include "ssip/common.hpp"

namespace ssip {

// SipHash-2-4 with a 128-bit key. Used as the keyed PRF behind filter index
// derivation and seed splitting; self-contained so the library stays
// header-only with no link dependencies.

namespace detail {

inline uint64_t load_le64(const uint8_t* p) {
  uint64_t v = 0;
  for (int i = 7; i >= 0; --i) v = (v << 8) | p[i];
  return v;
}

}  // namespace detail

inline uint64_t siphash24(const Seed16& key, BytesView data) {
  const uint64_t k0 = detail::load_le64(key.data());
  const uint64_t k1 = detail::load_le64(key.data() + 8);
  uint64_t v0 = k0 ^ 0x736f6d6570736575ULL;
  uint64_t v1 = k1 ^ 0x646f72616e646f6dULL;
  uint64_t v2 = k0 ^ 0x6c7967656e657261ULL;
  uint64_t v3 = k1 ^ 0x7465646279746573ULL;

  auto round = [&] {
    v0 += v1;
    v1 = std::rotl(v1, 13);
    v1 ^= v0;
    v0 = std::rotl(v0, 32);
    v2 += v3;
    v3 = std::rotl(v3, 16);
    v3 ^= v2;
    v0 += v3;
    v3 = std::rotl(v3, 21);
    v3 ^= v0;
    v2 += v1;
    v1 = std::rotl(v1, 17);
    v1 ^= v2;
    v2 = std::rotl(v2, 32);
  };

  const size_t n = data.size();
  const size_t end = n - (n % 8);
  for (size_t i = 0; i < end; i += 8) {
    const uint64_t m = detail::load_le64(data.data() + i);
    v3 ^= m;
    round();
    round();
    v0 ^= m;
  }

  uint64_t last = static_cast<uint64_t>(n & 0xff) << 56;
  for (size_t i = end; i < n; ++i) {
    last |= static_cast<uint64_t>(data[i]) << (8 * (i - end));
  }
  v3 ^= last;
  round();
  round();
  v0 ^= last;

  v2 ^= 0xff;
  round();
  round();
  round();
  round();
  return v0 ^ v1 ^ v2 ^ v3;
}

/// PRF over (key, label, counter); convenience for domain-separated streams.
inline uint64_t siphash24(const Seed16& key, std::string_view label,
                          uint64_t counter) {
  Bytes buf(label.begin(), label.end());
  for (int i = 0; i < 8; ++i) buf.push_back(uint8_t(counter >> (8 * i)));
  return siphash24(key, buf);
}

/// Derives a fresh 16-byte seed from (parent, label, counter).
inline Seed16 derive_seed(const Seed16& parent, std::string_view label,
                          uint64_t counter = 0) {
  Seed16 out;
  Bytes buf(label.begin(), label.end());
  for (int i = 0; i < 8; ++i) buf.push_back(uint8_t(counter >> (8 * i)));
  buf.push_back(0);
  const uint64_t lo = siphash24(parent, buf);
  buf.back() = 1;
  const uint64_t hi = siphash24(parent, buf);
  for (int i = 0; i < 8; ++i) {
    out[i] = uint8_t(lo >> (8 * i));
    out[8 + i] = uint8_t(hi >> (8 * i));
  }
  return out;
}

inline Seed16 seed_from_u64(uint64_t v) {
  Seed16 s{};
  for (int i = 0; i < 8; ++i) s[i] = uint8_t(v >> (8 * i));
  return s;
}

}  // namespace ssip
