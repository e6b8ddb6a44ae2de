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
#include <utility>

#include "ssip/field.hpp"
#include "ssip/serial.hpp"

namespace ssip {

/// Shared Bloom/garbled-Bloom filter geometry. Both parties of a session must
/// hold identical FilterParams for index derivation to agree.
struct FilterParams {
  uint64_t m = 0;       ///< slot count
  uint32_t k = 0;       ///< hashes per key
  Seed16 hash_seed{};

  bool operator==(const FilterParams&) const = default;

  void serialize(ByteWriter& w) const {
    w.u64(m);
    w.u32(k);
    w.bytes(hash_seed);
  }
  static FilterParams deserialize(ByteReader& r) {
    FilterParams p;
    p.m = r.u64();
    p.k = r.u32();
    auto s = r.bytes(16);
    std::copy(s.begin(), s.end(), p.hash_seed.begin());
    if (p.m < p.k || p.k < 1) throw ParseError("bad filter params");
    return p;
  }
};

/// Optimal geometry for `n` keys at the given false-positive rate:
/// m = ceil(n |ln fpr| / (ln 2)^2), k = max(1, round((m/n) ln 2)).
inline FilterParams params_for(uint64_t n, double target_fpr,
                               const Seed16& hash_seed = {}) {
  if (n < 1 || target_fpr <= 0.0 || target_fpr >= 1.0) {
    throw SsipError("params_for: need n >= 1 and 0 < fpr < 1");
  }
  const double ln2 = std::log(2.0);
  FilterParams p;
  p.m = uint64_t(std::ceil(double(n) * std::abs(std::log(target_fpr)) /
                           (ln2 * ln2)));
  p.k = uint32_t(std::max<int64_t>(1, llround(double(p.m) / double(n) * ln2)));
  if (p.m < p.k) p.m = p.k;
  p.hash_seed = hash_seed;
  return p;
}

/// k pairwise-distinct indices in [0, m), derived from (seed, key, counter)
/// by a keyed PRF with mask-and-reject truncation; repeats are skipped so the
/// GBF sum identity holds exactly even when raw hashes collide.
inline std::vector<uint64_t> derive_indices(BytesView key,
                                            const FilterParams& params) {
  if (params.m < params.k || params.k < 1) {
    throw SsipError("derive_indices: need m >= k >= 1");
  }
  std::vector<uint64_t> out;
  out.reserve(params.k);
  Bytes buf(key.begin(), key.end());
  const size_t tail = buf.size();
  buf.resize(tail + 8);
  const uint64_t mask =
      params.m == 1 ? 0 : (~uint64_t{0} >> std::countl_zero(params.m - 1));
  for (uint64_t counter = 0; out.size() < params.k; ++counter) {
    for (int i = 0; i < 8; ++i) buf[tail + i] = uint8_t(counter >> (8 * i));
    const uint64_t cand = siphash24(params.hash_seed, buf) & mask;
    if (cand >= params.m) continue;
    if (std::find(out.begin(), out.end(), cand) != out.end()) continue;
    out.push_back(cand);
  }
  return out;
}

// ----------------------------------------------------------------------------
// Bloom filter
// ----------------------------------------------------------------------------

class BloomFilter {
 public:
  explicit BloomFilter(FilterParams params)
      : params_(std::move(params)), words_((params_.m + 63) / 64, 0) {}

  const FilterParams& params() const { return params_; }

  bool bit(uint64_t i) const { return (words_[i >> 6] >> (i & 63)) & 1; }
  void set_bit(uint64_t i) { words_[i >> 6] |= uint64_t{1} << (i & 63); }

  uint64_t popcount() const {
    uint64_t n = 0;
    for (uint64_t w : words_) n += std::popcount(w);
    return n;
  }

  void serialize(ByteWriter& w) const {
    params_.serialize(w);
    Bytes raw((params_.m + 7) / 8);
    for (uint64_t i = 0; i < params_.m; ++i) {
      if (bit(i)) raw[i >> 3] |= uint8_t(1u << (i & 7));
    }
    w.bytes(raw);
  }

  static BloomFilter deserialize(ByteReader& r) {
    BloomFilter bf(FilterParams::deserialize(r));
    Bytes raw = r.bytes((bf.params_.m + 7) / 8);
    for (uint64_t i = 0; i < bf.params_.m; ++i) {
      if ((raw[i >> 3] >> (i & 7)) & 1) bf.set_bit(i);
    }
    return bf;
  }

 private:
  FilterParams params_;
  std::vector<uint64_t> words_;
};

inline BloomFilter bf_build(const std::vector<Bytes>& keys,
                            const FilterParams& params) {
  BloomFilter bf(params);
  for (const auto& key : keys) {
    for (uint64_t i : derive_indices(key, params)) bf.set_bit(i);
  }
  return bf;
}

/// Number of set bits among the key's k derived indices; in [0, k].
inline uint32_t bf_index_sum(const BloomFilter& bf, BytesView key) {
  uint32_t sum = 0;
  for (uint64_t i : derive_indices(key, bf.params())) sum += bf.bit(i);
  return sum;
}

inline bool bf_contains(const BloomFilter& bf, BytesView key) {
  return bf_index_sum(bf, key) == bf.params().k;
}

// ----------------------------------------------------------------------------
// Garbled Bloom filter
// ----------------------------------------------------------------------------

/// m field elements where the k slots of a stored key sum to its payload and
/// every other slot is uniformly random.
class GarbledBloomFilter {
 public:
  GarbledBloomFilter(FilterParams params, FieldModulus mod)
      : params_(std::move(params)), mod_(mod), slots_(params_.m, 0) {}

  const FilterParams& params() const { return params_; }
  const FieldModulus& modulus() const { return mod_; }

  FieldElement slot(uint64_t i) const { return FieldElement{slots_[i], mod_}; }
  uint64_t raw_slot(uint64_t i) const { return slots_[i]; }
  const std::vector<uint64_t>& raw_slots() const { return slots_; }
  void set_slot(uint64_t i, FieldElement v) {
    if (v.p != mod_.p) throw ModulusMismatch();
    slots_[i] = v.value;
  }

  void serialize(ByteWriter& w) const {
    params_.serialize(w);
    w.u64(mod_.p);
    for (uint64_t v : slots_) w.u64(v);
  }

  static GarbledBloomFilter deserialize(ByteReader& r) {
    FilterParams params = FilterParams::deserialize(r);
    FieldModulus mod(r.u64());
    GarbledBloomFilter gbf(params, mod);
    for (uint64_t i = 0; i < params.m; ++i) gbf.slots_[i] = r.u64();
    return gbf;
  }

 private:
  FilterParams params_;
  FieldModulus mod_;
  std::vector<uint64_t> slots_;
};

/// Builds a GBF over distinct keys, processing pairs in the given order.
/// For each key the last still-free slot absorbs the residual
/// y - sum(other slots); slots fixed by earlier keys are reused. Throws
/// InsertionFailure when a key has no free slot left (caller re-seeds).
inline GarbledBloomFilter gbf_build(
    const std::vector<std::pair<Bytes, FieldElement>>& pairs,
    const FilterParams& params, const FieldModulus& mod, Rng& rng) {
  GarbledBloomFilter gbf(params, mod);
  std::vector<uint8_t> fixed(params.m, 0);

  for (size_t idx = 0; idx < pairs.size(); ++idx) {
    const auto& [key, value] = pairs[idx];
    if (value.p != mod.p) throw ModulusMismatch();
    const auto indices = derive_indices(key, params);

    uint64_t last_free = params.m;  // sentinel
    for (uint64_t i : indices) {
      if (!fixed[i]) last_free = i;
    }
    if (last_free == params.m) {
      throw InsertionFailure("garbled Bloom filter: no free slot for pair " +
                             std::to_string(idx));
    }

    FieldElement rest{0, mod};
    for (uint64_t i : indices) {
      if (i == last_free) continue;
      if (!fixed[i]) {
        gbf.set_slot(i, sample_uniform(rng, mod));
        fixed[i] = 1;
      }
      rest = rest + gbf.slot(i);
    }
    gbf.set_slot(last_free, value - rest);
    fixed[last_free] = 1;
  }

  for (uint64_t i = 0; i < params.m; ++i) {
    if (!fixed[i]) gbf.set_slot(i, sample_uniform(rng, mod));
  }
  return gbf;
}

/// Sum of the key's k slots: the stored payload for inserted keys, an
/// unstructured value otherwise.
inline FieldElement gbf_sum(const GarbledBloomFilter& gbf, BytesView key) {
  FieldElement acc{0, gbf.modulus()};
  for (uint64_t i : derive_indices(key, gbf.params())) acc = acc + gbf.slot(i);
  return acc;
}

/// Analytic Bloom filter false-positive rate (1 - e^(-kn/m))^k.
inline double bf_analytic_fpr(const FilterParams& params, uint64_t n) {
  const double x = 1.0 - std::exp(-double(params.k) * double(n) /
                                  double(params.m));
  return std::pow(x, double(params.k));
}

}  // namespace ssip
