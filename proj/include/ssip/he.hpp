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

#include <atomic>
#include <memory>

#include "ssip/field.hpp"
#include "ssip/serial.hpp"

namespace ssip {

// Homomorphic encryption with exactly the algebra the protocols need:
// ciphertext add/sub, plaintext scalar multiply, and one level of
// ciphertext-ciphertext multiply. Backends are pluggable behind HeBackend.

enum class CtLevel : uint8_t { kFresh = 0, kMultiplied = 1 };

inline constexpr uint8_t kHeTransparentTag = 1;
inline constexpr uint8_t kHeBgvTag = 2;

/// Opaque ciphertext. The three inline words belong to the owning backend
/// (the transparent backend keeps everything there to avoid allocation);
/// larger backends use `ext`.
struct Ciphertext {
  uint8_t backend = 0;
  CtLevel level = CtLevel::kFresh;
  uint64_t w0 = 0, w1 = 0, w2 = 0;
  Bytes ext;

  void serialize(ByteWriter& w) const {
    w.u8(backend);
    ByteWriter payload;
    payload.u8(uint8_t(level));
    payload.u64(w0);
    payload.u64(w1);
    payload.u64(w2);
    payload.bytes(ext);
    w.var_bytes(payload.data());
  }

  static Ciphertext deserialize(ByteReader& r) {
    Ciphertext ct;
    ct.backend = r.u8();
    Bytes payload = r.var_bytes();
    ByteReader pr(payload);
    const uint8_t lvl = pr.u8();
    if (lvl > 1) throw ParseError("bad ciphertext level");
    ct.level = CtLevel(lvl);
    ct.w0 = pr.u64();
    ct.w1 = pr.u64();
    ct.w2 = pr.u64();
    ct.ext = pr.bytes(pr.remaining());
    return ct;
  }
};

struct HePublicKey {
  uint8_t backend = 0;
  uint64_t p = 0;
  uint64_t key_id = 0;
  Bytes ext;

  void serialize(ByteWriter& w) const {
    w.u8(backend);
    w.u64(p);
    w.u64(key_id);
    w.var_bytes(ext);
  }
  static HePublicKey deserialize(ByteReader& r) {
    HePublicKey pk;
    pk.backend = r.u8();
    pk.p = r.u64();
    pk.key_id = r.u64();
    pk.ext = r.var_bytes();
    return pk;
  }
};

struct HeSecretKey {
  uint8_t backend = 0;
  uint64_t p = 0;
  uint64_t key_id = 0;
  Bytes ext;
};

struct HeKeyPair {
  HePublicKey pk;
  HeSecretKey sk;
};

/// Operation counters, used by scaling tests and benchmarks.
struct HeOpCounts {
  uint64_t enc = 0, dec = 0, add = 0, sub = 0, plain_mul = 0, ct_mul = 0;

  uint64_t total() const { return enc + dec + add + sub + plain_mul + ct_mul; }
};

class HeBackend {
 public:
  virtual ~HeBackend() = default;

  virtual uint8_t tag() const = 0;
  virtual std::string_view name() const = 0;
  /// False for test backends that carry plaintexts in the clear.
  virtual bool is_secure() const = 0;
  virtual const FieldModulus& modulus() const = 0;

  virtual HeKeyPair keygen(Rng& rng) const = 0;
  virtual Ciphertext encrypt(const HePublicKey& pk, FieldElement x,
                             Rng& rng) const = 0;
  virtual FieldElement decrypt(const HeSecretKey& sk,
                               const Ciphertext& ct) const = 0;

  virtual Ciphertext add(const Ciphertext& a, const Ciphertext& b) const = 0;
  virtual Ciphertext sub(const Ciphertext& a, const Ciphertext& b) const = 0;
  virtual Ciphertext plain_mul(const Ciphertext& a, FieldElement s) const = 0;
  /// Both operands must be fresh; the result is level `multiplied` and may
  /// not be multiplied again.
  virtual Ciphertext ct_mul(const Ciphertext& a, const Ciphertext& b) const = 0;

  /// sum_i weights[i] * cts[i]. Semantically a chain of plain_mul/add (and
  /// counted as such); backends may fuse the loop.
  virtual Ciphertext weighted_sum(std::span<const Ciphertext> cts,
                                  std::span<const uint64_t> weights) const {
    if (cts.empty() || cts.size() != weights.size()) {
      throw HeError("weighted_sum: size mismatch");
    }
    const FieldModulus& mod = modulus();
    Ciphertext acc = plain_mul(cts[0], FieldElement{weights[0], mod});
    for (size_t i = 1; i < cts.size(); ++i) {
      acc = add(acc, plain_mul(cts[i], FieldElement{weights[i], mod}));
    }
    return acc;
  }

  HeOpCounts counts() const {
    return HeOpCounts{enc_.load(), dec_.load(), add_.load(),
                      sub_.load(), pmul_.load(), cmul_.load()};
  }
  void reset_counts() const {
    enc_ = dec_ = add_ = sub_ = pmul_ = cmul_ = 0;
  }

 protected:
  void check_pair(const Ciphertext& a, const Ciphertext& b) const {
    if (a.backend != tag() || b.backend != tag()) {
      throw HeError("ciphertext belongs to a different backend");
    }
  }
  void check_level_mul(const Ciphertext& a, const Ciphertext& b) const {
    if (a.level != CtLevel::kFresh || b.level != CtLevel::kFresh) {
      throw LevelError();
    }
  }
  static CtLevel max_level(const Ciphertext& a, const Ciphertext& b) {
    return CtLevel(std::max(uint8_t(a.level), uint8_t(b.level)));
  }

  mutable std::atomic<uint64_t> enc_{0}, dec_{0}, add_{0}, sub_{0}, pmul_{0},
      cmul_{0};
};

// ----------------------------------------------------------------------------
// Transparent backend
// ----------------------------------------------------------------------------

/// Carries plaintexts alongside a nonce. NOT SECURE; it exists so protocol
/// logic can be tested and benchmarked independently of a lattice scheme.
/// Construction is explicit about that.
class TransparentBackend final : public HeBackend {
 public:
  explicit TransparentBackend(FieldModulus mod) : mod_(mod) {}

  uint8_t tag() const override { return kHeTransparentTag; }
  std::string_view name() const override {
    return "transparent (INSECURE test backend)";
  }
  bool is_secure() const override { return false; }
  const FieldModulus& modulus() const override { return mod_; }

  HeKeyPair keygen(Rng& rng) const override {
    uint64_t id = 0;
    while (id == 0) id = rng.next();
    HeKeyPair kp;
    kp.pk = HePublicKey{tag(), mod_.p, id, {}};
    kp.sk = HeSecretKey{tag(), mod_.p, id, {}};
    return kp;
  }

  Ciphertext encrypt(const HePublicKey& pk, FieldElement x,
                     Rng& rng) const override {
    if (pk.backend != tag()) throw HeError("public key backend mismatch");
    if (x.p != mod_.p || pk.p != mod_.p) throw ModulusMismatch();
    enc_.fetch_add(1, std::memory_order_relaxed);
    Ciphertext ct;
    ct.backend = tag();
    ct.level = CtLevel::kFresh;
    ct.w0 = pk.key_id;
    ct.w1 = x.value;
    ct.w2 = rng.next();  // nonce: two encryptions of x differ on the wire
    return ct;
  }

  FieldElement decrypt(const HeSecretKey& sk,
                       const Ciphertext& ct) const override {
    if (sk.backend != tag() || ct.backend != tag()) {
      throw HeError("decrypt: backend mismatch");
    }
    if (ct.w0 != sk.key_id) throw HeError("decrypt: key mismatch");
    dec_.fetch_add(1, std::memory_order_relaxed);
    return FieldElement{ct.w1, mod_.p};
  }

  Ciphertext add(const Ciphertext& a, const Ciphertext& b) const override {
    check_pair(a, b);
    check_keys(a, b);
    add_.fetch_add(1, std::memory_order_relaxed);
    Ciphertext ct = a;
    ct.level = max_level(a, b);
    uint64_t s = a.w1 + b.w1;
    if (s >= mod_.p) s -= mod_.p;
    ct.w1 = s;
    ct.w2 = mix(a.w2, b.w2, 0x9e3779b97f4a7c15ULL);
    return ct;
  }

  Ciphertext sub(const Ciphertext& a, const Ciphertext& b) const override {
    check_pair(a, b);
    check_keys(a, b);
    sub_.fetch_add(1, std::memory_order_relaxed);
    Ciphertext ct = a;
    ct.level = max_level(a, b);
    ct.w1 = a.w1 >= b.w1 ? a.w1 - b.w1 : a.w1 + mod_.p - b.w1;
    ct.w2 = mix(a.w2, b.w2, 0xc2b2ae3d27d4eb4fULL);
    return ct;
  }

  Ciphertext plain_mul(const Ciphertext& a, FieldElement s) const override {
    if (a.backend != tag()) throw HeError("plain_mul: backend mismatch");
    if (s.p != mod_.p) throw ModulusMismatch();
    pmul_.fetch_add(1, std::memory_order_relaxed);
    Ciphertext ct = a;
    ct.w1 = detail::mulmod_u64(a.w1, s.value, mod_.p);
    ct.w2 = mix(a.w2, s.value, 0x165667b19e3779f9ULL);
    return ct;
  }

  Ciphertext ct_mul(const Ciphertext& a, const Ciphertext& b) const override {
    check_pair(a, b);
    check_keys(a, b);
    check_level_mul(a, b);
    cmul_.fetch_add(1, std::memory_order_relaxed);
    Ciphertext ct = a;
    ct.level = CtLevel::kMultiplied;
    ct.w1 = detail::mulmod_u64(a.w1, b.w1, mod_.p);
    ct.w2 = mix(a.w2, b.w2, 0x27d4eb2f165667c5ULL);
    return ct;
  }

  Ciphertext weighted_sum(std::span<const Ciphertext> cts,
                          std::span<const uint64_t> weights) const override {
    if (cts.empty() || cts.size() != weights.size()) {
      throw HeError("weighted_sum: size mismatch");
    }
    // fused loop; products are < 2^92 so a 128-bit accumulator holds the sum
    // for any realistic length
    unsigned __int128 acc = 0;
    uint64_t nonce = 0;
    const uint64_t key = cts[0].w0;
    CtLevel level = cts[0].level;
    for (size_t i = 0; i < cts.size(); ++i) {
      const Ciphertext& ct = cts[i];
      if (ct.backend != tag()) throw HeError("weighted_sum: backend mismatch");
      if (ct.w0 != key) throw HeError("ciphertexts under different keys");
      level = CtLevel(std::max(uint8_t(level), uint8_t(ct.level)));
      acc += static_cast<unsigned __int128>(ct.w1) * (weights[i] % mod_.p);
      // keep headroom: one product is < 2^126, so reduce well before the top
      if (acc >> 120) acc %= mod_.p;
      nonce = mix(nonce, ct.w2, 0x165667b19e3779f9ULL);
    }
    pmul_.fetch_add(cts.size(), std::memory_order_relaxed);
    add_.fetch_add(cts.size() - 1, std::memory_order_relaxed);
    Ciphertext out = cts[0];
    out.level = level;
    out.w1 = uint64_t(acc % mod_.p);
    out.w2 = nonce;
    return out;
  }

 private:
  static uint64_t mix(uint64_t a, uint64_t b, uint64_t c) {
    uint64_t x = a ^ std::rotl(b, 17) ^ c;
    x ^= x >> 33;
    x *= 0xff51afd7ed558ccdULL;
    x ^= x >> 33;
    return x;
  }
  void check_keys(const Ciphertext& a, const Ciphertext& b) const {
    if (a.w0 != b.w0) throw HeError("ciphertexts under different keys");
  }

  FieldModulus mod_;
};

}  // namespace ssip
