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

#include <set>

#include "ssip/binning.hpp"
#include "ssip/filters.hpp"
#include "ssip/he.hpp"
#include "ssip/ot.hpp"
#include "ssip/transport.hpp"

namespace ssip {

// Shared protocol machinery: session configuration, the hello/header
// handshake, and the secure component product that converts an XOR-shared
// membership bit plus an additively shared value into additive shares of
// bit * value.

enum class ProtocolKind : uint8_t { kSsip1 = 1, kSsip2 = 2, kBatched = 3 };

inline const char* protocol_name(ProtocolKind k) {
  switch (k) {
    case ProtocolKind::kSsip1:
      return "ssip1";
    case ProtocolKind::kSsip2:
      return "ssip2";
    case ProtocolKind::kBatched:
      return "batched";
  }
  return "?";
}

enum class ClientHashMode : uint8_t { kCuckoo = 0, kTwoChoice = 1 };

struct BatchConfig {
  uint32_t m_bins = 0;  ///< 0 = ceil(1.3 t) + 1
  uint32_t k_bin = 3;
  uint32_t beta = 0;  ///< 0 = observed max load rounded to a power of two
  uint32_t eta = 0;   ///< 0 = 1 for cuckoo, ceil(3t/m_bins) for 2-choice
  ClientHashMode mode = ClientHashMode::kCuckoo;
  uint32_t max_relocations = 500;
  uint32_t stash_cap = 16;
};

struct ProtocolConfig {
  ProtocolKind protocol = ProtocolKind::kSsip2;
  uint64_t p = kDefaultPrime;
  double fpr = 0x1p-30;
  std::optional<uint32_t> k_override;  ///< force the filter hash count
  BatchConfig batch;
  uint64_t seed = 1;    ///< drives session id, party RNGs, filter seeds
  bool reveal = false;  ///< server disclosess its shares to the client

  Seed16 session_seed() const { return seed_from_u64(seed); }
  uint64_t session_id() const {
    return siphash24(session_seed(), "session-id", 0);
  }
};

struct KeyValue {
  Bytes key;
  FieldElement value;
};

using ClientInput = std::vector<KeyValue>;
using ServerInput = std::vector<KeyValue>;

inline void validate_input(const std::vector<KeyValue>& input,
                           const FieldModulus& mod) {
  std::set<Bytes> seen;
  for (const auto& kv : input) {
    require_real_key(kv.key);
    if (kv.value.p != mod.p) throw ModulusMismatch();
    if (!seen.insert(kv.key).second) {
      throw SsipError("input keys must be distinct");
    }
  }
}

// ----------------------------------------------------------------------------
// Results
// ----------------------------------------------------------------------------

struct ComponentOutcome {
  ComponentTag tag;
  FieldElement share;
  bool dummy = false;  ///< batched padding component (client side only)
  /// Client side: index into the original ClientInput, SIZE_MAX for dummies.
  size_t input_index = SIZE_MAX;
};

struct PartyResult {
  std::vector<ComponentOutcome> outcomes;
  FieldElement aggregate;  ///< sum over all outcome shares
  TranscriptMetrics metrics;

  /// Filled on the client when the server revealed its shares.
  std::optional<FieldElement> revealed_aggregate;
  std::vector<FieldElement> revealed_component_values;
};

struct RunResult {
  PartyResult client;
  PartyResult server;
};

// ----------------------------------------------------------------------------
// Handshake messages
// ----------------------------------------------------------------------------

struct ClientHello {
  ProtocolKind protocol;
  uint64_t p = 0;
  uint32_t t = 0;
  uint64_t package_fingerprint = 0;  ///< S-SIP1 offline cache, 0 = none
  uint64_t session_id = 0;

  Bytes encode() const {
    ByteWriter w;
    w.u8(uint8_t(protocol));
    w.u64(p);
    w.u32(t);
    w.u64(package_fingerprint);
    w.u64(session_id);
    return w.take();
  }
  static ClientHello decode(BytesView payload) {
    ByteReader r(payload);
    ClientHello h;
    h.protocol = ProtocolKind(r.u8());
    h.p = r.u64();
    h.t = r.u32();
    h.package_fingerprint = r.u64();
    h.session_id = r.u64();
    r.expect_done();
    return h;
  }
};

/// Batch section of the session header: everything the client needs to mirror
/// the server's binning and per-bin filters.
struct BatchHeader {
  uint32_t m_bins = 0;
  uint32_t k_bin = 0;
  uint32_t beta = 0;
  uint32_t eta = 0;
  ClientHashMode mode = ClientHashMode::kCuckoo;
  uint32_t max_relocations = 500;
  uint32_t stash_cap = 16;
  Seed16 bin_seed{};
  uint64_t bin_filter_m = 0;
  uint32_t bin_filter_k = 0;
  std::vector<Seed16> bin_filter_seeds;  ///< one per bin

  BinningParams binning_params() const {
    return BinningParams{m_bins,  k_bin,           beta,
                         eta,     bin_seed,        max_relocations,
                         stash_cap};
  }
  FilterParams bin_filter_params(uint32_t bin) const {
    return FilterParams{bin_filter_m, bin_filter_k, bin_filter_seeds.at(bin)};
  }
};

struct SessionHeader {
  ProtocolKind protocol;
  uint64_t p = 0;
  uint64_t n = 0;
  uint8_t client_owns_keys = 0;  ///< 0: server keypair (S-SIP1), 1: client
  FilterParams params;           ///< main filter geometry
  uint64_t package_fingerprint = 0;
  uint8_t use_cached_package = 0;
  std::optional<BatchHeader> batch;

  Bytes encode() const {
    ByteWriter w;
    w.u8(uint8_t(protocol));
    w.u64(p);
    w.u64(n);
    w.u8(client_owns_keys);
    params.serialize(w);
    w.u64(package_fingerprint);
    w.u8(use_cached_package);
    w.u8(batch ? 1 : 0);
    if (batch) {
      w.u32(batch->m_bins);
      w.u32(batch->k_bin);
      w.u32(batch->beta);
      w.u32(batch->eta);
      w.u8(uint8_t(batch->mode));
      w.u32(batch->max_relocations);
      w.u32(batch->stash_cap);
      w.bytes(batch->bin_seed);
      w.u64(batch->bin_filter_m);
      w.u32(batch->bin_filter_k);
      for (const auto& s : batch->bin_filter_seeds) w.bytes(s);
    }
    return w.take();
  }

  static SessionHeader decode(BytesView payload) {
    ByteReader r(payload);
    SessionHeader h;
    h.protocol = ProtocolKind(r.u8());
    h.p = r.u64();
    h.n = r.u64();
    h.client_owns_keys = r.u8();
    h.params = FilterParams::deserialize(r);
    h.package_fingerprint = r.u64();
    h.use_cached_package = r.u8();
    if (r.u8()) {
      BatchHeader b;
      b.m_bins = r.u32();
      b.k_bin = r.u32();
      b.beta = r.u32();
      b.eta = r.u32();
      b.mode = ClientHashMode(r.u8());
      b.max_relocations = r.u32();
      b.stash_cap = r.u32();
      auto seed = r.bytes(16);
      std::copy(seed.begin(), seed.end(), b.bin_seed.begin());
      b.bin_filter_m = r.u64();
      b.bin_filter_k = r.u32();
      b.bin_filter_seeds.resize(b.m_bins);
      for (auto& s : b.bin_filter_seeds) {
        auto raw = r.bytes(16);
        std::copy(raw.begin(), raw.end(), s.begin());
      }
      h.batch = std::move(b);
    }
    r.expect_done();
    return h;
  }
};

/// Filter geometry for a session: params_for(n, fpr) with an optional forced
/// hash count.
inline FilterParams session_filter_params(uint64_t n, const ProtocolConfig& cfg,
                                          const Seed16& seed) {
  FilterParams params = params_for(std::max<uint64_t>(n, 1), cfg.fpr, seed);
  if (cfg.k_override) {
    params.k = *cfg.k_override;
    if (params.m < params.k) params.m = params.k;
  }
  return params;
}

/// Builds the BF/GBF pair, retrying with fresh hash seeds until GBF insertion
/// succeeds (Fig 2 abort-and-retry semantics).
struct ServerFilters {
  FilterParams params;
  BloomFilter bf;
  GarbledBloomFilter gbf;
};

inline ServerFilters build_server_filters(const ServerInput& input,
                                          FilterParams base_params,
                                          const FieldModulus& mod, Rng& rng,
                                          int max_attempts = 32) {
  std::vector<Bytes> keys;
  std::vector<std::pair<Bytes, FieldElement>> pairs;
  keys.reserve(input.size());
  for (const auto& kv : input) {
    keys.push_back(kv.key);
    pairs.emplace_back(kv.key, kv.value);
  }
  const Seed16 base_seed = base_params.hash_seed;
  for (int attempt = 0; attempt < max_attempts; ++attempt) {
    FilterParams params = base_params;
    params.hash_seed =
        attempt == 0 ? base_seed : derive_seed(base_seed, "retry", attempt);
    try {
      auto gbf = gbf_build(pairs, params, mod, rng);
      auto bf = bf_build(keys, params);
      return ServerFilters{params, std::move(bf), std::move(gbf)};
    } catch (const InsertionFailure&) {
      continue;
    }
  }
  throw InsertionFailure("garbled Bloom filter build failed after re-seeding");
}

// ----------------------------------------------------------------------------
// Secure component product (shared by both constructions)
// ----------------------------------------------------------------------------
//
// Inputs: XOR shares (b0, b1) of the membership bit and additive shares
// (delta, rho) of the extracted value. Two 1-of-2 OT instances convert them
// into additive shares of b * (delta + rho):
//
//   OT1: client sends (D + b0*delta, D + (1-b0)*delta), server picks b1 -> r
//   OT2: server sends (r + b1*(rho-a) - (1-b1)*a,
//                      r + (1-b1)*(rho-a) - b1*a),   client picks b0 -> r'
//
// Client share r' - D; server share a. Sum is delta+rho when b0^b1 = 1,
// zero otherwise.

inline FieldElement component_product_client(FrameChannel& ch, ComponentTag tag,
                                             const OtBackend& ot, bool b0,
                                             FieldElement delta,
                                             FieldElement big_delta, Rng& rng) {
  const FieldElement zero{0, delta.p};
  const FieldElement m0 = big_delta + (b0 ? delta : zero);
  const FieldElement m1 = big_delta + (b0 ? zero : delta);
  ot.send(ch, tag, OtPayloadKind::kField, {m0.value, m1.value}, rng);

  const uint64_t r_prime = ot.recv(ch, tag, OtPayloadKind::kField, 2,
                                   b0 ? 1 : 0, rng);
  return FieldElement{r_prime, delta.p} - big_delta;
}

inline FieldElement component_product_server(FrameChannel& ch, ComponentTag tag,
                                             const OtBackend& ot, bool b1,
                                             FieldElement rho,
                                             FieldElement alpha, Rng& rng) {
  const uint64_t r_raw =
      ot.recv(ch, tag, OtPayloadKind::kField, 2, b1 ? 1 : 0, rng);
  const FieldElement r{r_raw, rho.p};

  const FieldElement rho_minus_alpha = rho - alpha;
  const FieldElement m0 =
      b1 ? r + rho_minus_alpha : r - alpha;
  const FieldElement m1 =
      b1 ? r - alpha : r + rho_minus_alpha;
  ot.send(ch, tag, OtPayloadKind::kField, {m0.value, m1.value}, rng);
  return alpha;
}

// ----------------------------------------------------------------------------
// Reveal (optional disclosure of server shares to the client)
// ----------------------------------------------------------------------------

inline void send_reveal(FrameChannel& ch, const PartyResult& server_result) {
  ByteWriter w;
  w.u32(uint32_t(server_result.outcomes.size()));
  for (const auto& o : server_result.outcomes) {
    w.u32(o.tag.bin_id);
    w.u32(o.tag.j);
    w.u64(o.share.value);
  }
  w.u64(server_result.aggregate.value);
  ch.send(kControlTag, MsgType::kReveal, w.take());
}

/// Combines the revealed server shares into the client result.
inline void apply_reveal(FrameChannel& ch, PartyResult& client_result,
                         const FieldModulus& mod) {
  Frame f = ch.expect(kControlTag, MsgType::kReveal);
  ByteReader r(f.payload);
  const uint32_t count = r.u32();
  if (count != client_result.outcomes.size()) {
    throw ParseError("reveal component count mismatch");
  }
  client_result.revealed_component_values.clear();
  for (uint32_t i = 0; i < count; ++i) {
    const ComponentTag tag{r.u32(), r.u32()};
    if (!(tag == client_result.outcomes[i].tag)) {
      throw ParseError("reveal component order mismatch");
    }
    const FieldElement server_share{r.u64(), mod};
    client_result.revealed_component_values.push_back(
        client_result.outcomes[i].share + server_share);
  }
  const FieldElement server_aggregate{r.u64(), mod};
  r.expect_done();
  client_result.revealed_aggregate =
      client_result.aggregate + server_aggregate;
}

}  // namespace ssip
