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

#include <fstream>

#include "ssip/protocol.hpp"

namespace ssip {

// S-SIP1: the server publishes element-wise encryptions of its Bloom and
// garbled Bloom filters once, offline; each online component then costs the
// client k homomorphic adds and both parties a handful of OTs, independent of
// the server's dataset size.
//
// Membership masking deviates from a literal reading of the figure: the
// client adds a mask drawn from [0, p-k-1] instead of subtracting a full-field
// one, so the server's decryption equals eta + mu over the integers and the
// mod-(k+1) residue comparison cannot be thrown off by a mod-p wraparound.
// The server's flipped OT index is then (mu' - k) mod (k+1) == (mu'+1) mod
// (k+1) and a hit is signalled exactly when eta = k.

struct OfflinePackage {
  HePublicKey pk;
  FilterParams params;
  uint64_t n = 0;
  std::vector<Ciphertext> ct_bf;
  std::vector<Ciphertext> ct_gbf;

  void serialize(ByteWriter& w) const {
    pk.serialize(w);
    params.serialize(w);
    w.u64(n);
    for (const auto& ct : ct_bf) ct.serialize(w);
    for (const auto& ct : ct_gbf) ct.serialize(w);
  }

  static OfflinePackage deserialize(ByteReader& r) {
    OfflinePackage pkg;
    pkg.pk = HePublicKey::deserialize(r);
    pkg.params = FilterParams::deserialize(r);
    pkg.n = r.u64();
    pkg.ct_bf.reserve(pkg.params.m);
    pkg.ct_gbf.reserve(pkg.params.m);
    for (uint64_t i = 0; i < pkg.params.m; ++i) {
      pkg.ct_bf.push_back(Ciphertext::deserialize(r));
    }
    for (uint64_t i = 0; i < pkg.params.m; ++i) {
      pkg.ct_gbf.push_back(Ciphertext::deserialize(r));
    }
    return pkg;
  }

  Bytes to_bytes() const {
    ByteWriter w;
    serialize(w);
    return w.data();
  }

  uint64_t fingerprint() const {
    return siphash24(seed_from_u64(0x5510u), to_bytes());
  }

  void save(const std::string& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw SsipError("cannot write " + path);
    const Bytes b = to_bytes();
    out.write(reinterpret_cast<const char*>(b.data()), std::streamsize(b.size()));
  }

  static OfflinePackage load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw SsipError("cannot read " + path);
    Bytes b((std::istreambuf_iterator<char>(in)),
            std::istreambuf_iterator<char>());
    ByteReader r(b);
    OfflinePackage pkg = deserialize(r);
    r.expect_done();
    return pkg;
  }
};

/// Server-side offline state: the published package plus the secret key that
/// decrypts online messages. Reusable across sessions and clients.
struct Ssip1OfflineState {
  OfflinePackage package;
  HeSecretKey sk;
  ServerFilters filters;
};

/// Builds filters, encrypts them element-wise under a fresh keypair, and
/// returns the publishable package together with the server's secret key.
inline Ssip1OfflineState offline_publish(const ServerInput& input,
                                         FilterParams base_params,
                                         const HeBackend& he, Rng& rng) {
  const FieldModulus& mod = he.modulus();
  auto filters = build_server_filters(input, base_params, mod, rng);
  auto keys = he.keygen(rng);

  OfflinePackage pkg;
  pkg.pk = keys.pk;
  pkg.params = filters.params;
  pkg.n = input.size();
  pkg.ct_bf.reserve(filters.params.m);
  pkg.ct_gbf.reserve(filters.params.m);
  for (uint64_t i = 0; i < filters.params.m; ++i) {
    pkg.ct_bf.push_back(he.encrypt(
        keys.pk, FieldElement{filters.bf.bit(i) ? 1u : 0u, mod}, rng));
  }
  for (uint64_t i = 0; i < filters.params.m; ++i) {
    pkg.ct_gbf.push_back(he.encrypt(keys.pk, filters.gbf.slot(i), rng));
  }
  return Ssip1OfflineState{std::move(pkg), keys.sk, std::move(filters)};
}

// ----------------------------------------------------------------------------
// Online sub-protocols
// ----------------------------------------------------------------------------

/// Client side of the secure membership check. mu must be uniform in
/// [0, p-k-1]. Returns the client's XOR share b0.
inline bool membership_check1_client(FrameChannel& ch, ComponentTag tag,
                                     const HeBackend& he,
                                     const OfflinePackage& pkg, BytesView key,
                                     FieldElement mu, const OtBackend& ot,
                                     Rng& rng) {
  const auto indices = derive_indices(key, pkg.params);
  std::optional<Ciphertext> sum;
  for (uint64_t i : indices) {
    sum = sum ? he.add(*sum, pkg.ct_bf[i]) : pkg.ct_bf[i];
  }
  const Ciphertext nu = he.add(*sum, he.encrypt(pkg.pk, mu, rng));
  ByteWriter w;
  nu.serialize(w);
  ch.send(tag, MsgType::kMembNu, w.take());

  const uint32_t k = pkg.params.k;
  const uint64_t choice = mu.value % (k + 1);
  return ot.recv(ch, tag, OtPayloadKind::kBit, k + 1, choice, rng) != 0;
}

/// Server side of the membership check; b1 is the server's XOR share.
inline void membership_check1_server(FrameChannel& ch, ComponentTag tag,
                                     const HeBackend& he, const HeSecretKey& sk,
                                     uint32_t k, bool b1, const OtBackend& ot,
                                     Rng& rng) {
  Frame f = ch.expect(tag, MsgType::kMembNu);
  ByteReader r(f.payload);
  const Ciphertext nu = Ciphertext::deserialize(r);
  r.expect_done();
  const uint64_t mu_prime = he.decrypt(sk, nu).value;

  // (mu' - k) mod (k+1) == (mu' + 1) mod (k+1)
  const uint64_t flip = (mu_prime + 1) % (k + 1);
  std::vector<uint64_t> messages(k + 1, b1 ? 1 : 0);
  messages[flip] ^= 1;
  ot.send(ch, tag, OtPayloadKind::kBit, messages, rng);
}

/// Client side of the associated-value extraction:
///   nu' = s * sum_i ct.GBF[h_i(x)] - Enc(pk, delta)
/// delta is the client's full-field share; the server decrypts rho with
/// delta + rho = s * gbf_sum(x).
inline void value_extract1_client(FrameChannel& ch, ComponentTag tag,
                                  const HeBackend& he,
                                  const OfflinePackage& pkg, BytesView key,
                                  FieldElement s, FieldElement delta,
                                  Rng& rng) {
  const auto indices = derive_indices(key, pkg.params);
  std::optional<Ciphertext> sum;
  for (uint64_t i : indices) {
    sum = sum ? he.add(*sum, pkg.ct_gbf[i]) : pkg.ct_gbf[i];
  }
  const Ciphertext nu_prime =
      he.sub(he.plain_mul(*sum, s), he.encrypt(pkg.pk, delta, rng));
  ByteWriter w;
  nu_prime.serialize(w);
  ch.send(tag, MsgType::kValueNu, w.take());
}

inline FieldElement value_extract1_server(FrameChannel& ch, ComponentTag tag,
                                          const HeBackend& he,
                                          const HeSecretKey& sk) {
  Frame f = ch.expect(tag, MsgType::kValueNu);
  ByteReader r(f.payload);
  const Ciphertext nu_prime = Ciphertext::deserialize(r);
  r.expect_done();
  return he.decrypt(sk, nu_prime);
}

// ----------------------------------------------------------------------------
// Per-component flow
// ----------------------------------------------------------------------------

inline FieldElement ssip1_component_client(FrameChannel& ch, ComponentTag tag,
                                           const HeBackend& he,
                                           const OfflinePackage& pkg,
                                           BytesView key, FieldElement s,
                                           const OtBackend& ot, Rng& rng) {
  const FieldModulus& mod = he.modulus();
  const FieldElement mu =
      sample_uniform_upto(rng, mod, mod.p - pkg.params.k - 1);
  const bool b0 = membership_check1_client(ch, tag, he, pkg, key, mu, ot, rng);

  const FieldElement delta = sample_uniform(rng, mod);
  value_extract1_client(ch, tag, he, pkg, key, s, delta, rng);

  const FieldElement big_delta = sample_uniform(rng, mod);
  return component_product_client(ch, tag, ot, b0, delta, big_delta, rng);
}

inline FieldElement ssip1_component_server(FrameChannel& ch, ComponentTag tag,
                                           const HeBackend& he,
                                           const HeSecretKey& sk, uint32_t k,
                                           const OtBackend& ot, Rng& rng) {
  const FieldModulus& mod = he.modulus();
  const bool b1 = rng.bit();
  membership_check1_server(ch, tag, he, sk, k, b1, ot, rng);

  const FieldElement rho = value_extract1_server(ch, tag, he, sk);

  const FieldElement alpha = sample_uniform(rng, mod);
  return component_product_server(ch, tag, ot, b1, rho, alpha, rng);
}

// ----------------------------------------------------------------------------
// Session runners
// ----------------------------------------------------------------------------

inline PartyResult ssip1_client(FrameChannel& ch, const ClientInput& input,
                                const ProtocolConfig& cfg, const HeBackend& he,
                                const OtBackend& ot,
                                const OfflinePackage* cached = nullptr) {
  const FieldModulus& mod = he.modulus();
  validate_input(input, mod);
  Rng rng = Rng(cfg.session_seed()).fork("client");

  ch.set_phase("setup");
  ClientHello hello{ProtocolKind::kSsip1, cfg.p, uint32_t(input.size()),
                    cached ? cached->fingerprint() : 0, ch.session_id()};
  ch.send(kControlTag, MsgType::kClientHello, hello.encode());

  const SessionHeader hdr = SessionHeader::decode(
      ch.expect(kControlTag, MsgType::kSessionHeader).payload);
  if (hdr.p != cfg.p) throw SsipError("session modulus mismatch");

  ch.set_phase("offline");
  OfflinePackage received;
  const OfflinePackage* pkg = nullptr;
  if (hdr.use_cached_package) {
    pkg = cached;
  } else {
    Frame f = ch.expect(kControlTag, MsgType::kOfflinePackage);
    ByteReader r(f.payload);
    received = OfflinePackage::deserialize(r);
    r.expect_done();
    pkg = &received;
  }
  if (!(pkg->params == hdr.params)) {
    throw SsipError("offline package does not match session params");
  }

  ch.set_phase("online");
  PartyResult result;
  result.aggregate = FieldElement{0, mod};
  for (uint32_t j = 0; j < input.size(); ++j) {
    const ComponentTag tag{0, j};
    const FieldElement share = ssip1_component_client(
        ch, tag, he, *pkg, input[j].key, input[j].value, ot, rng);
    result.outcomes.push_back(ComponentOutcome{tag, share, false, j});
    result.aggregate = result.aggregate + share;
  }
  if (cfg.reveal) apply_reveal(ch, result, mod);
  ch.metrics().finish_phase();
  result.metrics = ch.metrics();
  return result;
}

inline PartyResult ssip1_server(FrameChannel& ch, const ServerInput& input,
                                const ProtocolConfig& cfg, const HeBackend& he,
                                const OtBackend& ot,
                                const Ssip1OfflineState* cached = nullptr) {
  const FieldModulus& mod = he.modulus();
  validate_input(input, mod);
  Rng rng = Rng(cfg.session_seed()).fork("server");

  ch.set_phase("setup");
  const ClientHello hello = ClientHello::decode(
      ch.expect(kControlTag, MsgType::kClientHello).payload);
  if (hello.protocol != ProtocolKind::kSsip1) {
    throw SsipError("client requested a different protocol");
  }
  if (hello.p != cfg.p) throw SsipError("session modulus mismatch");

  // The offline package is reusable across sessions; rebuild only if no
  // cached state was supplied.
  std::optional<Ssip1OfflineState> built;
  const Ssip1OfflineState* state = cached;
  if (state == nullptr) {
    const FilterParams base = session_filter_params(
        input.size(), cfg, derive_seed(cfg.session_seed(), "filter"));
    built.emplace(offline_publish(input, base, he, rng));
    state = &*built;
  }
  const uint64_t fp = state->package.fingerprint();

  SessionHeader hdr;
  hdr.protocol = ProtocolKind::kSsip1;
  hdr.p = cfg.p;
  hdr.n = input.size();
  hdr.client_owns_keys = 0;
  hdr.params = state->package.params;
  hdr.package_fingerprint = fp;
  hdr.use_cached_package = hello.package_fingerprint == fp ? 1 : 0;
  ch.send(kControlTag, MsgType::kSessionHeader, hdr.encode());

  ch.set_phase("offline");
  if (!hdr.use_cached_package) {
    ch.send(kControlTag, MsgType::kOfflinePackage, state->package.to_bytes());
  }

  ch.set_phase("online");
  PartyResult result;
  result.aggregate = FieldElement{0, mod};
  for (uint32_t j = 0; j < hello.t; ++j) {
    const ComponentTag tag{0, j};
    const FieldElement share = ssip1_component_server(
        ch, tag, he, state->sk, state->package.params.k, ot, rng);
    result.outcomes.push_back(ComponentOutcome{tag, share, false, j});
    result.aggregate = result.aggregate + share;
  }
  if (cfg.reveal) send_reveal(ch, result);
  ch.metrics().finish_phase();
  result.metrics = ch.metrics();
  return result;
}

}  // namespace ssip
