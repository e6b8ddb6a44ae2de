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

#include "ssip/pir.hpp"
#include "ssip/protocol.hpp"

namespace ssip {

// S-SIP2: no offline publication. The server keeps its filters local and the
// client reaches them through Sum-PIR; the client owns the HE keypair.
//
// Membership uses the same range-restricted additive masking as S-SIP1 with
// roles mirrored: the server picks mu in [0, p-k-1] and passes -mu as the
// Sum-PIR mask, so the client's extracted value is eta + mu over the
// integers. A hit is then signalled through the 1-of-(k+1) OT by flipping
// index (k + mu) mod (k+1) against the client's choice (eta + mu) mod (k+1).
//
// Value extraction folds s_j into the PIR row selectors on the client side
// (the selectors encrypt s_j at the target row instead of 1). The answer
// already sits at the multiplication level after the row/column combine, so
// a server-side multiply by Enc(s_j) would need depth 2; folding keeps the
// contract delta + rho = s_j * gbf_sum(x_j) at depth 1 and keeps queries at
// Theta(k*sqrt(m)) ciphertexts.

struct Ssip2ServerState {
  ServerFilters filters;
  PirDatabase bf_db;
  PirDatabase gbf_db;

  static Ssip2ServerState from_filters(ServerFilters f) {
    const FieldModulus& mod = f.gbf.modulus();
    std::vector<uint64_t> bits(f.params.m);
    for (uint64_t i = 0; i < f.params.m; ++i) bits[i] = f.bf.bit(i) ? 1 : 0;
    PirDatabase bf_db(std::move(bits), mod);
    PirDatabase gbf_db(f.gbf.raw_slots(), mod);
    return Ssip2ServerState{std::move(f), std::move(bf_db), std::move(gbf_db)};
  }
};

/// Server-side setup (Fig 4 step 1): build filters, nothing is sent.
inline Ssip2ServerState ssip2_setup(const ServerInput& input,
                                    FilterParams base_params,
                                    const FieldModulus& mod, Rng& rng) {
  return Ssip2ServerState::from_filters(
      build_server_filters(input, base_params, mod, rng));
}

// ----------------------------------------------------------------------------
// Online sub-protocols
// ----------------------------------------------------------------------------

inline bool membership_check2_client(FrameChannel& ch, ComponentTag tag,
                                     const HeBackend& he, const HeKeyPair& keys,
                                     const FilterParams& params, BytesView key,
                                     const OtBackend& ot, Rng& rng) {
  const auto indices = derive_indices(key, params);
  const FieldElement mu_prime = sum_pir_client(
      ch, tag, he, keys.pk, keys.sk, indices, params.m, rng);
  const uint64_t choice = mu_prime.value % (params.k + 1);
  return ot.recv(ch, tag, OtPayloadKind::kBit, params.k + 1, choice, rng) != 0;
}

/// mu must be uniform in [0, p-k-1]; b1 is the server's XOR share.
inline void membership_check2_server(FrameChannel& ch, ComponentTag tag,
                                     const HeBackend& he,
                                     const HePublicKey& client_pk,
                                     const PirDatabase& bf_db, uint32_t k,
                                     FieldElement mu, bool b1,
                                     const OtBackend& ot, Rng& rng) {
  // Sum-PIR computes eta - mask; passing -mu makes the client's output
  // eta + mu with no wraparound.
  const FieldElement mask = FieldElement{0, mu.p} - mu;
  sum_pir_server(ch, tag, he, client_pk, bf_db, mask, rng);

  const uint64_t flip = (k + mu.value) % (k + 1);
  std::vector<uint64_t> messages(k + 1, b1 ? 1 : 0);
  messages[flip] ^= 1;
  ot.send(ch, tag, OtPayloadKind::kBit, messages, rng);
}

/// Returns the client's share delta = s * gbf_sum(x) - rho.
inline FieldElement value_extract2_client(FrameChannel& ch, ComponentTag tag,
                                          const HeBackend& he,
                                          const HeKeyPair& keys,
                                          const FilterParams& params,
                                          BytesView key, FieldElement s,
                                          Rng& rng) {
  const auto indices = derive_indices(key, params);
  return sum_pir_client(ch, tag, he, keys.pk, keys.sk, indices, params.m, rng,
                        s);
}

/// rho is the server's full-field share.
inline void value_extract2_server(FrameChannel& ch, ComponentTag tag,
                                  const HeBackend& he,
                                  const HePublicKey& client_pk,
                                  const PirDatabase& gbf_db, FieldElement rho,
                                  Rng& rng) {
  sum_pir_server(ch, tag, he, client_pk, gbf_db, rho, rng);
}

// ----------------------------------------------------------------------------
// Per-component flow (also used per bin by the batched variant)
// ----------------------------------------------------------------------------

inline FieldElement ssip2_component_client(FrameChannel& ch, ComponentTag tag,
                                           const HeBackend& he,
                                           const HeKeyPair& keys,
                                           const FilterParams& params,
                                           BytesView key, FieldElement s,
                                           const OtBackend& ot, Rng& rng) {
  const FieldModulus& mod = he.modulus();
  const bool b0 =
      membership_check2_client(ch, tag, he, keys, params, key, ot, rng);
  const FieldElement delta =
      value_extract2_client(ch, tag, he, keys, params, key, s, rng);
  const FieldElement big_delta = sample_uniform(rng, mod);
  return component_product_client(ch, tag, ot, b0, delta, big_delta, rng);
}

inline FieldElement ssip2_component_server(FrameChannel& ch, ComponentTag tag,
                                           const HeBackend& he,
                                           const HePublicKey& client_pk,
                                           const Ssip2ServerState& state,
                                           const OtBackend& ot, Rng& rng) {
  const FieldModulus& mod = he.modulus();
  const uint32_t k = state.filters.params.k;
  const FieldElement mu = sample_uniform_upto(rng, mod, mod.p - k - 1);
  const bool b1 = rng.bit();
  membership_check2_server(ch, tag, he, client_pk, state.bf_db, k, mu, b1, ot,
                           rng);

  const FieldElement rho = sample_uniform(rng, mod);
  value_extract2_server(ch, tag, he, client_pk, state.gbf_db, rho, rng);

  const FieldElement alpha = sample_uniform(rng, mod);
  return component_product_server(ch, tag, ot, b1, rho, alpha, rng);
}

// ----------------------------------------------------------------------------
// Plain S-SIP2 session
// ----------------------------------------------------------------------------

inline PartyResult ssip2_client(FrameChannel& ch, const ClientInput& input,
                                const ProtocolConfig& cfg, const HeBackend& he,
                                const OtBackend& ot) {
  const FieldModulus& mod = he.modulus();
  validate_input(input, mod);
  Rng rng = Rng(cfg.session_seed()).fork("client");

  ch.set_phase("setup");
  ClientHello hello{ProtocolKind::kSsip2, cfg.p, uint32_t(input.size()), 0,
                    ch.session_id()};
  ch.send(kControlTag, MsgType::kClientHello, hello.encode());
  const SessionHeader hdr = SessionHeader::decode(
      ch.expect(kControlTag, MsgType::kSessionHeader).payload);
  if (hdr.p != cfg.p) throw SsipError("session modulus mismatch");
  if (!hdr.client_owns_keys) throw SsipError("expected client key ownership");

  const HeKeyPair keys = he.keygen(rng);
  ByteWriter pkw;
  keys.pk.serialize(pkw);
  ch.send(kControlTag, MsgType::kHePublicKey, pkw.take());

  ch.set_phase("online");
  PartyResult result;
  result.aggregate = FieldElement{0, mod};
  for (uint32_t j = 0; j < input.size(); ++j) {
    const ComponentTag tag{0, j};
    const FieldElement share = ssip2_component_client(
        ch, tag, he, keys, hdr.params, input[j].key, input[j].value, ot, rng);
    result.outcomes.push_back(ComponentOutcome{tag, share, false, j});
    result.aggregate = result.aggregate + share;
  }
  if (cfg.reveal) apply_reveal(ch, result, mod);
  ch.metrics().finish_phase();
  result.metrics = ch.metrics();
  return result;
}

inline PartyResult ssip2_server(FrameChannel& ch, const ServerInput& input,
                                const ProtocolConfig& cfg, const HeBackend& he,
                                const OtBackend& ot) {
  const FieldModulus& mod = he.modulus();
  validate_input(input, mod);
  Rng rng = Rng(cfg.session_seed()).fork("server");

  ch.set_phase("setup");
  const ClientHello hello = ClientHello::decode(
      ch.expect(kControlTag, MsgType::kClientHello).payload);
  if (hello.protocol != ProtocolKind::kSsip2) {
    throw SsipError("client requested a different protocol");
  }
  if (hello.p != cfg.p) throw SsipError("session modulus mismatch");

  const FilterParams base = session_filter_params(
      input.size(), cfg, derive_seed(cfg.session_seed(), "filter"));
  Ssip2ServerState state = ssip2_setup(input, base, mod, rng);

  SessionHeader hdr;
  hdr.protocol = ProtocolKind::kSsip2;
  hdr.p = cfg.p;
  hdr.n = input.size();
  hdr.client_owns_keys = 1;
  hdr.params = state.filters.params;
  ch.send(kControlTag, MsgType::kSessionHeader, hdr.encode());

  const HePublicKey client_pk = [&] {
    Frame f = ch.expect(kControlTag, MsgType::kHePublicKey);
    ByteReader r(f.payload);
    auto pk = HePublicKey::deserialize(r);
    r.expect_done();
    return pk;
  }();

  ch.set_phase("online");
  PartyResult result;
  result.aggregate = FieldElement{0, mod};
  for (uint32_t j = 0; j < hello.t; ++j) {
    const ComponentTag tag{0, j};
    const FieldElement share =
        ssip2_component_server(ch, tag, he, client_pk, state, ot, rng);
    result.outcomes.push_back(ComponentOutcome{tag, share, false, j});
    result.aggregate = result.aggregate + share;
  }
  if (cfg.reveal) send_reveal(ch, result);
  ch.metrics().finish_phase();
  result.metrics = ch.metrics();
  return result;
}

// ----------------------------------------------------------------------------
// Batched S-SIP2 (Fig 5)
// ----------------------------------------------------------------------------

namespace detail {

inline uint32_t default_m_bins(uint32_t t) {
  return std::max<uint32_t>(2, uint32_t(std::ceil(1.3 * double(std::max(t, 1u)))) + 1);
}

inline uint32_t default_eta(ClientHashMode mode, uint32_t t, uint32_t m_bins) {
  if (mode == ClientHashMode::kCuckoo) return 1;
  return std::max<uint32_t>(1, uint32_t(std::ceil(3.0 * double(t) / double(m_bins))));
}

}  // namespace detail

inline PartyResult batched_client(FrameChannel& ch, const ClientInput& input,
                                  const ProtocolConfig& cfg,
                                  const HeBackend& he, const OtBackend& ot) {
  const FieldModulus& mod = he.modulus();
  validate_input(input, mod);
  Rng rng = Rng(cfg.session_seed()).fork("client");

  ch.set_phase("setup");
  ClientHello hello{ProtocolKind::kBatched, cfg.p, uint32_t(input.size()), 0,
                    ch.session_id()};
  ch.send(kControlTag, MsgType::kClientHello, hello.encode());
  const SessionHeader hdr = SessionHeader::decode(
      ch.expect(kControlTag, MsgType::kSessionHeader).payload);
  if (hdr.p != cfg.p) throw SsipError("session modulus mismatch");
  if (!hdr.batch) throw SsipError("server did not send batch parameters");
  const BatchHeader& batch = *hdr.batch;
  const BinningParams bin_params = batch.binning_params();

  // Partition the queries; remember where each original input ends up.
  std::map<Bytes, size_t> index_of;
  std::vector<BinEntry> items;
  for (size_t i = 0; i < input.size(); ++i) {
    index_of[input[i].key] = i;
    items.push_back(BinEntry{input[i].key, input[i].value, false});
  }
  BinAssignment assignment =
      batch.mode == ClientHashMode::kCuckoo
          ? cuckoo_build(items, bin_params, rng)
          : two_choice_build(items, bin_params);
  pad_client_bins(assignment, batch.eta, mod);

  ByteWriter sw;
  sw.u32(uint32_t(assignment.stash.size()));
  ch.send(kControlTag, MsgType::kStashInfo, sw.take());

  const HeKeyPair keys = he.keygen(rng);
  ByteWriter pkw;
  keys.pk.serialize(pkw);
  ch.send(kControlTag, MsgType::kHePublicKey, pkw.take());

  ch.set_phase("online");
  PartyResult result;
  result.aggregate = FieldElement{0, mod};
  for (uint32_t b = 0; b < batch.m_bins; ++b) {
    const FilterParams bin_filter = batch.bin_filter_params(b);
    for (uint32_t j = 0; j < batch.eta; ++j) {
      const BinEntry& entry = assignment.bins[b][j];
      const ComponentTag tag{b, j};
      const FieldElement share = ssip2_component_client(
          ch, tag, he, keys, bin_filter, entry.key, entry.payload, ot, rng);
      result.outcomes.push_back(ComponentOutcome{
          tag, share, entry.dummy,
          entry.dummy ? SIZE_MAX : index_of.at(entry.key)});
      result.aggregate = result.aggregate + share;
    }
  }

  // Stash items run one unbatched pass against the full database.
  if (!assignment.stash.empty()) {
    const SessionHeader stash_hdr = SessionHeader::decode(
        ch.expect(kControlTag, MsgType::kSessionHeader).payload);
    for (uint32_t js = 0; js < assignment.stash.size(); ++js) {
      const BinEntry& entry = assignment.stash[js];
      const ComponentTag tag{batch.m_bins, js};
      const FieldElement share = ssip2_component_client(
          ch, tag, he, keys, stash_hdr.params, entry.key, entry.payload, ot,
          rng);
      result.outcomes.push_back(
          ComponentOutcome{tag, share, false, index_of.at(entry.key)});
      result.aggregate = result.aggregate + share;
    }
  }

  if (cfg.reveal) apply_reveal(ch, result, mod);
  ch.metrics().finish_phase();
  result.metrics = ch.metrics();
  return result;
}

inline PartyResult batched_server(FrameChannel& ch, const ServerInput& input,
                                  const ProtocolConfig& cfg,
                                  const HeBackend& he, const OtBackend& ot) {
  const FieldModulus& mod = he.modulus();
  validate_input(input, mod);
  Rng rng = Rng(cfg.session_seed()).fork("server");

  ch.set_phase("setup");
  const ClientHello hello = ClientHello::decode(
      ch.expect(kControlTag, MsgType::kClientHello).payload);
  if (hello.protocol != ProtocolKind::kBatched) {
    throw SsipError("client requested a different protocol");
  }
  if (hello.p != cfg.p) throw SsipError("session modulus mismatch");

  BinningParams bin_params;
  bin_params.m_bins = cfg.batch.m_bins ? cfg.batch.m_bins
                                       : detail::default_m_bins(hello.t);
  bin_params.k = cfg.batch.k_bin;
  bin_params.beta = cfg.batch.beta;
  bin_params.eta = cfg.batch.eta;
  bin_params.hash_seed = derive_seed(cfg.session_seed(), "binning");
  bin_params.max_relocations = cfg.batch.max_relocations;
  bin_params.stash_cap = cfg.batch.stash_cap;

  std::vector<BinEntry> items;
  for (const auto& kv : input) items.push_back(BinEntry{kv.key, kv.value});
  BinAssignment assignment = server_bin(items, bin_params, mod, rng);

  BatchHeader batch;
  batch.m_bins = bin_params.m_bins;
  batch.k_bin = bin_params.k;
  batch.beta = assignment.beta_used;
  batch.eta = cfg.batch.eta ? cfg.batch.eta
                            : detail::default_eta(cfg.batch.mode, hello.t,
                                                  bin_params.m_bins);
  batch.mode = cfg.batch.mode;
  batch.max_relocations = bin_params.max_relocations;
  batch.stash_cap = bin_params.stash_cap;
  batch.bin_seed = bin_params.hash_seed;

  // Per-bin filters are sized for beta at the session's FPR target so every
  // bin instance is uniform.
  ProtocolConfig bin_cfg = cfg;
  const FilterParams bin_base = session_filter_params(
      assignment.beta_used, bin_cfg, derive_seed(cfg.session_seed(), "bin-filter"));
  batch.bin_filter_m = bin_base.m;
  batch.bin_filter_k = bin_base.k;

  std::vector<Ssip2ServerState> bin_states;
  bin_states.reserve(batch.m_bins);
  for (uint32_t b = 0; b < batch.m_bins; ++b) {
    ServerInput bin_input;
    for (const auto& e : assignment.bins[b]) {
      bin_input.push_back(KeyValue{e.key, e.payload});
    }
    FilterParams base = bin_base;
    base.hash_seed = derive_seed(bin_base.hash_seed, "bin", b);
    // dummy keys carry the reserved prefix by construction, so bypass the
    // real-key validation and build filters directly
    Rng bin_rng = rng.fork("bin-build", b);
    auto filters = build_server_filters(bin_input, base, mod, bin_rng);
    batch.bin_filter_seeds.push_back(filters.params.hash_seed);
    bin_states.push_back(Ssip2ServerState::from_filters(std::move(filters)));
  }

  SessionHeader hdr;
  hdr.protocol = ProtocolKind::kBatched;
  hdr.p = cfg.p;
  hdr.n = input.size();
  hdr.client_owns_keys = 1;
  hdr.params = FilterParams{batch.bin_filter_m, batch.bin_filter_k,
                            batch.bin_seed};
  hdr.batch = batch;
  ch.send(kControlTag, MsgType::kSessionHeader, hdr.encode());

  const uint32_t stash_count = [&] {
    Frame f = ch.expect(kControlTag, MsgType::kStashInfo);
    ByteReader r(f.payload);
    const uint32_t count = r.u32();
    r.expect_done();
    return count;
  }();

  const HePublicKey client_pk = [&] {
    Frame f = ch.expect(kControlTag, MsgType::kHePublicKey);
    ByteReader r(f.payload);
    auto pk = HePublicKey::deserialize(r);
    r.expect_done();
    return pk;
  }();

  ch.set_phase("online");
  PartyResult result;
  result.aggregate = FieldElement{0, mod};
  for (uint32_t b = 0; b < batch.m_bins; ++b) {
    for (uint32_t j = 0; j < batch.eta; ++j) {
      const ComponentTag tag{b, j};
      const FieldElement share = ssip2_component_server(
          ch, tag, he, client_pk, bin_states[b], ot, rng);
      result.outcomes.push_back(ComponentOutcome{tag, share, false, SIZE_MAX});
      result.aggregate = result.aggregate + share;
    }
  }

  if (stash_count > 0) {
    const FilterParams global_base = session_filter_params(
        input.size(), cfg, derive_seed(cfg.session_seed(), "filter"));
    Ssip2ServerState global_state = ssip2_setup(input, global_base, mod, rng);

    SessionHeader stash_hdr;
    stash_hdr.protocol = ProtocolKind::kSsip2;
    stash_hdr.p = cfg.p;
    stash_hdr.n = input.size();
    stash_hdr.client_owns_keys = 1;
    stash_hdr.params = global_state.filters.params;
    ch.send(kControlTag, MsgType::kSessionHeader, stash_hdr.encode());

    for (uint32_t js = 0; js < stash_count; ++js) {
      const ComponentTag tag{batch.m_bins, js};
      const FieldElement share = ssip2_component_server(
          ch, tag, he, client_pk, global_state, ot, rng);
      result.outcomes.push_back(ComponentOutcome{tag, share, false, SIZE_MAX});
      result.aggregate = result.aggregate + share;
    }
  }

  if (cfg.reveal) send_reveal(ch, result);
  ch.metrics().finish_phase();
  result.metrics = ch.metrics();
  return result;
}

}  // namespace ssip
