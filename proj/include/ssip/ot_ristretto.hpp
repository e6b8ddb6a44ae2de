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

#include <sodium.h>

#include "ssip/ot.hpp"

namespace ssip {

// Base 1-out-of-n OT in the style of Chou-Orlandi over ristretto255
// (libsodium). Semi-honest setting, matching the protocol threat model.
//
//   sender:   a <- Zq,  A = aG                          -> MSG1: A, n
//   receiver: x <- Zq*, B = choice*A + xG               -> MSG2: B
//   sender:   pad_i = H(a*(B - iA) || i), i in [0, n)   -> MSG3: m_i ^ pad_i
//   receiver: pad_choice = H(x*A || choice)
//
// The receiver's output equals m_choice; every other pad is a fresh DH value
// the receiver cannot compute. Transcript size depends only on (n, kind).

class RistrettoOt final : public OtBackend {
 public:
  RistrettoOt() {
    if (sodium_init() < 0) throw OtError("libsodium init failed");
  }

  std::string_view name() const override { return "ristretto255 base OT"; }
  bool is_secure() const override { return true; }

  void send(FrameChannel& ch, ComponentTag tag, OtPayloadKind kind,
            const std::vector<uint64_t>& messages, Rng& rng) const override {
    const size_t n = messages.size();
    if (n < 2) throw OtError("OT needs at least 2 messages");

    Scalar a = random_scalar(rng);
    Point big_a;
    crypto_scalarmult_ristretto255_base(big_a.data(), a.data());

    ByteWriter w1;
    w1.bytes(big_a);
    w1.u32(uint32_t(n));
    ch.send(tag, MsgType::kOtMsg1, w1.take());

    Frame f = ch.expect(tag, MsgType::kOtMsg2);
    ByteReader r(f.payload);
    Point big_b = read_point(r);
    r.expect_done();

    // walk B - iA incrementally
    const size_t width = ot_payload_bytes(kind);
    ByteWriter w3;
    Point cur = big_b;
    for (size_t i = 0; i < n; ++i) {
      if (i > 0) {
        Point next;
        if (crypto_core_ristretto255_sub(next.data(), cur.data(),
                                         big_a.data()) != 0) {
          throw OtError("ristretto point subtraction failed");
        }
        cur = next;
      }
      Point shared{};  // identity-result failures leave a zero pad seed
      crypto_scalarmult_ristretto255(shared.data(), a.data(), cur.data());
      const Bytes pad = derive_pad(shared, i, width);
      ByteWriter enc;
      detail::write_ot_payload(enc, kind, messages[i]);
      Bytes block = enc.take();
      for (size_t b = 0; b < width; ++b) block[b] ^= pad[b];
      w3.bytes(block);
    }
    ch.send(tag, MsgType::kOtMsg3, w3.take());
  }

  uint64_t recv(FrameChannel& ch, ComponentTag tag, OtPayloadKind kind,
                size_t n, uint64_t choice, Rng& rng) const override {
    if (choice >= n) throw OtError("OT choice out of range");

    Frame f1 = ch.expect(tag, MsgType::kOtMsg1);
    ByteReader r1(f1.payload);
    Point big_a = read_point(r1);
    const uint32_t sender_n = r1.u32();
    r1.expect_done();
    if (sender_n != n) {
      throw OtError("OT arity mismatch: sender has " +
                    std::to_string(sender_n) + ", receiver expects " +
                    std::to_string(n));
    }

    Scalar x = random_scalar(rng);
    Point xg;
    crypto_scalarmult_ristretto255_base(xg.data(), x.data());

    Point big_b = xg;
    if (choice != 0) {
      Scalar c{};
      for (int i = 0; i < 8; ++i) c[i] = uint8_t(choice >> (8 * i));
      Point ca;
      if (crypto_scalarmult_ristretto255(ca.data(), c.data(), big_a.data()) !=
          0) {
        throw OtError("ristretto scalar multiplication failed");
      }
      Point sum;
      if (crypto_core_ristretto255_add(sum.data(), ca.data(), xg.data()) != 0) {
        throw OtError("ristretto point addition failed");
      }
      big_b = sum;
    }

    ByteWriter w2;
    w2.bytes(big_b);
    ch.send(tag, MsgType::kOtMsg2, w2.take());

    Frame f3 = ch.expect(tag, MsgType::kOtMsg3);
    const size_t width = ot_payload_bytes(kind);
    if (f3.payload.size() != n * width) {
      throw OtError("OT message block has wrong size");
    }

    Point shared;
    if (crypto_scalarmult_ristretto255(shared.data(), x.data(),
                                       big_a.data()) != 0) {
      throw OtError("ristretto scalar multiplication failed");
    }
    const Bytes pad = derive_pad(shared, choice, width);
    Bytes block(f3.payload.begin() + choice * width,
                f3.payload.begin() + (choice + 1) * width);
    for (size_t b = 0; b < width; ++b) block[b] ^= pad[b];
    ByteReader br(block);
    return detail::read_ot_payload(br, kind);
  }

 private:
  using Point = std::array<uint8_t, crypto_core_ristretto255_BYTES>;
  using Scalar = std::array<uint8_t, crypto_core_ristretto255_SCALARBYTES>;

  static Scalar random_scalar(Rng& rng) {
    std::array<uint8_t, 64> wide;
    Scalar s{};
    do {
      rng.fill(wide);
      crypto_core_ristretto255_scalar_reduce(s.data(), wide.data());
    } while (sodium_is_zero(s.data(), s.size()));
    return s;
  }

  static Point read_point(ByteReader& r) {
    Point p;
    Bytes raw = r.bytes(p.size());
    std::copy(raw.begin(), raw.end(), p.begin());
    return p;
  }

  static Bytes derive_pad(const Point& shared, uint64_t index, size_t width) {
    std::array<uint8_t, 40> input;
    std::copy(shared.begin(), shared.end(), input.begin());
    for (int i = 0; i < 8; ++i) {
      input[32 + i] = uint8_t(index >> (8 * i));
    }
    Bytes pad(crypto_generichash_BYTES);
    crypto_generichash(pad.data(), pad.size(), input.data(), input.size(),
                       nullptr, 0);
    pad.resize(width);
    return pad;
  }
};

}  // namespace ssip
