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

#include "ssip/rng.hpp"
#include "ssip/transport.hpp"

namespace ssip {

// 1-out-of-n oblivious transfer over bits and field elements. The receiver
// learns exactly the chosen message; which guarantees the sender gets about
// its own inputs depends on the backend. Payloads are fixed-width on the
// wire so transcript sizes depend only on (n, payload_kind).

enum class OtPayloadKind : uint8_t { kBit = 0, kField = 1 };

inline size_t ot_payload_bytes(OtPayloadKind kind) {
  return kind == OtPayloadKind::kBit ? 1 : 8;
}

class OtBackend {
 public:
  virtual ~OtBackend() = default;
  virtual std::string_view name() const = 0;
  virtual bool is_secure() const = 0;

  /// Sender side of one OT instance under the given component tag.
  virtual void send(FrameChannel& ch, ComponentTag tag, OtPayloadKind kind,
                    const std::vector<uint64_t>& messages, Rng& rng) const = 0;

  /// Receiver side; n is the sender's message count, choice in [0, n).
  virtual uint64_t recv(FrameChannel& ch, ComponentTag tag, OtPayloadKind kind,
                        size_t n, uint64_t choice, Rng& rng) const = 0;
};

namespace detail {

inline void write_ot_payload(ByteWriter& w, OtPayloadKind kind, uint64_t v) {
  if (kind == OtPayloadKind::kBit) {
    w.u8(uint8_t(v & 1));
  } else {
    w.u64(v);
  }
}

inline uint64_t read_ot_payload(ByteReader& r, OtPayloadKind kind) {
  return kind == OtPayloadKind::kBit ? r.u8() : r.u64();
}

}  // namespace detail

/// In-process oracle backend: the receiver's choice travels in the clear.
/// Default for tests and benchmarks of protocol logic; clearly insecure.
class TrustedDealerOt final : public OtBackend {
 public:
  std::string_view name() const override {
    return "trusted-dealer (INSECURE test backend)";
  }
  bool is_secure() const override { return false; }

  void send(FrameChannel& ch, ComponentTag tag, OtPayloadKind kind,
            const std::vector<uint64_t>& messages, Rng&) const override {
    Frame f = ch.expect(tag, MsgType::kOtMsg1);
    ByteReader r(f.payload);
    const uint32_t n = r.u32();
    const uint32_t choice = r.u32();
    r.expect_done();
    if (n != messages.size()) {
      throw OtError("OT arity mismatch: sender has " +
                    std::to_string(messages.size()) + ", receiver expects " +
                    std::to_string(n));
    }
    if (choice >= n) throw OtError("OT choice out of range");
    ByteWriter w;
    detail::write_ot_payload(w, kind, messages[choice]);
    ch.send(tag, MsgType::kOtMsg2, w.take());
  }

  uint64_t recv(FrameChannel& ch, ComponentTag tag, OtPayloadKind kind,
                size_t n, uint64_t choice, Rng&) const override {
    if (choice >= n) throw OtError("OT choice out of range");
    ByteWriter w;
    w.u32(uint32_t(n));
    w.u32(uint32_t(choice));
    ch.send(tag, MsgType::kOtMsg1, w.take());
    Frame f = ch.expect(tag, MsgType::kOtMsg2);
    ByteReader r(f.payload);
    const uint64_t v = detail::read_ot_payload(r, kind);
    r.expect_done();
    return v;
  }
};

}  // namespace ssip
