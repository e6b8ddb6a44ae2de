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

#include <chrono>
#include <condition_variable>
#include <deque>
#include <map>
#include <memory>
#include <mutex>

#include "ssip/serial.hpp"

namespace ssip {

// Typed, framed, counted message exchange between the two parties. The frame
// header is little-endian and bit-exact so transcripts are comparable across
// transports and implementations:
//   session_id u64 | bin_id u32 | j u32 | msg_type u16 | payload_len u32

enum class MsgType : uint16_t {
  kClientHello = 1,
  kSessionHeader = 2,
  kHePublicKey = 3,
  kOfflinePackage = 4,
  kOfflineSkip = 5,
  kMembNu = 6,
  kValueNu = 7,
  kPirQuery = 8,
  kPirAnswer = 9,
  kOtMsg1 = 10,
  kOtMsg2 = 11,
  kOtMsg3 = 12,
  kStashInfo = 13,
  kReveal = 14,
  kAppHeader = 15,
};

inline constexpr uint16_t kMaxMsgType = 15;
inline constexpr size_t kFrameHeaderBytes = 22;
inline constexpr uint32_t kMaxPayloadBytes = 1u << 30;

/// Demultiplexing key: protocol flows for different (bin, component) pairs
/// may interleave on one connection.
struct ComponentTag {
  uint32_t bin_id = 0;
  uint32_t j = 0;

  auto operator<=>(const ComponentTag&) const = default;
};

/// Control-plane frames (hello, session header, keys) use a tag outside the
/// component namespace.
inline constexpr ComponentTag kControlTag{0xffffffffu, 0};

struct Frame {
  uint64_t session_id = 0;
  ComponentTag tag;
  MsgType msg_type = MsgType::kClientHello;
  Bytes payload;

  size_t wire_size() const { return kFrameHeaderBytes + payload.size(); }

  Bytes encode() const {
    if (payload.size() > kMaxPayloadBytes) {
      throw TransportError("frame payload length overflow");
    }
    ByteWriter w;
    w.u64(session_id);
    w.u32(tag.bin_id);
    w.u32(tag.j);
    w.u16(uint16_t(msg_type));
    w.u32(uint32_t(payload.size()));
    w.bytes(payload);
    return w.take();
  }
};

// ----------------------------------------------------------------------------
// Byte-stream connections
// ----------------------------------------------------------------------------

/// Reliable, in-order byte stream between the two parties.
class Connection {
 public:
  virtual ~Connection() = default;
  virtual void send_bytes(BytesView data) = 0;
  /// Reads exactly out.size() bytes or throws TransportError.
  virtual void recv_bytes(std::span<uint8_t> out) = 0;
};

namespace detail {

/// Chunked byte queue; avoids per-byte costs on multi-megabyte payloads.
struct BytePipe {
  std::mutex mu;
  std::condition_variable cv;
  std::deque<Bytes> chunks;
  size_t head = 0;  ///< consumed prefix of chunks.front()
  bool closed = false;
};

class InProcessConnection final : public Connection {
 public:
  InProcessConnection(std::shared_ptr<BytePipe> out, std::shared_ptr<BytePipe> in)
      : out_(std::move(out)), in_(std::move(in)) {}

  ~InProcessConnection() override {
    std::lock_guard lock(out_->mu);
    out_->closed = true;
    out_->cv.notify_all();
  }

  void send_bytes(BytesView data) override {
    std::lock_guard lock(out_->mu);
    if (out_->closed) throw TransportError("connection closed");
    out_->chunks.emplace_back(data.begin(), data.end());
    out_->cv.notify_all();
  }

  void recv_bytes(std::span<uint8_t> out) override {
    std::unique_lock lock(in_->mu);
    size_t i = 0;
    while (i < out.size()) {
      in_->cv.wait(lock, [&] { return !in_->chunks.empty() || in_->closed; });
      if (in_->chunks.empty() && in_->closed) {
        throw TransportError("connection closed");
      }
      while (i < out.size() && !in_->chunks.empty()) {
        const Bytes& front = in_->chunks.front();
        const size_t take =
            std::min(out.size() - i, front.size() - in_->head);
        std::copy_n(front.begin() + in_->head, take, out.begin() + i);
        i += take;
        in_->head += take;
        if (in_->head == front.size()) {
          in_->chunks.pop_front();
          in_->head = 0;
        }
      }
    }
  }

 private:
  std::shared_ptr<BytePipe> out_;
  std::shared_ptr<BytePipe> in_;
};

}  // namespace detail

/// Two connected in-process endpoints with unbounded buffering.
inline std::pair<std::unique_ptr<Connection>, std::unique_ptr<Connection>>
make_inprocess_pair() {
  auto a_to_b = std::make_shared<detail::BytePipe>();
  auto b_to_a = std::make_shared<detail::BytePipe>();
  return {std::make_unique<detail::InProcessConnection>(a_to_b, b_to_a),
          std::make_unique<detail::InProcessConnection>(b_to_a, a_to_b)};
}

// ----------------------------------------------------------------------------
// Metrics
// ----------------------------------------------------------------------------

struct PhaseMetrics {
  uint64_t bytes_up = 0;    ///< sent by this endpoint
  uint64_t bytes_down = 0;  ///< received by this endpoint
  uint64_t frames_up = 0;
  uint64_t frames_down = 0;
  uint64_t rounds = 0;  ///< direction alternations
  uint64_t millis = 0;
};

class TranscriptMetrics {
 public:
  void set_phase(const std::string& name) {
    finish_phase();
    phase_ = name;
    phase_start_ = std::chrono::steady_clock::now();
    phases_.try_emplace(name);
    order_.push_back(name);
  }

  void on_send(size_t wire_bytes) {
    auto& m = cur();
    m.bytes_up += wire_bytes;
    m.frames_up += 1;
    bump_round(1);
  }
  void on_recv(size_t wire_bytes) {
    auto& m = cur();
    m.bytes_down += wire_bytes;
    m.frames_down += 1;
    bump_round(2);
  }

  /// Folds the elapsed wall time of the open phase into its counters.
  void finish_phase() {
    if (phase_.empty()) return;
    auto& m = phases_[phase_];
    m.millis += uint64_t(std::chrono::duration_cast<std::chrono::milliseconds>(
                             std::chrono::steady_clock::now() - phase_start_)
                             .count());
    phase_.clear();
  }

  const std::map<std::string, PhaseMetrics>& phases() const { return phases_; }
  const std::vector<std::string>& phase_order() const { return order_; }

  PhaseMetrics total() const {
    PhaseMetrics t;
    for (const auto& [_, m] : phases_) {
      t.bytes_up += m.bytes_up;
      t.bytes_down += m.bytes_down;
      t.frames_up += m.frames_up;
      t.frames_down += m.frames_down;
      t.rounds += m.rounds;
      t.millis += m.millis;
    }
    return t;
  }

  static std::string csv_header() {
    return "session_id,phase,bytes_up,bytes_down,frames,rounds,millis";
  }

  std::vector<std::string> csv_rows(uint64_t session_id,
                                    bool include_millis = true) const {
    std::vector<std::string> rows;
    for (const auto& name : order_) {
      const auto& m = phases_.at(name);
      rows.push_back(std::to_string(session_id) + "," + name + "," +
                     std::to_string(m.bytes_up) + "," +
                     std::to_string(m.bytes_down) + "," +
                     std::to_string(m.frames_up + m.frames_down) + "," +
                     std::to_string(m.rounds) + "," +
                     std::to_string(include_millis ? m.millis : 0));
    }
    return rows;
  }

 private:
  PhaseMetrics& cur() {
    if (phase_.empty()) set_phase("default");
    return phases_[phase_];
  }
  void bump_round(int dir) {
    if (dir != last_dir_) {
      cur().rounds += 1;
      last_dir_ = dir;
    }
  }

  std::string phase_;
  std::chrono::steady_clock::time_point phase_start_{};
  std::map<std::string, PhaseMetrics> phases_;
  std::vector<std::string> order_;
  int last_dir_ = 0;
};

// ----------------------------------------------------------------------------
// Framed channel with per-tag demultiplexing
// ----------------------------------------------------------------------------

class FrameChannel {
 public:
  FrameChannel(std::unique_ptr<Connection> conn, uint64_t session_id)
      : conn_(std::move(conn)), session_id_(session_id) {
    metrics_.set_phase("setup");
  }

  uint64_t session_id() const { return session_id_; }
  /// Sequential sessions may share one connection; each adopts its own id.
  void set_session_id(uint64_t id) { session_id_ = id; }
  TranscriptMetrics& metrics() { return metrics_; }
  const TranscriptMetrics& metrics() const { return metrics_; }
  void set_phase(const std::string& name) { metrics_.set_phase(name); }

  /// When enabled, records the exact wire bytes in each direction; used by
  /// transcript-parity tests.
  void enable_capture() { capture_ = true; }
  const Bytes& sent_log() const { return sent_log_; }
  const Bytes& recv_log() const { return recv_log_; }

  void send(ComponentTag tag, MsgType type, Bytes payload) {
    Frame f{session_id_, tag, type, std::move(payload)};
    const Bytes wire = f.encode();
    conn_->send_bytes(wire);
    metrics_.on_send(wire.size());
    if (capture_) sent_log_.insert(sent_log_.end(), wire.begin(), wire.end());
  }

  /// Next frame for this tag; frames for other tags are parked in arrival
  /// order. Throws TransportError if the tag's next frame has a different
  /// type than expected.
  Frame expect(ComponentTag tag, MsgType type) {
    for (;;) {
      auto it = pending_.find(tag);
      if (it != pending_.end() && !it->second.empty()) {
        Frame f = std::move(it->second.front());
        it->second.pop_front();
        if (f.msg_type != type) {
          throw TransportError("unexpected message type for component");
        }
        return f;
      }
      Frame f = read_frame();
      pending_[f.tag].push_back(std::move(f));
    }
  }

 private:
  Frame read_frame() {
    std::array<uint8_t, kFrameHeaderBytes> hdr;
    conn_->recv_bytes(hdr);
    ByteReader r(hdr);
    Frame f;
    f.session_id = r.u64();
    f.tag.bin_id = r.u32();
    f.tag.j = r.u32();
    const uint16_t type = r.u16();
    if (type < 1 || type > kMaxMsgType) {
      throw TransportError("unregistered message type " + std::to_string(type));
    }
    f.msg_type = MsgType(type);
    const uint32_t len = r.u32();
    if (len > kMaxPayloadBytes) {
      throw TransportError("frame payload length overflow");
    }
    f.payload.resize(len);
    conn_->recv_bytes(f.payload);
    metrics_.on_recv(kFrameHeaderBytes + len);
    if (capture_) {
      recv_log_.insert(recv_log_.end(), hdr.begin(), hdr.end());
      recv_log_.insert(recv_log_.end(), f.payload.begin(), f.payload.end());
    }
    return f;
  }

  std::unique_ptr<Connection> conn_;
  uint64_t session_id_;
  TranscriptMetrics metrics_;
  std::map<ComponentTag, std::deque<Frame>> pending_;
  bool capture_ = false;
  Bytes sent_log_;
  Bytes recv_log_;
};

}  // namespace ssip
