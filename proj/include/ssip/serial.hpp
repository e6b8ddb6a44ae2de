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

#include <cstring>

#include "ssip/common.hpp"

namespace ssip {

// Little-endian byte writer/reader pair. All wire and file formats in this
// library are defined in terms of these primitives so they stay bit-exact
// across platforms.

class ByteWriter {
 public:
  void u8(uint8_t v) { buf_.push_back(v); }
  void u16(uint16_t v) { raw(&v, 2); }
  void u32(uint32_t v) { raw(&v, 4); }
  void u64(uint64_t v) { raw(&v, 8); }
  void bytes(BytesView b) { buf_.insert(buf_.end(), b.begin(), b.end()); }
  /// u32 length prefix followed by the bytes.
  void var_bytes(BytesView b) {
    u32(static_cast<uint32_t>(b.size()));
    bytes(b);
  }

  const Bytes& data() const { return buf_; }
  Bytes take() { return std::move(buf_); }

 private:
  void raw(const void* p, size_t n) {
    const auto* c = static_cast<const uint8_t*>(p);
    // little-endian host assumed; asserted in one place for clarity
    static_assert(std::endian::native == std::endian::little);
    buf_.insert(buf_.end(), c, c + n);
  }
  Bytes buf_;
};

class ByteReader {
 public:
  explicit ByteReader(BytesView b) : buf_(b) {}

  uint8_t u8() { return take(1)[0]; }
  uint16_t u16() { return read_le<uint16_t>(); }
  uint32_t u32() { return read_le<uint32_t>(); }
  uint64_t u64() { return read_le<uint64_t>(); }
  Bytes bytes(size_t n) {
    auto s = take(n);
    return Bytes(s.begin(), s.end());
  }
  Bytes var_bytes() { return bytes(u32()); }

  size_t remaining() const { return buf_.size() - pos_; }
  bool done() const { return remaining() == 0; }
  void expect_done() const {
    if (!done()) throw ParseError("trailing bytes in payload");
  }

 private:
  template <typename T>
  T read_le() {
    auto s = take(sizeof(T));
    T v;
    std::memcpy(&v, s.data(), sizeof(T));
    return v;
  }
  BytesView take(size_t n) {
    if (remaining() < n) throw ParseError("payload truncated");
    auto s = buf_.subspan(pos_, n);
    pos_ += n;
    return s;
  }
  BytesView buf_;
  size_t pos_ = 0;
};

}  // namespace ssip
