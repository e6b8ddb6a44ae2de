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

#include <array>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace ssip {

using Bytes = std::vector<uint8_t>;
using BytesView = std::span<const uint8_t>;

/// 16-byte seed used to key hash functions and derive per-session randomness.
using Seed16 = std::array<uint8_t, 16>;

inline Bytes to_bytes(std::string_view s) {
  return Bytes(s.begin(), s.end());
}

// ----------------------------------------------------------------------------
// Error hierarchy
// ----------------------------------------------------------------------------

class SsipError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Two field elements (or a key and a ciphertext) disagree on the modulus.
class ModulusMismatch : public SsipError {
 public:
  ModulusMismatch() : SsipError("field modulus mismatch") {}
};

/// A real value does not fit the fixed-point encoding range.
class CodecOverflow : public SsipError {
  using SsipError::SsipError;
};

/// Garbled Bloom filter insertion ran out of free slots for a key.
class InsertionFailure : public SsipError {
  using SsipError::SsipError;
};

/// A hash bin exceeded its configured maximum size.
class BinOverflow : public SsipError {
  using SsipError::SsipError;
};

/// Cuckoo stash exceeded its configured bound.
class StashOverflow : public SsipError {
  using SsipError::SsipError;
};

class HeError : public SsipError {
  using SsipError::SsipError;
};

/// A depth-1 ciphertext was multiplied again.
class LevelError : public HeError {
 public:
  LevelError() : HeError("ciphertext multiplication depth exceeded") {}
};

class OtError : public SsipError {
  using SsipError::SsipError;
};

class PirError : public SsipError {
  using SsipError::SsipError;
};

class TransportError : public SsipError {
  using SsipError::SsipError;
};

/// Input file or wire payload failed to parse.
class ParseError : public SsipError {
  using SsipError::SsipError;
};

}  // namespace ssip
