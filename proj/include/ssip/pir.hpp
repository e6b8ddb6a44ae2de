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

#include "ssip/he.hpp"
#include "ssip/transport.hpp"

namespace ssip {

// Single-server PIR over a two-level (sqrt(N) x sqrt(N)) layout. The client
// uploads encrypted row and column indicator vectors; the server combines
// them with one ciphertext-ciphertext multiply per column, so answers sit at
// the multiplied level and queries cost Theta(sqrt(N)) ciphertexts.
//
// Sum-PIR retrieves the masked sum over k positions: the server adds the k
// answers and subtracts an encryption of its mask r, keeping r as its
// additive share.

struct PirShape {
  uint32_t rows = 0;
  uint32_t cols = 0;

  uint64_t capacity() const { return uint64_t(rows) * cols; }
  bool operator==(const PirShape&) const = default;
};

inline PirShape default_pir_shape(uint64_t n) {
  const uint32_t side = uint32_t(std::ceil(std::sqrt(double(std::max<uint64_t>(n, 1)))));
  return PirShape{side, side};
}

struct PirDatabase {
  std::vector<uint64_t> entries;
  FieldModulus mod;
  PirShape shape;
  std::vector<uint64_t> col_major;  ///< zero-padded, for the answer loop

  PirDatabase(std::vector<uint64_t> values, const FieldModulus& m)
      : entries(std::move(values)),
        mod(m),
        shape(default_pir_shape(entries.size())),
        col_major(shape.capacity(), 0) {
    for (uint64_t i = 0; i < entries.size(); ++i) {
      const uint64_t r = i / shape.cols;
      const uint64_t c = i % shape.cols;
      col_major[c * shape.rows + r] = entries[i];
    }
  }

  uint64_t size() const { return entries.size(); }

  /// Cell value; padding beyond N is zero.
  FieldElement cell(uint32_t r, uint32_t c) const {
    const uint64_t idx = uint64_t(r) * shape.cols + c;
    return FieldElement{idx < entries.size() ? entries[idx] : 0, mod};
  }

  std::span<const uint64_t> column(uint32_t c) const {
    return std::span<const uint64_t>(col_major).subspan(
        uint64_t(c) * shape.rows, shape.rows);
  }
};

struct PirQuery {
  PirShape shape;
  std::vector<Ciphertext> row_sel;
  std::vector<Ciphertext> col_sel;

  void serialize(ByteWriter& w) const {
    w.u32(shape.rows);
    w.u32(shape.cols);
    for (const auto& ct : row_sel) ct.serialize(w);
    for (const auto& ct : col_sel) ct.serialize(w);
  }

  static PirQuery deserialize(ByteReader& r, PirShape expected) {
    PirQuery q;
    q.shape.rows = r.u32();
    q.shape.cols = r.u32();
    if (!(q.shape == expected)) throw PirError("query shape mismatch");
    q.row_sel.reserve(q.shape.rows);
    q.col_sel.reserve(q.shape.cols);
    for (uint32_t i = 0; i < q.shape.rows; ++i) {
      q.row_sel.push_back(Ciphertext::deserialize(r));
    }
    for (uint32_t i = 0; i < q.shape.cols; ++i) {
      q.col_sel.push_back(Ciphertext::deserialize(r));
    }
    return q;
  }
};

/// Encrypted indicator query for entry `index`. The row selector carries
/// `scale` (default 1) at the target row, so the extracted value is
/// scale * DB[index]; protocols use this to fold a private factor into the
/// query instead of spending a second multiplication level.
inline PirQuery pir_query(const HeBackend& he, const HePublicKey& pk,
                          uint64_t index, PirShape shape, Rng& rng,
                          std::optional<FieldElement> scale = std::nullopt) {
  if (index >= shape.capacity()) throw PirError("PIR index out of range");
  const FieldModulus& mod = he.modulus();
  const FieldElement hot =
      scale.value_or(FieldElement{1, mod});
  const uint32_t target_row = uint32_t(index / shape.cols);
  const uint32_t target_col = uint32_t(index % shape.cols);

  PirQuery q;
  q.shape = shape;
  q.row_sel.reserve(shape.rows);
  q.col_sel.reserve(shape.cols);
  for (uint32_t r = 0; r < shape.rows; ++r) {
    q.row_sel.push_back(he.encrypt(
        pk, r == target_row ? hot : FieldElement{0, mod}, rng));
  }
  for (uint32_t c = 0; c < shape.cols; ++c) {
    q.col_sel.push_back(he.encrypt(
        pk, c == target_col ? FieldElement{1, mod} : FieldElement{0, mod},
        rng));
  }
  return q;
}

/// Homomorphic evaluation of one query:
///   answer = sum_c ct_mul(sum_r row[r] * DB[r,c], col[c])
/// One ciphertext multiplication level, uniform work per cell.
inline Ciphertext pir_answer(const HeBackend& he, const PirQuery& q,
                             const PirDatabase& db) {
  if (!(q.shape == db.shape)) throw PirError("answer shape mismatch");
  std::optional<Ciphertext> answer;
  for (uint32_t c = 0; c < q.shape.cols; ++c) {
    Ciphertext partial = he.weighted_sum(q.row_sel, db.column(c));
    Ciphertext column = he.ct_mul(partial, q.col_sel[c]);
    answer = answer ? he.add(*answer, column) : std::move(column);
  }
  return *answer;
}

inline FieldElement pir_extract(const HeBackend& he, const HeSecretKey& sk,
                                const Ciphertext& d) {
  return he.decrypt(sk, d);
}

// ----------------------------------------------------------------------------
// Sum-PIR over the frame channel
// ----------------------------------------------------------------------------

/// Client side: sends k queries in one frame, receives the masked sum
/// v = scale * sum_i DB[zeta_i] - r (mod p), where r is the server's share.
inline FieldElement sum_pir_client(FrameChannel& ch, ComponentTag tag,
                                   const HeBackend& he, const HePublicKey& pk,
                                   const HeSecretKey& sk,
                                   const std::vector<uint64_t>& indices,
                                   uint64_t db_size, Rng& rng,
                                   std::optional<FieldElement> scale =
                                       std::nullopt) {
  const PirShape shape = default_pir_shape(db_size);
  for (size_t i = 0; i < indices.size(); ++i) {
    if (indices[i] >= db_size) throw PirError("Sum-PIR index out of range");
    for (size_t j = i + 1; j < indices.size(); ++j) {
      if (indices[i] == indices[j]) {
        throw PirError("Sum-PIR indices must be distinct");
      }
    }
  }

  ByteWriter w;
  w.u32(shape.rows);
  w.u32(shape.cols);
  w.u32(uint32_t(indices.size()));
  for (uint64_t idx : indices) {
    pir_query(he, pk, idx, shape, rng, scale).serialize(w);
  }
  ch.send(tag, MsgType::kPirQuery, w.take());

  Frame f = ch.expect(tag, MsgType::kPirAnswer);
  ByteReader r(f.payload);
  Ciphertext ct = Ciphertext::deserialize(r);
  r.expect_done();
  return pir_extract(he, sk, ct);
}

/// Server side: answers the k queries, sums them, subtracts Enc(pk, mask)
/// and replies. The caller keeps `mask` as its additive share.
inline void sum_pir_server(FrameChannel& ch, ComponentTag tag,
                           const HeBackend& he, const HePublicKey& pk,
                           const PirDatabase& db, FieldElement mask,
                           Rng& rng) {
  Frame f = ch.expect(tag, MsgType::kPirQuery);
  ByteReader r(f.payload);
  const PirShape shape{r.u32(), r.u32()};
  if (!(shape == db.shape)) throw PirError("Sum-PIR shape mismatch");
  const uint32_t k = r.u32();
  if (k == 0) throw PirError("Sum-PIR needs at least one index");

  std::optional<Ciphertext> sum;
  for (uint32_t i = 0; i < k; ++i) {
    const PirQuery q = PirQuery::deserialize(r, shape);
    Ciphertext ans = pir_answer(he, q, db);
    sum = sum ? he.add(*sum, ans) : std::move(ans);
  }
  r.expect_done();

  Ciphertext masked = he.sub(*sum, he.encrypt(pk, mask, rng));
  ByteWriter w;
  masked.serialize(w);
  ch.send(tag, MsgType::kPirAnswer, w.take());
}

}  // namespace ssip
