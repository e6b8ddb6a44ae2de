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

#include <optional>

#include "ssip/filters.hpp"

namespace ssip {

// Keys starting with 0xFF are reserved for padding; real inputs must avoid
// the prefix so dummies can never collide with data.
inline constexpr uint8_t kDummyPrefix = 0xFF;
inline constexpr uint8_t kServerDummyTag = 0x53;  // 'S'
inline constexpr uint8_t kClientDummyTag = 0x43;  // 'C'

inline bool is_dummy_key(BytesView key) {
  return !key.empty() && key[0] == kDummyPrefix;
}

inline void require_real_key(BytesView key) {
  if (is_dummy_key(key)) {
    throw SsipError("keys may not start with the reserved 0xFF dummy prefix");
  }
}

inline Bytes make_dummy_key(uint8_t side_tag, uint32_t bin, uint32_t counter) {
  Bytes key = {kDummyPrefix, side_tag};
  for (int i = 0; i < 4; ++i) key.push_back(uint8_t(bin >> (8 * i)));
  for (int i = 0; i < 4; ++i) key.push_back(uint8_t(counter >> (8 * i)));
  return key;
}

struct BinningParams {
  uint32_t m_bins = 0;
  uint32_t k = 3;            ///< candidate bins per key
  uint32_t beta = 0;         ///< max server bin size; 0 = derive from load
  uint32_t eta = 1;          ///< max client bin size
  Seed16 hash_seed{};
  uint32_t max_relocations = 500;
  uint32_t stash_cap = 16;

  bool operator==(const BinningParams&) const = default;
};

struct BinEntry {
  Bytes key;
  FieldElement payload;
  bool dummy = false;
};

struct BinAssignment {
  std::vector<std::vector<BinEntry>> bins;
  std::vector<BinEntry> stash;
  uint32_t beta_used = 0;  ///< set by server_bin

  uint32_t max_load() const {
    size_t mx = 0;
    for (const auto& b : bins) mx = std::max(mx, b.size());
    return uint32_t(mx);
  }
};

/// First `count` candidate bins of a key. Derivation is shared with the
/// filters module, so candidate lists for smaller counts are prefixes of
/// larger ones; the client's 2-choice candidates are always covered by the
/// server's k-way replication.
inline std::vector<uint64_t> bin_candidates(BytesView key,
                                            const BinningParams& params,
                                            uint32_t count) {
  FilterParams fp{params.m_bins, count, params.hash_seed};
  return derive_indices(key, fp);
}

/// Cuckoo hashing with one slot per bin and a bounded stash. Eviction picks a
/// random candidate; chains longer than max_relocations push the wandering
/// item to the stash.
inline BinAssignment cuckoo_build(const std::vector<BinEntry>& items,
                                  const BinningParams& params, Rng& rng) {
  if (params.m_bins < uint64_t(std::ceil(1.27 * double(items.size())))) {
    throw SsipError("cuckoo_build: bins must be at least 1.27x items");
  }
  std::vector<std::optional<BinEntry>> slots(params.m_bins);
  std::vector<BinEntry> stash;

  for (const auto& item : items) {
    BinEntry cur = item;
    bool placed = false;
    for (uint32_t iter = 0; iter <= params.max_relocations; ++iter) {
      auto cands = bin_candidates(cur.key, params, params.k);
      auto empty = std::find_if(cands.begin(), cands.end(),
                                [&](uint64_t c) { return !slots[c]; });
      if (empty != cands.end()) {
        slots[*empty] = std::move(cur);
        placed = true;
        break;
      }
      const uint64_t victim = cands[rng.below(params.k)];
      std::swap(cur, *slots[victim]);
    }
    if (!placed) {
      stash.push_back(std::move(cur));
      if (stash.size() > params.stash_cap) {
        throw StashOverflow("cuckoo stash exceeded " +
                            std::to_string(params.stash_cap));
      }
    }
  }

  BinAssignment out;
  out.bins.resize(params.m_bins);
  for (uint32_t b = 0; b < params.m_bins; ++b) {
    if (slots[b]) out.bins[b].push_back(std::move(*slots[b]));
  }
  out.stash = std::move(stash);
  return out;
}

/// Greedy 2-choice hashing: each item goes to the less-loaded of its first
/// two candidates, ties to the earlier candidate. No stash.
inline BinAssignment two_choice_build(const std::vector<BinEntry>& items,
                                      const BinningParams& params) {
  if (params.m_bins < 2) throw SsipError("two_choice_build: need >= 2 bins");
  BinAssignment out;
  out.bins.resize(params.m_bins);
  for (const auto& item : items) {
    auto cands = bin_candidates(item.key, params, 2);
    const uint64_t target = out.bins[cands[1]].size() < out.bins[cands[0]].size()
                                ? cands[1]
                                : cands[0];
    out.bins[target].push_back(item);
  }
  return out;
}

/// Server-side partition: every item is replicated into each of its k
/// (distinct) candidate bins, then bins are padded to exactly beta entries
/// with dummy pairs carrying uniform payloads. With params.beta == 0 the bound
/// is the observed max load rounded up to a power of two.
inline BinAssignment server_bin(const std::vector<BinEntry>& items,
                                const BinningParams& params,
                                const FieldModulus& mod, Rng& rng) {
  BinAssignment out;
  out.bins.resize(params.m_bins);
  for (const auto& item : items) {
    for (uint64_t b : bin_candidates(item.key, params, params.k)) {
      out.bins[b].push_back(item);
    }
  }

  uint32_t beta = params.beta;
  const uint32_t load = out.max_load();
  if (beta == 0) {
    beta = std::bit_ceil(std::max<uint32_t>(load, 1));
  } else if (load > beta) {
    throw BinOverflow("server bin load " + std::to_string(load) +
                      " exceeds beta " + std::to_string(beta));
  }

  for (uint32_t b = 0; b < params.m_bins; ++b) {
    uint32_t counter = 0;
    while (out.bins[b].size() < beta) {
      out.bins[b].push_back(BinEntry{make_dummy_key(kServerDummyTag, b, counter++),
                                     sample_uniform(rng, mod), true});
    }
  }
  out.beta_used = beta;
  return out;
}

/// Pads every client bin to exactly eta entries with dummy keys and zero
/// payloads. Throws BinOverflow if a bin already exceeds eta.
inline void pad_client_bins(BinAssignment& assignment, uint32_t eta,
                            const FieldModulus& mod) {
  for (uint32_t b = 0; b < assignment.bins.size(); ++b) {
    auto& bin = assignment.bins[b];
    if (bin.size() > eta) {
      throw BinOverflow("client bin load " + std::to_string(bin.size()) +
                        " exceeds eta " + std::to_string(eta));
    }
    uint32_t counter = 0;
    while (bin.size() < eta) {
      bin.push_back(BinEntry{make_dummy_key(kClientDummyTag, b, counter++),
                             FieldElement{0, mod}, true});
    }
  }
}

}  // namespace ssip
