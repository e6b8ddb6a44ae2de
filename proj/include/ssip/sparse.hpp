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

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "ssip/common.hpp"
#include "ssip/rng.hpp"

namespace ssip {

/// Sparse real-valued vector keyed by feature id.
struct SparseVector {
  std::vector<std::pair<uint64_t, double>> entries;  ///< distinct feature ids
  uint64_t dim = 0;
};

struct LabeledCorpus {
  std::vector<SparseVector> docs;
  std::vector<int32_t> labels;
  std::vector<int32_t> classes;  ///< sorted unique labels
  uint64_t dim = 0;
};

/// 8-byte big-endian encoding; keeps feature keys clear of the reserved
/// dummy prefix for any id below 2^56 * 255.
inline Bytes feature_key(uint64_t id) {
  Bytes b(8);
  for (int i = 0; i < 8; ++i) b[i] = uint8_t(id >> (8 * (7 - i)));
  return b;
}

inline double dot_sparse(const SparseVector& a, const SparseVector& b) {
  double acc = 0.0;
  for (const auto& [ia, va] : a.entries) {
    for (const auto& [ib, vb] : b.entries) {
      if (ia == ib) acc += va * vb;
    }
  }
  return acc;
}

/// Number of shared feature ids; the fixed-point error bound scales with it.
inline size_t intersection_size(const SparseVector& a, const SparseVector& b) {
  size_t n = 0;
  for (const auto& [ia, _] : a.entries) {
    for (const auto& [ib, __] : b.entries) {
      if (ia == ib) ++n;
    }
  }
  return n;
}

inline SparseVector normalize_l2(const SparseVector& v) {
  double norm2 = 0.0;
  for (const auto& [_, val] : v.entries) norm2 += val * val;
  if (norm2 == 0.0) throw SsipError("cannot normalize a zero vector");
  const double inv = 1.0 / std::sqrt(norm2);
  SparseVector out = v;
  for (auto& [_, val] : out.entries) val *= inv;
  return out;
}

/// Parses the libsvm-like text format: one document per line,
/// "label idx:val idx:val ...". Feature ids must be distinct per line.
inline LabeledCorpus load_sparse(std::istream& in) {
  LabeledCorpus corpus;
  std::set<int32_t> classes;
  std::string line;
  size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    int64_t label;
    if (!(ls >> label)) {
      throw ParseError("line " + std::to_string(line_no) + ": missing label");
    }
    SparseVector vec;
    std::set<uint64_t> seen;
    std::string tok;
    while (ls >> tok) {
      const auto colon = tok.find(':');
      if (colon == std::string::npos) {
        throw ParseError("line " + std::to_string(line_no) +
                         ": expected idx:val, got '" + tok + "'");
      }
      uint64_t idx = 0;
      double val = 0.0;
      try {
        idx = std::stoull(tok.substr(0, colon));
        val = std::stod(tok.substr(colon + 1));
      } catch (const std::exception&) {
        throw ParseError("line " + std::to_string(line_no) +
                         ": bad idx:val '" + tok + "'");
      }
      if (!seen.insert(idx).second) {
        throw ParseError("line " + std::to_string(line_no) +
                         ": duplicate feature index " + std::to_string(idx));
      }
      vec.entries.emplace_back(idx, val);
      corpus.dim = std::max(corpus.dim, idx + 1);
    }
    corpus.docs.push_back(std::move(vec));
    corpus.labels.push_back(int32_t(label));
    classes.insert(int32_t(label));
  }
  for (auto& doc : corpus.docs) doc.dim = corpus.dim;
  corpus.classes.assign(classes.begin(), classes.end());
  return corpus;
}

inline LabeledCorpus load_sparse_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw SsipError("cannot open " + path);
  return load_sparse(in);
}

inline void save_sparse_file(const std::string& path,
                             const LabeledCorpus& corpus) {
  std::ofstream out(path);
  if (!out) throw SsipError("cannot write " + path);
  for (size_t i = 0; i < corpus.docs.size(); ++i) {
    out << corpus.labels[i];
    for (const auto& [idx, val] : corpus.docs[i].entries) {
      out << ' ' << idx << ':' << val;
    }
    out << '\n';
  }
}

// ----------------------------------------------------------------------------
// Synthetic data with real-world sparsity profiles
// ----------------------------------------------------------------------------

struct SparsityProfile {
  std::string name;
  uint64_t dim = 0;
  double avg_nonzeros = 0;
  uint32_t num_classes = 2;
};

/// Profiles mirroring the document corpora the pipelines target.
inline const std::vector<SparsityProfile>& builtin_profiles() {
  static const std::vector<SparsityProfile> profiles = {
      {"movies", 95626, 136, 2},
      {"newsgroups", 101631, 98, 20},
      {"languages1", 1033, 43, 11},
      {"languages2", 9915, 231, 11},
  };
  return profiles;
}

inline const SparsityProfile& profile_by_name(const std::string& name) {
  for (const auto& p : builtin_profiles()) {
    if (p.name == name) return p;
  }
  throw SsipError("unknown sparsity profile: " + name);
}

namespace detail {

/// Poisson draw (Knuth); matches the profile's mean nonzero count.
inline uint64_t poisson(Rng& rng, double lambda) {
  const double limit = std::exp(-lambda);
  double prod = 1.0;
  uint64_t n = 0;
  do {
    ++n;
    prod *= double(rng.below(uint64_t{1} << 53)) / double(uint64_t{1} << 53);
  } while (prod > limit);
  return n - 1;
}

}  // namespace detail

/// Document with Poisson(avg_nonzeros) distinct features and values in
/// (0, 1].
inline SparseVector synth_doc(Rng& rng, const SparsityProfile& profile) {
  SparseVector vec;
  vec.dim = profile.dim;
  uint64_t nnz = std::min<uint64_t>(
      profile.dim, detail::poisson(rng, profile.avg_nonzeros));
  std::set<uint64_t> ids;
  while (ids.size() < nnz) ids.insert(rng.below(profile.dim));
  for (uint64_t id : ids) {
    const double val =
        double(1 + rng.below(uint64_t{1} << 20)) / double(uint64_t{1} << 20);
    vec.entries.emplace_back(id, val);
  }
  return vec;
}

inline LabeledCorpus synth_corpus(Rng& rng, const SparsityProfile& profile,
                                  size_t num_docs) {
  LabeledCorpus corpus;
  corpus.dim = profile.dim;
  for (size_t i = 0; i < num_docs; ++i) {
    corpus.docs.push_back(synth_doc(rng, profile));
    corpus.labels.push_back(int32_t(rng.below(profile.num_classes)));
  }
  std::set<int32_t> classes(corpus.labels.begin(), corpus.labels.end());
  corpus.classes.assign(classes.begin(), classes.end());
  return corpus;
}

}  // namespace ssip
