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

#include "ssip/runner.hpp"
#include "ssip/sparse.hpp"

namespace ssip {

// The three application pipelines built on S-SIP. Feature ids are the keys
// and feature values / model weights the payloads, so the inner product over
// the key intersection is exactly the sparse dot product.
//
// kNN runs in reveal-scores mode and logistic regression applies the sigmoid
// client-side on the reconstructed logit. Both replace secure post-processing
// stages with explicit disclosure: the client learns per-document similarity
// scores with their labels, respectively the raw logit. secure_leakage_note()
// spells this out for CLI output.

enum class AppKind : uint8_t { kKnn = 1, kLogreg = 2, kNb = 3 };

inline const char* app_name(AppKind a) {
  switch (a) {
    case AppKind::kKnn:
      return "knn";
    case AppKind::kLogreg:
      return "logreg";
    case AppKind::kNb:
      return "nb";
  }
  return "?";
}

inline const char* app_leakage_note(AppKind a) {
  switch (a) {
    case AppKind::kKnn:
      return "reveal-scores mode: client learns per-document similarity "
             "scores and candidate labels";
    case AppKind::kLogreg:
      return "client-side sigmoid: client learns the raw logit and the bias";
    case AppKind::kNb:
      return "client learns per-class intersection scores";
  }
  return "";
}

struct AppConfig {
  AppKind app = AppKind::kKnn;
  ProtocolKind protocol = ProtocolKind::kSsip2;
  uint64_t seed = 1;
  uint32_t fraction_bits = kDefaultFractionBits;
  double fpr = 0x1p-30;
  uint32_t k_nn = 5;
  BatchConfig batch;
};

struct KnnModel {
  std::vector<SparseVector> docs;  ///< raw; normalized inside the pipeline
  std::vector<int32_t> labels;
};

struct LogregModel {
  SparseVector weights;
  double bias = 0.0;
};

struct NbModel {
  std::vector<int32_t> class_labels;
  std::vector<SparseVector> log_likelihood;  ///< one table per class
};

// ----------------------------------------------------------------------------
// Encoding
// ----------------------------------------------------------------------------

inline ClientInput encode_client_vector(const SparseVector& v,
                                        const FixedPointCodec& codec) {
  ClientInput out;
  for (const auto& [id, val] : v.entries) {
    out.push_back(KeyValue{feature_key(id), codec.encode(val)});
  }
  return out;
}

inline ServerInput encode_server_vector(const SparseVector& v,
                                        const FixedPointCodec& codec) {
  ServerInput out;
  for (const auto& [id, val] : v.entries) {
    out.push_back(KeyValue{feature_key(id), codec.encode(val)});
  }
  return out;
}

// ----------------------------------------------------------------------------
// Plaintext reference oracles
// ----------------------------------------------------------------------------

/// Top-k_nn majority vote. Ties in score go to the lower document index,
/// ties in the vote to the smallest label. Shared verbatim by the secure and
/// plaintext paths so only the scores differ.
inline int32_t knn_vote(const std::vector<double>& scores,
                        const std::vector<int32_t>& labels, uint32_t k_nn) {
  if (scores.empty() || scores.size() != labels.size()) {
    throw SsipError("knn_vote: empty or mismatched inputs");
  }
  std::vector<size_t> order(scores.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](size_t a, size_t b) {
    if (scores[a] != scores[b]) return scores[a] > scores[b];
    return a < b;
  });
  std::map<int32_t, uint32_t> votes;
  const size_t take = std::min<size_t>(k_nn, order.size());
  for (size_t i = 0; i < take; ++i) votes[labels[order[i]]]++;
  int32_t best = labels[order[0]];
  uint32_t best_count = 0;
  for (const auto& [label, count] : votes) {  // map order: smallest label wins
    if (count > best_count) {
      best = label;
      best_count = count;
    }
  }
  return best;
}

inline std::vector<double> knn_scores_plain(const SparseVector& query,
                                            const KnnModel& model) {
  const SparseVector q = normalize_l2(query);
  std::vector<double> scores;
  for (const auto& doc : model.docs) {
    scores.push_back(dot_sparse(q, normalize_l2(doc)));
  }
  return scores;
}

inline int32_t knn_plain(const SparseVector& query, const KnnModel& model,
                         uint32_t k_nn) {
  return knn_vote(knn_scores_plain(query, model), model.labels, k_nn);
}

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

inline double logreg_plain(const SparseVector& features,
                           const LogregModel& model) {
  return sigmoid(dot_sparse(features, model.weights) + model.bias);
}

inline std::vector<double> nb_scores_plain(const SparseVector& features,
                                           const NbModel& model) {
  std::vector<double> scores;
  for (const auto& table : model.log_likelihood) {
    double acc = 0.0;
    for (const auto& [id, w] : table.entries) {
      for (const auto& [fid, _] : features.entries) {
        if (fid == id) acc += w;
      }
    }
    scores.push_back(acc);
  }
  return scores;
}

/// Argmax with ties to the smallest class label.
inline int32_t argmax_class(const std::vector<double>& scores,
                            const std::vector<int32_t>& labels) {
  if (scores.empty() || scores.size() != labels.size()) {
    throw SsipError("argmax_class: empty or mismatched inputs");
  }
  size_t best = 0;
  for (size_t i = 1; i < scores.size(); ++i) {
    if (scores[i] > scores[best] ||
        (scores[i] == scores[best] && labels[i] < labels[best])) {
      best = i;
    }
  }
  return labels[best];
}

// ----------------------------------------------------------------------------
// Secure pipelines over a channel (role-split, reusable over TCP)
// ----------------------------------------------------------------------------

namespace detail {

/// One S-SIP instance per (query, server vector) pair. Sessions share the
/// channel sequentially; instance seeds derive from the app seed.
inline ProtocolConfig instance_config(const AppConfig& cfg, uint64_t p,
                                      uint64_t instance) {
  ProtocolConfig pc;
  pc.protocol = cfg.protocol;
  pc.p = p;
  pc.fpr = cfg.fpr;
  pc.batch = cfg.batch;
  pc.seed = siphash24(seed_from_u64(cfg.seed), "instance", instance);
  pc.reveal = true;
  return pc;
}

struct AppHello {
  uint8_t app = 0;
  uint8_t protocol = 0;
  uint64_t seed = 0;
  uint32_t fraction_bits = 0;
  uint32_t k_nn = 0;

  Bytes encode() const {
    ByteWriter w;
    w.u8(app);
    w.u8(protocol);
    w.u64(seed);
    w.u32(fraction_bits);
    w.u32(k_nn);
    return w.take();
  }
  static AppHello decode(BytesView b) {
    ByteReader r(b);
    AppHello h{r.u8(), r.u8(), r.u64(), r.u32(), r.u32()};
    r.expect_done();
    return h;
  }
};

}  // namespace detail

/// Client side of secure similarity scoring: one S-SIP instance per server
/// document, scores reconstructed from the revealed aggregates.
inline std::vector<double> secure_scores_client(
    FrameChannel& ch, const ClientInput& encoded_query, uint32_t n_instances,
    const AppConfig& cfg, const FixedPointCodec& codec, const HeBackend& he,
    const OtBackend& ot) {
  std::vector<double> scores;
  for (uint32_t i = 0; i < n_instances; ++i) {
    const ProtocolConfig pc = detail::instance_config(cfg, codec.modulus().p, i);
    ch.set_session_id(pc.session_id());
    PartyResult res;
    switch (cfg.protocol) {
      case ProtocolKind::kSsip1:
        res = ssip1_client(ch, encoded_query, pc, he, ot);
        break;
      case ProtocolKind::kSsip2:
        res = ssip2_client(ch, encoded_query, pc, he, ot);
        break;
      case ProtocolKind::kBatched:
        res = batched_client(ch, encoded_query, pc, he, ot);
        break;
    }
    scores.push_back(codec.decode(*res.revealed_aggregate, 2));
  }
  return scores;
}

inline void secure_scores_server(FrameChannel& ch,
                                 const std::vector<ServerInput>& instances,
                                 const AppConfig& cfg,
                                 const FixedPointCodec& codec,
                                 const HeBackend& he, const OtBackend& ot) {
  for (uint32_t i = 0; i < instances.size(); ++i) {
    const ProtocolConfig pc = detail::instance_config(cfg, codec.modulus().p, i);
    ch.set_session_id(pc.session_id());
    switch (cfg.protocol) {
      case ProtocolKind::kSsip1:
        ssip1_server(ch, instances[i], pc, he, ot);
        break;
      case ProtocolKind::kSsip2:
        ssip2_server(ch, instances[i], pc, he, ot);
        break;
      case ProtocolKind::kBatched:
        batched_server(ch, instances[i], pc, he, ot);
        break;
    }
  }
}

struct KnnClientResult {
  std::vector<double> scores;
  std::vector<int32_t> labels;  ///< revealed candidate labels
  int32_t predicted = 0;
};

inline KnnClientResult knn_client(FrameChannel& ch, const SparseVector& query,
                                  const AppConfig& cfg, const HeBackend& he,
                                  const OtBackend& ot) {
  const FixedPointCodec codec(he.modulus(), cfg.fraction_bits);
  detail::AppHello hello{uint8_t(AppKind::kKnn), uint8_t(cfg.protocol),
                         cfg.seed, cfg.fraction_bits, cfg.k_nn};
  ch.send(kControlTag, MsgType::kAppHeader, hello.encode());

  Frame f = ch.expect(kControlTag, MsgType::kAppHeader);
  ByteReader r(f.payload);
  const uint32_t n_docs = r.u32();
  std::vector<int32_t> labels(n_docs);
  for (auto& l : labels) l = int32_t(r.u32());
  r.expect_done();

  const ClientInput encoded =
      encode_client_vector(normalize_l2(query), codec);
  KnnClientResult out;
  out.scores = secure_scores_client(ch, encoded, n_docs, cfg, codec, he, ot);
  out.labels = labels;
  out.predicted = knn_vote(out.scores, labels, cfg.k_nn);
  return out;
}

inline void knn_server(FrameChannel& ch, const KnnModel& model,
                       const HeBackend& he, const OtBackend& ot) {
  Frame f = ch.expect(kControlTag, MsgType::kAppHeader);
  const auto hello = detail::AppHello::decode(f.payload);
  AppConfig cfg;
  cfg.app = AppKind::kKnn;
  cfg.protocol = ProtocolKind(hello.protocol);
  cfg.seed = hello.seed;
  cfg.fraction_bits = hello.fraction_bits;
  cfg.k_nn = hello.k_nn;
  const FixedPointCodec codec(he.modulus(), cfg.fraction_bits);

  ByteWriter w;
  w.u32(uint32_t(model.docs.size()));
  for (int32_t l : model.labels) w.u32(uint32_t(l));
  ch.send(kControlTag, MsgType::kAppHeader, w.take());

  std::vector<ServerInput> instances;
  for (const auto& doc : model.docs) {
    instances.push_back(encode_server_vector(normalize_l2(doc), codec));
  }
  secure_scores_server(ch, instances, cfg, codec, he, ot);
}

struct LogregClientResult {
  double logit = 0.0;
  double probability = 0.0;
};

inline LogregClientResult logreg_client(FrameChannel& ch,
                                        const SparseVector& features,
                                        const AppConfig& cfg,
                                        const HeBackend& he,
                                        const OtBackend& ot) {
  const FixedPointCodec codec(he.modulus(), cfg.fraction_bits);
  detail::AppHello hello{uint8_t(AppKind::kLogreg), uint8_t(cfg.protocol),
                         cfg.seed, cfg.fraction_bits, 0};
  ch.send(kControlTag, MsgType::kAppHeader, hello.encode());

  Frame f = ch.expect(kControlTag, MsgType::kAppHeader);
  ByteReader r(f.payload);
  uint64_t bias_bits = r.u64();
  r.expect_done();
  double bias;
  static_assert(sizeof(bias) == sizeof(bias_bits));
  std::memcpy(&bias, &bias_bits, sizeof(bias));

  const ClientInput encoded = encode_client_vector(features, codec);
  const auto scores =
      secure_scores_client(ch, encoded, 1, cfg, codec, he, ot);
  LogregClientResult out;
  out.logit = scores[0] + bias;
  out.probability = sigmoid(out.logit);
  return out;
}

inline void logreg_server(FrameChannel& ch, const LogregModel& model,
                          const HeBackend& he, const OtBackend& ot) {
  Frame f = ch.expect(kControlTag, MsgType::kAppHeader);
  const auto hello = detail::AppHello::decode(f.payload);
  AppConfig cfg;
  cfg.app = AppKind::kLogreg;
  cfg.protocol = ProtocolKind(hello.protocol);
  cfg.seed = hello.seed;
  cfg.fraction_bits = hello.fraction_bits;
  const FixedPointCodec codec(he.modulus(), cfg.fraction_bits);

  ByteWriter w;
  uint64_t bias_bits;
  std::memcpy(&bias_bits, &model.bias, sizeof(bias_bits));
  w.u64(bias_bits);
  ch.send(kControlTag, MsgType::kAppHeader, w.take());

  secure_scores_server(ch, {encode_server_vector(model.weights, codec)}, cfg,
                       codec, he, ot);
}

struct NbClientResult {
  std::vector<double> scores;
  std::vector<int32_t> class_labels;
  int32_t predicted = 0;
};

inline NbClientResult nb_client(FrameChannel& ch, const SparseVector& features,
                                const AppConfig& cfg, const HeBackend& he,
                                const OtBackend& ot) {
  const FixedPointCodec codec(he.modulus(), cfg.fraction_bits);
  detail::AppHello hello{uint8_t(AppKind::kNb), uint8_t(cfg.protocol),
                         cfg.seed, cfg.fraction_bits, 0};
  ch.send(kControlTag, MsgType::kAppHeader, hello.encode());

  Frame f = ch.expect(kControlTag, MsgType::kAppHeader);
  ByteReader r(f.payload);
  const uint32_t n_classes = r.u32();
  std::vector<int32_t> class_labels(n_classes);
  for (auto& l : class_labels) l = int32_t(r.u32());
  r.expect_done();

  // client payload is 1 per present feature; server payload the log weight
  SparseVector ones;
  ones.dim = features.dim;
  for (const auto& [id, _] : features.entries) ones.entries.emplace_back(id, 1.0);

  const ClientInput encoded = encode_client_vector(ones, codec);
  NbClientResult out;
  out.scores =
      secure_scores_client(ch, encoded, n_classes, cfg, codec, he, ot);
  out.class_labels = class_labels;
  out.predicted = argmax_class(out.scores, class_labels);
  return out;
}

inline void nb_server(FrameChannel& ch, const NbModel& model,
                      const HeBackend& he, const OtBackend& ot) {
  Frame f = ch.expect(kControlTag, MsgType::kAppHeader);
  const auto hello = detail::AppHello::decode(f.payload);
  AppConfig cfg;
  cfg.app = AppKind::kNb;
  cfg.protocol = ProtocolKind(hello.protocol);
  cfg.seed = hello.seed;
  cfg.fraction_bits = hello.fraction_bits;
  const FixedPointCodec codec(he.modulus(), cfg.fraction_bits);

  ByteWriter w;
  w.u32(uint32_t(model.class_labels.size()));
  for (int32_t l : model.class_labels) w.u32(uint32_t(l));
  ch.send(kControlTag, MsgType::kAppHeader, w.take());

  std::vector<ServerInput> instances;
  for (const auto& table : model.log_likelihood) {
    instances.push_back(encode_server_vector(table, codec));
  }
  secure_scores_server(ch, instances, cfg, codec, he, ot);
}

// ----------------------------------------------------------------------------
// In-process app execution
// ----------------------------------------------------------------------------

template <typename ClientFn, typename ServerFn>
auto run_app_inprocess(ClientFn&& client_fn, ServerFn&& server_fn) {
  auto [cc, sc] = make_inprocess_pair();
  auto client_ch = std::make_optional<FrameChannel>(std::move(cc), 0);
  auto server_ch = std::make_optional<FrameChannel>(std::move(sc), 0);

  std::exception_ptr server_error;
  std::thread server_thread([&] {
    try {
      server_fn(*server_ch);
    } catch (...) {
      server_error = std::current_exception();
    }
    server_ch.reset();
  });
  std::exception_ptr client_error;
  decltype(client_fn(*client_ch)) result{};
  try {
    result = client_fn(*client_ch);
  } catch (...) {
    client_error = std::current_exception();
  }
  client_ch.reset();
  server_thread.join();
  if (client_error) std::rethrow_exception(client_error);
  if (server_error) std::rethrow_exception(server_error);
  return result;
}

}  // namespace ssip
