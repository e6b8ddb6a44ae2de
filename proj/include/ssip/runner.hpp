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
#include <thread>

#include "ssip/ssip1.hpp"
#include "ssip/ssip2.hpp"

namespace ssip {

// Runs both party state machines in one process over the in-process duplex
// transport, one thread per party. Channel teardown doubles as an abort
// signal: if one side throws, destroying its channel unblocks the peer.

struct InProcessOptions {
  const OfflinePackage* client_package_cache = nullptr;
  const Ssip1OfflineState* server_offline_cache = nullptr;
  bool capture_transcripts = false;
};

struct CapturedTranscripts {
  Bytes client_sent;
  Bytes client_received;
};

struct InProcessRun {
  RunResult result;
  CapturedTranscripts transcripts;
};

inline InProcessRun run_inprocess(const ClientInput& client_input,
                                  const ServerInput& server_input,
                                  const ProtocolConfig& cfg,
                                  const HeBackend& he, const OtBackend& ot,
                                  const InProcessOptions& opts = {}) {
  auto [client_conn, server_conn] = make_inprocess_pair();
  auto client_ch = std::make_optional<FrameChannel>(std::move(client_conn),
                                                    cfg.session_id());
  auto server_ch = std::make_optional<FrameChannel>(std::move(server_conn),
                                                    cfg.session_id());
  if (opts.capture_transcripts) client_ch->enable_capture();

  InProcessRun out;
  std::exception_ptr server_error;
  std::thread server_thread([&] {
    try {
      switch (cfg.protocol) {
        case ProtocolKind::kSsip1:
          out.result.server = ssip1_server(*server_ch, server_input, cfg, he,
                                           ot, opts.server_offline_cache);
          break;
        case ProtocolKind::kSsip2:
          out.result.server = ssip2_server(*server_ch, server_input, cfg, he, ot);
          break;
        case ProtocolKind::kBatched:
          out.result.server = batched_server(*server_ch, server_input, cfg, he, ot);
          break;
      }
    } catch (...) {
      server_error = std::current_exception();
    }
    server_ch.reset();  // unblock the client if it is still reading
  });

  std::exception_ptr client_error;
  try {
    switch (cfg.protocol) {
      case ProtocolKind::kSsip1:
        out.result.client = ssip1_client(*client_ch, client_input, cfg, he, ot,
                                         opts.client_package_cache);
        break;
      case ProtocolKind::kSsip2:
        out.result.client = ssip2_client(*client_ch, client_input, cfg, he, ot);
        break;
      case ProtocolKind::kBatched:
        out.result.client = batched_client(*client_ch, client_input, cfg, he, ot);
        break;
    }
  } catch (...) {
    client_error = std::current_exception();
  }
  if (opts.capture_transcripts && client_ch) {
    out.transcripts.client_sent = client_ch->sent_log();
    out.transcripts.client_received = client_ch->recv_log();
  }
  client_ch.reset();
  server_thread.join();

  // A TransportError usually just means the peer aborted; surface the
  // peer's root cause instead when there is one.
  auto is_transport = [](const std::exception_ptr& e) {
    try {
      std::rethrow_exception(e);
    } catch (const TransportError&) {
      return true;
    } catch (...) {
      return false;
    }
  };
  if (client_error && server_error) {
    std::rethrow_exception(is_transport(client_error) ? server_error
                                                      : client_error);
  }
  if (client_error) std::rethrow_exception(client_error);
  if (server_error) std::rethrow_exception(server_error);
  return out;
}

/// Brute-force plaintext oracle: sum of s_i * g_j over key matches.
inline FieldElement plaintext_sip(const ClientInput& client_input,
                                  const ServerInput& server_input,
                                  const FieldModulus& mod) {
  FieldElement acc{0, mod};
  for (const auto& c : client_input) {
    for (const auto& s : server_input) {
      if (c.key == s.key) acc = acc + c.value * s.value;
    }
  }
  return acc;
}

/// Per-component ideal functionality: s_i * g_j for the matching j, else 0.
inline std::vector<FieldElement> plaintext_components(
    const ClientInput& client_input, const ServerInput& server_input,
    const FieldModulus& mod) {
  std::vector<FieldElement> out;
  for (const auto& c : client_input) {
    FieldElement v{0, mod};
    for (const auto& s : server_input) {
      if (c.key == s.key) v = c.value * s.value;
    }
    out.push_back(v);
  }
  return out;
}

}  // namespace ssip
