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

#include <catch2/catch_amalgamated.hpp>
#include <thread>

#include "ssip/rng.hpp"
#include "ssip/tcp.hpp"
#include "ssip/transport.hpp"

using namespace ssip;

TEST_CASE("zero-byte payload round-trips unchanged") {
  auto [a, b] = make_inprocess_pair();
  FrameChannel alice(std::move(a), 7);
  FrameChannel bob(std::move(b), 7);

  alice.send(ComponentTag{0, 1}, MsgType::kMembNu, {});
  Frame f = bob.expect(ComponentTag{0, 1}, MsgType::kMembNu);
  CHECK(f.session_id == 7);
  CHECK(f.tag.bin_id == 0);
  CHECK(f.tag.j == 1);
  CHECK(f.payload.empty());
}

TEST_CASE("interleaved component tags demultiplex cleanly") {
  auto [a, b] = make_inprocess_pair();
  FrameChannel alice(std::move(a), 1);
  FrameChannel bob(std::move(b), 1);

  alice.send(ComponentTag{0, 2}, MsgType::kMembNu, {2});
  alice.send(ComponentTag{0, 1}, MsgType::kMembNu, {1});
  alice.send(ComponentTag{0, 2}, MsgType::kValueNu, {22});
  alice.send(ComponentTag{0, 1}, MsgType::kValueNu, {11});

  // Consumer for (0,1) sees only its frames, in order.
  CHECK(bob.expect(ComponentTag{0, 1}, MsgType::kMembNu).payload ==
        Bytes{1});
  CHECK(bob.expect(ComponentTag{0, 1}, MsgType::kValueNu).payload ==
        Bytes{11});
  CHECK(bob.expect(ComponentTag{0, 2}, MsgType::kMembNu).payload ==
        Bytes{2});
  CHECK(bob.expect(ComponentTag{0, 2}, MsgType::kValueNu).payload ==
        Bytes{22});
}

TEST_CASE("type mismatch within a tag is an error") {
  auto [a, b] = make_inprocess_pair();
  FrameChannel alice(std::move(a), 1);
  FrameChannel bob(std::move(b), 1);
  alice.send(ComponentTag{0, 0}, MsgType::kMembNu, {9});
  CHECK_THROWS_AS(bob.expect(ComponentTag{0, 0}, MsgType::kValueNu),
                  TransportError);
}

TEST_CASE("byte counters equal the sum of 22-byte headers plus payloads") {
  auto [a, b] = make_inprocess_pair();
  FrameChannel alice(std::move(a), 3);
  FrameChannel bob(std::move(b), 3);

  Rng rng(1);
  uint64_t expected = 0;
  const int frames = 10000;
  for (int i = 0; i < frames; ++i) {
    Bytes payload(rng.below(100));
    rng.fill(payload);
    expected += 16 + 2 + 4 + payload.size();
    alice.send(ComponentTag{0, uint32_t(i)}, MsgType::kMembNu,
               std::move(payload));
  }
  for (int i = 0; i < frames; ++i) {
    bob.expect(ComponentTag{0, uint32_t(i)}, MsgType::kMembNu);
  }
  CHECK(alice.metrics().total().bytes_up == expected);
  CHECK(bob.metrics().total().bytes_down == expected);
  CHECK(alice.metrics().total().frames_up == uint64_t(frames));
}

TEST_CASE("rounds count direction alternations") {
  auto [a, b] = make_inprocess_pair();
  FrameChannel alice(std::move(a), 3);
  FrameChannel bob(std::move(b), 3);

  alice.send(ComponentTag{0, 0}, MsgType::kMembNu, {1});
  alice.send(ComponentTag{0, 1}, MsgType::kMembNu, {2});
  bob.expect(ComponentTag{0, 0}, MsgType::kMembNu);
  bob.expect(ComponentTag{0, 1}, MsgType::kMembNu);
  bob.send(ComponentTag{0, 0}, MsgType::kOtMsg1, {3});
  alice.expect(ComponentTag{0, 0}, MsgType::kOtMsg1);
  alice.send(ComponentTag{0, 0}, MsgType::kOtMsg2, {4});

  // alice: send,send (1) -> recv (2) -> send (3)
  CHECK(alice.metrics().total().rounds == 3);
}

TEST_CASE("phase boundaries split the counters") {
  auto [a, b] = make_inprocess_pair();
  FrameChannel alice(std::move(a), 3);
  FrameChannel bob(std::move(b), 3);

  alice.set_phase("offline");
  alice.send(ComponentTag{0, 0}, MsgType::kOfflinePackage, Bytes(100));
  alice.set_phase("online");
  alice.send(ComponentTag{0, 0}, MsgType::kMembNu, Bytes(10));

  CHECK(alice.metrics().phases().at("offline").bytes_up == 122);
  CHECK(alice.metrics().phases().at("online").bytes_up == 32);
  const auto rows = alice.metrics().csv_rows(3, /*include_millis=*/false);
  REQUIRE(rows.size() == 3);  // setup, offline, online
  CHECK(rows[1] == "3,offline,122,0,1,1,0");
}

TEST_CASE("TCP and in-process transports carry identical bytes") {
  // Build the same deterministic frame sequence over both transports and
  // compare capture logs.
  auto run = [](FrameChannel& client, FrameChannel& server) {
    Rng rng(99);
    for (int i = 0; i < 50; ++i) {
      Bytes payload(rng.below(64));
      rng.fill(payload);
      client.send(ComponentTag{0, uint32_t(i)}, MsgType::kPirQuery, payload);
      Frame f = server.expect(ComponentTag{0, uint32_t(i)}, MsgType::kPirQuery);
      Bytes reply = f.payload;
      reply.push_back(uint8_t(i));
      server.send(ComponentTag{0, uint32_t(i)}, MsgType::kPirAnswer, reply);
      client.expect(ComponentTag{0, uint32_t(i)}, MsgType::kPirAnswer);
    }
  };

  auto [a, b] = make_inprocess_pair();
  FrameChannel in_client(std::move(a), 5);
  FrameChannel in_server(std::move(b), 5);
  in_client.enable_capture();
  in_server.enable_capture();
  run(in_client, in_server);

  TcpListener listener(HostPort{"127.0.0.1", 0});
  std::unique_ptr<Connection> server_conn;
  std::thread accepter([&] { server_conn = listener.accept(); });
  auto client_conn = tcp_connect(HostPort{"127.0.0.1", listener.port()});
  accepter.join();

  FrameChannel tcp_client(std::move(client_conn), 5);
  FrameChannel tcp_server(std::move(server_conn), 5);
  tcp_client.enable_capture();
  tcp_server.enable_capture();

  std::thread server_thread([&] {
    Rng rng(99);
    for (int i = 0; i < 50; ++i) {
      Frame f =
          tcp_server.expect(ComponentTag{0, uint32_t(i)}, MsgType::kPirQuery);
      Bytes reply = f.payload;
      reply.push_back(uint8_t(i));
      tcp_server.send(ComponentTag{0, uint32_t(i)}, MsgType::kPirAnswer, reply);
    }
  });
  Rng rng(99);
  for (int i = 0; i < 50; ++i) {
    Bytes payload(rng.below(64));
    rng.fill(payload);
    tcp_client.send(ComponentTag{0, uint32_t(i)}, MsgType::kPirQuery, payload);
    tcp_client.expect(ComponentTag{0, uint32_t(i)}, MsgType::kPirAnswer);
  }
  server_thread.join();

  CHECK(tcp_client.sent_log() == in_client.sent_log());
  CHECK(tcp_client.recv_log() == in_client.recv_log());
  CHECK(tcp_server.sent_log() == in_server.sent_log());
}

TEST_CASE("connection close surfaces as an error") {
  auto [a, b] = make_inprocess_pair();
  FrameChannel bob(std::move(b), 1);
  a.reset();  // peer goes away
  CHECK_THROWS_AS(bob.expect(kControlTag, MsgType::kClientHello),
                  TransportError);
}
