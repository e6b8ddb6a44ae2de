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

#include <arpa/inet.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>

#include "ssip/transport.hpp"

namespace ssip {

namespace detail {

class TcpConnection final : public Connection {
 public:
  explicit TcpConnection(int fd) : fd_(fd) {
    int one = 1;
    setsockopt(fd_, IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
  }
  ~TcpConnection() override {
    if (fd_ >= 0) ::close(fd_);
  }
  TcpConnection(const TcpConnection&) = delete;
  TcpConnection& operator=(const TcpConnection&) = delete;

  void send_bytes(BytesView data) override {
    size_t off = 0;
    while (off < data.size()) {
      const ssize_t n = ::send(fd_, data.data() + off, data.size() - off,
                               MSG_NOSIGNAL);
      if (n < 0) {
        if (errno == EINTR) continue;
        throw TransportError(std::string("send failed: ") + strerror(errno));
      }
      off += size_t(n);
    }
  }

  void recv_bytes(std::span<uint8_t> out) override {
    size_t off = 0;
    while (off < out.size()) {
      const ssize_t n = ::recv(fd_, out.data() + off, out.size() - off, 0);
      if (n < 0) {
        if (errno == EINTR) continue;
        throw TransportError(std::string("recv failed: ") + strerror(errno));
      }
      if (n == 0) throw TransportError("connection closed by peer");
      off += size_t(n);
    }
  }

 private:
  int fd_;
};

}  // namespace detail

struct HostPort {
  std::string host = "127.0.0.1";
  uint16_t port = 0;
};

/// Parses "host:port"; host defaults to 127.0.0.1 when omitted.
inline HostPort parse_host_port(const std::string& addr) {
  HostPort hp;
  const auto colon = addr.rfind(':');
  if (colon == std::string::npos) {
    hp.port = uint16_t(std::stoul(addr));
  } else {
    if (colon > 0) hp.host = addr.substr(0, colon);
    hp.port = uint16_t(std::stoul(addr.substr(colon + 1)));
  }
  return hp;
}

class TcpListener {
 public:
  explicit TcpListener(const HostPort& bind_addr) {
    fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
    if (fd_ < 0) throw TransportError("socket() failed");
    int one = 1;
    setsockopt(fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof(one));
    sockaddr_in sa{};
    sa.sin_family = AF_INET;
    sa.sin_port = htons(bind_addr.port);
    if (inet_pton(AF_INET, bind_addr.host.c_str(), &sa.sin_addr) != 1) {
      ::close(fd_);
      throw TransportError("bad bind address: " + bind_addr.host);
    }
    if (::bind(fd_, reinterpret_cast<sockaddr*>(&sa), sizeof(sa)) != 0 ||
        ::listen(fd_, 1) != 0) {
      ::close(fd_);
      throw TransportError(std::string("bind/listen failed: ") +
                           strerror(errno));
    }
    socklen_t len = sizeof(sa);
    getsockname(fd_, reinterpret_cast<sockaddr*>(&sa), &len);
    port_ = ntohs(sa.sin_port);
  }
  ~TcpListener() {
    if (fd_ >= 0) ::close(fd_);
  }
  TcpListener(const TcpListener&) = delete;
  TcpListener& operator=(const TcpListener&) = delete;

  uint16_t port() const { return port_; }

  std::unique_ptr<Connection> accept() {
    const int cfd = ::accept(fd_, nullptr, nullptr);
    if (cfd < 0) throw TransportError("accept failed");
    return std::make_unique<detail::TcpConnection>(cfd);
  }

 private:
  int fd_ = -1;
  uint16_t port_ = 0;
};

inline std::unique_ptr<Connection> tcp_connect(const HostPort& addr) {
  addrinfo hints{};
  hints.ai_family = AF_INET;
  hints.ai_socktype = SOCK_STREAM;
  addrinfo* res = nullptr;
  if (getaddrinfo(addr.host.c_str(), std::to_string(addr.port).c_str(), &hints,
                  &res) != 0) {
    throw TransportError("cannot resolve " + addr.host);
  }
  int fd = -1;
  for (addrinfo* ai = res; ai; ai = ai->ai_next) {
    fd = ::socket(ai->ai_family, ai->ai_socktype, ai->ai_protocol);
    if (fd < 0) continue;
    if (::connect(fd, ai->ai_addr, ai->ai_addrlen) == 0) break;
    ::close(fd);
    fd = -1;
  }
  freeaddrinfo(res);
  if (fd < 0) {
    throw TransportError("cannot connect to " + addr.host + ":" +
                         std::to_string(addr.port));
  }
  return std::make_unique<detail::TcpConnection>(fd);
}

}  // namespace ssip
