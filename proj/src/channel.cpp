// Copyright 2026 The tracekit Authors
// SPDX-License-Identifier: Apache-2.0

#include "tracekit/channel.hpp"

#include <arpa/inet.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>

#include "tracekit/errors.hpp"

namespace tracekit::channel {
namespace {

std::size_t kind_slot(std::span<const std::uint8_t> frame) {
  if (frame.size() <= wire::kFrameHeader) return wire::kKindCount;
  const auto tag = frame[wire::kFrameHeader];
  return (tag >= 1 && tag <= wire::kKindCount) ? tag - 1 : wire::kKindCount;
}

void add(std::array<Traffic, wire::kKindCount>& table, std::span<const std::uint8_t> frame) {
  const std::size_t slot = kind_slot(frame);
  if (slot >= table.size()) return;
  ++table[slot].frames;
  table[slot].bytes += frame.size();
}

std::uint64_t sum(const std::array<Traffic, wire::kKindCount>& table) {
  std::uint64_t n = 0;
  for (const auto& t : table) n += t.bytes;
  return n;
}

std::runtime_error sys_error(const std::string& what) {
  return std::runtime_error(what + ": " + std::strerror(errno));
}

void write_all(int fd, std::span<const std::uint8_t> data) {
  std::size_t done = 0;
  while (done < data.size()) {
    const ssize_t n = ::send(fd, data.data() + done, data.size() - done, MSG_NOSIGNAL);
    if (n < 0 && errno == EINTR) continue;
    if (n <= 0) throw sys_error("send");
    done += static_cast<std::size_t>(n);
  }
}

// False on a clean close before the first byte.
bool read_exact(int fd, std::span<std::uint8_t> out) {
  std::size_t done = 0;
  while (done < out.size()) {
    const ssize_t n = ::recv(fd, out.data() + done, out.size() - done, 0);
    if (n < 0 && errno == EINTR) continue;
    if (n == 0 && done == 0) return false;
    if (n <= 0) throw ProtocolError("connection closed mid-frame");
    done += static_cast<std::size_t>(n);
  }
  return true;
}

// One whole frame, header included; empty on a clean close.
wire::Bytes read_frame(int fd) {
  std::array<std::uint8_t, wire::kFrameHeader> header{};
  if (!read_exact(fd, header)) return {};
  const std::size_t len = wire::frame_length(header);
  wire::Bytes frame(wire::kFrameHeader + len);
  std::copy(header.begin(), header.end(), frame.begin());
  if (len > 0 && !read_exact(fd, std::span(frame).subspan(wire::kFrameHeader))) {
    throw ProtocolError("connection closed mid-frame");
  }
  return frame;
}

sockaddr_in to_sockaddr(const Address& a) {
  sockaddr_in sa{};
  sa.sin_family = AF_INET;
  sa.sin_port = htons(a.port);
  const std::string host = a.host == "localhost" ? "127.0.0.1" : a.host;
  if (::inet_pton(AF_INET, host.c_str(), &sa.sin_addr) != 1) throw ConfigError("bad IPv4 address: " + a.host);
  return sa;
}

}  // namespace

wire::Bytes serve_frame(const Handler& handler, std::span<const std::uint8_t> frame) {
  wire::Message reply;
  try {
    if (frame.size() < wire::kFrameHeader) throw ParseError("frame: truncated header");
    const std::size_t len = wire::frame_length(frame.first<wire::kFrameHeader>());
    if (len != frame.size() - wire::kFrameHeader) throw ParseError("frame: length mismatch");
    reply = handler(wire::parse(frame.subspan(wire::kFrameHeader)));
  } catch (const std::exception& e) {
    reply = wire::error_from(e);
  }
  return wire::frame(wire::serialize(reply));
}

wire::Message call(Transport& t, Endpoint to, const wire::Message& request) {
  const wire::Bytes reply_frame = t.exchange(to, wire::frame(wire::serialize(request)));
  if (reply_frame.size() < wire::kFrameHeader) throw ProtocolError("reply frame truncated");
  const std::span<const std::uint8_t> view(reply_frame);
  if (wire::frame_length(view.first<wire::kFrameHeader>()) != reply_frame.size() - wire::kFrameHeader) {
    throw ProtocolError("reply frame length mismatch");
  }
  wire::Message reply = wire::parse(view.subspan(wire::kFrameHeader));
  if (const auto* err = std::get_if<wire::Error>(&reply)) {
    throw ProtocolError("remote error " + std::to_string(static_cast<int>(err->code)) + ": " + err->message);
  }
  return reply;
}

void TrafficMeter::record_up(std::span<const std::uint8_t> frame) {
  std::lock_guard lock(mutex_);
  add(up_, frame);
}

void TrafficMeter::record_down(std::span<const std::uint8_t> frame) {
  std::lock_guard lock(mutex_);
  add(down_, frame);
}

std::array<Traffic, wire::kKindCount> TrafficMeter::up() const {
  std::lock_guard lock(mutex_);
  return up_;
}

std::array<Traffic, wire::kKindCount> TrafficMeter::down() const {
  std::lock_guard lock(mutex_);
  return down_;
}

std::uint64_t TrafficMeter::total_up() const {
  std::lock_guard lock(mutex_);
  return sum(up_);
}

std::uint64_t TrafficMeter::total_down() const {
  std::lock_guard lock(mutex_);
  return sum(down_);
}

void TrafficMeter::reset() {
  std::lock_guard lock(mutex_);
  up_ = {};
  down_ = {};
}

InProcessTransport::InProcessTransport(Handler collector, Handler interpreter)
    : collector_(std::move(collector)), interpreter_(std::move(interpreter)) {}

wire::Bytes InProcessTransport::exchange(Endpoint to, const wire::Bytes& request_frame) {
  meter_.record_up(request_frame);
  wire::Bytes reply = serve_frame(to == Endpoint::collector ? collector_ : interpreter_, request_frame);
  meter_.record_down(reply);
  return reply;
}

wire::Bytes MeteringTransport::exchange(Endpoint to, const wire::Bytes& request_frame) {
  meter_.record_up(request_frame);
  wire::Bytes reply = inner_.exchange(to, request_frame);
  meter_.record_down(reply);
  return reply;
}

Address parse_address(const std::string& text) {
  const auto colon = text.rfind(':');
  if (colon == std::string::npos) throw ConfigError("address must be host:port, got '" + text + "'");
  Address a;
  a.host = text.substr(0, colon);
  try {
    const unsigned long port = std::stoul(text.substr(colon + 1));
    if (port > 65535) throw ConfigError("port out of range");
    a.port = static_cast<std::uint16_t>(port);
  } catch (const std::logic_error&) {
    throw ConfigError("bad port in '" + text + "'");
  }
  return a;
}

TcpTransport::TcpTransport(Address collector, Address interpreter)
    : collector_(std::move(collector)), interpreter_(std::move(interpreter)) {}

TcpTransport::~TcpTransport() {
  if (collector_fd_ >= 0) ::close(collector_fd_);
  if (interpreter_fd_ >= 0) ::close(interpreter_fd_);
}

int TcpTransport::connect_to(const Address& a) {
  const int fd = ::socket(AF_INET, SOCK_STREAM, 0);
  if (fd < 0) throw sys_error("socket");
  const sockaddr_in sa = to_sockaddr(a);
  if (::connect(fd, reinterpret_cast<const sockaddr*>(&sa), sizeof sa) != 0) {
    const auto err = sys_error("connect " + a.host + ":" + std::to_string(a.port));
    ::close(fd);
    throw err;
  }
  const int one = 1;
  ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
  return fd;
}

wire::Bytes TcpTransport::exchange(Endpoint to, const wire::Bytes& request_frame) {
  std::lock_guard lock(mutex_);
  int& fd = to == Endpoint::collector ? collector_fd_ : interpreter_fd_;
  if (fd < 0) fd = connect_to(to == Endpoint::collector ? collector_ : interpreter_);
  meter_.record_up(request_frame);
  wire::Bytes reply;
  try {
    write_all(fd, request_frame);
    reply = read_frame(fd);
    if (reply.empty()) throw ProtocolError("server closed the connection");
  } catch (...) {
    ::close(fd);
    fd = -1;
    throw;
  }
  meter_.record_down(reply);
  return reply;
}

FrameServer::FrameServer(Address listen, Handler handler) : handler_(std::move(handler)) {
  listen_fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
  if (listen_fd_ < 0) throw sys_error("socket");
  const int one = 1;
  ::setsockopt(listen_fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
  const sockaddr_in sa = to_sockaddr(listen);
  if (::bind(listen_fd_, reinterpret_cast<const sockaddr*>(&sa), sizeof sa) != 0 || ::listen(listen_fd_, 64) != 0) {
    const auto err = sys_error("bind/listen " + listen.host + ":" + std::to_string(listen.port));
    ::close(listen_fd_);
    throw err;
  }
  sockaddr_in bound{};
  socklen_t len = sizeof bound;
  ::getsockname(listen_fd_, reinterpret_cast<sockaddr*>(&bound), &len);
  port_ = ntohs(bound.sin_port);
  acceptor_ = std::thread([this] { accept_loop(); });
}

FrameServer::~FrameServer() { stop(); }

void FrameServer::stop() {
  if (stopping_.exchange(true)) return;
  ::shutdown(listen_fd_, SHUT_RDWR);
  if (acceptor_.joinable()) acceptor_.join();
  ::close(listen_fd_);
  std::vector<std::thread> workers;
  {
    std::lock_guard lock(workers_mutex_);
    for (int fd : client_fds_) ::shutdown(fd, SHUT_RDWR);
    workers.swap(workers_);
  }
  for (auto& w : workers) w.join();
}

void FrameServer::accept_loop() {
  while (!stopping_) {
    const int fd = ::accept(listen_fd_, nullptr, nullptr);
    if (fd < 0) {
      if (errno == EINTR) continue;
      return;
    }
    std::lock_guard lock(workers_mutex_);
    if (stopping_) {
      ::close(fd);
      return;
    }
    client_fds_.push_back(fd);
    workers_.emplace_back([this, fd] { serve_connection(fd); });
  }
}

void FrameServer::serve_connection(int fd) {
  try {
    while (!stopping_) {
      const wire::Bytes request = read_frame(fd);
      if (request.empty()) break;
      write_all(fd, serve_frame(handler_, request));
    }
  } catch (const std::exception&) {
    // Broken connection or oversized frame: drop the peer.
  }
  std::lock_guard lock(workers_mutex_);
  std::erase(client_fds_, fd);
  ::close(fd);
}

}  // namespace tracekit::channel
