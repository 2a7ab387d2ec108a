// Copyright 2026 The tracekit Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <atomic>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "tracekit/wire.hpp"

namespace tracekit::channel {

enum class Endpoint { collector, interpreter };

/// Request/response transport. Carries whole frames; byte counts are taken on
/// the framed bytes.
class Transport {
 public:
  virtual ~Transport() = default;
  virtual wire::Bytes exchange(Endpoint to, const wire::Bytes& request_frame) = 0;
};

using Handler = std::function<wire::Message(const wire::Message&)>;

// Parses a frame, runs the handler, frames the reply. Parse failures become
// Error replies.
wire::Bytes serve_frame(const Handler& handler, std::span<const std::uint8_t> frame);

// Frames `request`, exchanges it, parses the reply. Throws ProtocolError when
// the reply is an Error.
wire::Message call(Transport& t, Endpoint to, const wire::Message& request);

struct Traffic {
  std::uint64_t frames = 0;
  std::uint64_t bytes = 0;
};

/// Per-kind frame counts in each direction.
class TrafficMeter {
 public:
  void record_up(std::span<const std::uint8_t> frame);
  void record_down(std::span<const std::uint8_t> frame);

  std::array<Traffic, wire::kKindCount> up() const;
  std::array<Traffic, wire::kKindCount> down() const;
  std::uint64_t total_up() const;
  std::uint64_t total_down() const;
  void reset();

 private:
  mutable std::mutex mutex_;
  std::array<Traffic, wire::kKindCount> up_{};
  std::array<Traffic, wire::kKindCount> down_{};
};

// Delivers frames to in-process handlers on the caller's thread. Handlers must
// be safe to call concurrently.
class InProcessTransport final : public Transport {
 public:
  InProcessTransport(Handler collector, Handler interpreter);

  wire::Bytes exchange(Endpoint to, const wire::Bytes& request_frame) override;
  TrafficMeter& meter() { return meter_; }

 private:
  Handler collector_;
  Handler interpreter_;
  TrafficMeter meter_;
};

/// Forwards to another transport and counts the frames that pass through.
class MeteringTransport final : public Transport {
 public:
  explicit MeteringTransport(Transport& inner) : inner_(inner) {}

  wire::Bytes exchange(Endpoint to, const wire::Bytes& request_frame) override;
  TrafficMeter& meter() { return meter_; }

 private:
  Transport& inner_;
  TrafficMeter meter_;
};

struct Address {
  std::string host = "127.0.0.1";
  std::uint16_t port = 0;
};

// Parses "host:port".
Address parse_address(const std::string& text);

/// One blocking connection per endpoint; frames go over the socket as-is.
class TcpTransport final : public Transport {
 public:
  TcpTransport(Address collector, Address interpreter);
  ~TcpTransport() override;

  wire::Bytes exchange(Endpoint to, const wire::Bytes& request_frame) override;
  TrafficMeter& meter() { return meter_; }

 private:
  int connect_to(const Address& a);

  Address collector_;
  Address interpreter_;
  int collector_fd_ = -1;
  int interpreter_fd_ = -1;
  std::mutex mutex_;
  TrafficMeter meter_;
};

/// Accepts loopback connections and answers frames with a handler, one
/// thread per connection.
class FrameServer {
 public:
  FrameServer(Address listen, Handler handler);
  ~FrameServer();

  FrameServer(const FrameServer&) = delete;
  FrameServer& operator=(const FrameServer&) = delete;

  std::uint16_t port() const { return port_; }
  void stop();

 private:
  void accept_loop();
  void serve_connection(int fd);

  Handler handler_;
  int listen_fd_ = -1;
  std::uint16_t port_ = 0;
  std::atomic<bool> stopping_{false};
  std::thread acceptor_;
  std::mutex workers_mutex_;
  std::vector<std::thread> workers_;
  std::vector<int> client_fds_;
};

}  // namespace tracekit::channel
