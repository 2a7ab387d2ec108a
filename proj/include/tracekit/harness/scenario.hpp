// Copyright 2026 The tracekit Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "tracekit/channel.hpp"
#include "tracekit/client.hpp"
#include "tracekit/harness/config.hpp"

namespace tracekit::harness {

struct RunOptions {
  bool tcp = false;  // route every exchange through loopback frame servers
};

/// One agent's end-of-day query next to the plaintext recomputation.
struct ExposureRow {
  int day = 0;
  std::size_t agent = 0;
  client::ExposureResult protocol;
  client::ExposureResult oracle;
  std::uint64_t bytes_up = 0;
  std::uint64_t bytes_down = 0;

  bool matches() const { return protocol == oracle; }
};

struct UploadRow {
  int day = 0;
  std::size_t agent = 0;
  std::uint64_t bytes_up = 0;
  std::uint64_t bytes_down = 0;
  std::size_t trajectories = 0;
  std::size_t ephid_sightings = 0;
  std::size_t real_advertised = 0;  // redacted real log entries, all covered
  bool covers_real = false;
  std::string ack;
};

struct RelayStats {
  std::uint64_t relayed = 0;   // frames replayed to victims
  std::uint64_t accepted = 0;  // of which the victim kept
};

struct ScenarioResult {
  ScenarioConfig config;
  std::vector<UploadRow> uploads;
  std::vector<ExposureRow> exposures;
  std::array<channel::Traffic, wire::kKindCount> up{};
  std::array<channel::Traffic, wire::kKindCount> down{};
  RelayStats relay;
  std::uint64_t broadcasts = 0;
  std::uint64_t receptions_accepted = 0;
  std::uint64_t receptions_rejected = 0;
  std::size_t collector_cells = 0;
  std::size_t collector_ephid_keys = 0;
  double wall_seconds = 0.0;  // not part of the report

  std::size_t mismatches() const;
  // Rows whose oracle saw a positive value, per query type.
  std::size_t positive_geolocation() const;
  std::size_t positive_contacts() const;
};

// Runs the whole population through `config.days` days: movement, broadcast
// and reception every minute, uploads by diagnosed patients and queries by
// every other adopter at each midnight. Every query is checked against a
// plaintext recomputation from ground truth.
ScenarioResult run_scenario(const ScenarioConfig& config, const RunOptions& options = {});

}  // namespace tracekit::harness
