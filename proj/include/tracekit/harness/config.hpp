// Copyright 2026 The tracekit Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "tracekit/anonymizer.hpp"
#include "tracekit/client.hpp"
#include "tracekit/geo.hpp"

namespace tracekit::harness {

// 2023-11-15 00:00:00 UTC.
inline constexpr std::int64_t kDefaultStart = 1'700'006'400;

/// Two agents forced to the same venue for a while.
struct ColocationEvent {
  std::size_t a = 0;
  std::size_t b = 0;
  int day = 0;
  int start_minute = 0;
  int duration_minutes = 0;
  std::optional<geo::GeoPoint> venue;
};

/// An attacker re-broadcasts a patient's live EphIDs next to a victim placed
/// `distance_m` north of the patient.
struct RelayEvent {
  std::size_t patient = 0;
  std::size_t victim = 0;
  int day = 0;
  int start_minute = 0;
  int duration_minutes = 0;
  double distance_m = 5000.0;
};

struct ScenarioConfig {
  std::string name = "scenario";
  std::uint64_t seed = 1;
  std::size_t agents = 20;
  int days = 3;
  std::int64_t start = kDefaultStart;  // UTC midnight of day 0
  unsigned key_bits = 512;
  double radio_range_m = 10.0;
  int threads = 4;
  geo::GeoBox region{{37.50, 126.95}, {37.56, 127.03}};

  client::AgentParams protocol;  // region is filled in from `region`
  int delta_bins = 24;
  std::uint32_t weight_quantum = 100;
  std::int64_t token_ttl_s = 86400;

  std::map<std::size_t, int> patients;  // agent -> day whose end triggers the upload
  anon::DiaryParams movement;           // region is filled in from `region`
  std::vector<ColocationEvent> colocations;
  std::vector<RelayEvent> relays;
  std::vector<bool> adoption;  // per agent; absent entries adopt

  bool adopts(std::size_t agent) const { return agent >= adoption.size() || adoption[agent]; }

  // ConfigError naming the offending field.
  void validate() const;
};

// INI-style document: [section] headers and key = value lines. Unknown
// sections or keys are errors.
ScenarioConfig parse_config(std::istream& in);
ScenarioConfig load_config(const std::filesystem::path& path);

// Canonical key = value rendering; parse_config(render_config(c)) == c.
std::string render_config(const ScenarioConfig& c);

}  // namespace tracekit::harness
