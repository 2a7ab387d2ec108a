// Copyright 2026 The tracekit Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <gmpxx.h>

#include "tracekit/geo.hpp"
#include "tracekit/random.hpp"

namespace tracekit::ephid {

using geo::GeoCell;
using geo::GeoPoint;

inline constexpr std::int64_t kMinuteSeconds = 60;
inline constexpr std::int64_t kDefaultRotationSeconds = 20 * 60;
inline constexpr double kDefaultPhiMeters = 200.0;
inline constexpr std::int64_t kDefaultMinContactSeconds = 15 * 60;
inline constexpr std::size_t kRandBytes = 16;
inline constexpr std::size_t kEncodedSize = geo::kDefaultPrecision + 2 * kRandBytes;

// 128-bit random string. Constructed values are never zero; the default
// instance is a placeholder.
class Rand128 {
 public:
  Rand128() = default;
  explicit Rand128(const std::array<std::uint8_t, kRandBytes>& bytes);

  static Rand128 random(RandomSource& rng);
  // Exactly 32 lowercase hex digits.
  static Rand128 from_hex(std::string_view hex);

  std::string hex() const;
  mpz_class value() const;
  const std::array<std::uint8_t, kRandBytes>& bytes() const { return bytes_; }

  friend auto operator<=>(const Rand128&, const Rand128&) = default;

 private:
  std::array<std::uint8_t, kRandBytes> bytes_{};
};

struct EphId {
  GeoCell cell;
  Rand128 rand;

  // 8 geohash characters then 32 hex digits.
  std::string encode() const;
  static EphId parse(std::string_view wire);

  friend auto operator<=>(const EphId&, const EphId&) = default;
};

struct TemporalEphId {
  GeoCell cell;
  Rand128 rand;
  std::int64_t minute = 0;  // 60 s bin index

  friend auto operator<=>(const TemporalEphId&, const TemporalEphId&) = default;
};

// Broadcaster state. The rand rotates at every multiple of the rotation
// period, so all devices rotate in step.
class Advertiser {
 public:
  explicit Advertiser(std::int64_t rotation_s = kDefaultRotationSeconds);

  // Called once per broadcast minute. Uses the last known location when
  // `location` is empty; returns nothing until a location has been seen.
  std::optional<EphId> tick(std::int64_t now, const std::optional<GeoPoint>& location, RandomSource& rng);

  // One entry per broadcast minute, time-ordered.
  const std::vector<TemporalEphId>& log() const { return log_; }
  std::int64_t rotation_s() const { return rotation_s_; }

  // Drops entries whose minute ended before now - 14 days.
  std::size_t prune(std::int64_t now);

 private:
  std::int64_t rotation_s_;
  std::optional<GeoPoint> last_location_;
  std::optional<std::int64_t> slot_;
  Rand128 rand_;
  std::vector<TemporalEphId> log_;
};

struct Reception {
  TemporalEphId id;  // minute of first_seen
  std::int64_t first_seen = 0;
  std::int64_t last_seen = 0;
};

enum class ReceiveResult { accepted, too_far, malformed };

class ReceivedLog {
 public:
  // Accepts iff the distance from the decoded cell center to `here` is <= phi.
  ReceiveResult receive(const EphId& e, std::int64_t now, const GeoPoint& here, double phi_m = kDefaultPhiMeters);
  ReceiveResult receive(std::string_view wire, std::int64_t now, const GeoPoint& here,
                        double phi_m = kDefaultPhiMeters);

  std::vector<Reception> entries() const;
  // Entries with last_seen - first_seen >= min_duration_s.
  std::vector<TemporalEphId> eligible(std::int64_t min_duration_s = kDefaultMinContactSeconds) const;

  std::size_t size() const { return records_.size(); }
  std::size_t malformed_count() const { return malformed_; }
  std::size_t rejected_count() const { return too_far_; }

  // Drops records last seen before now - 14 days.
  std::size_t prune(std::int64_t now);

 private:
  std::map<EphId, Reception> records_;
  std::size_t malformed_ = 0;
  std::size_t too_far_ = 0;
};

// Real entries plus one entry for every cover (cell, minute) missing from the
// real log. A missing minute reuses the real rand broadcast at that minute;
// minutes with no real entry get a fresh rand, one per rotation slot.
// `cover` holds the minute-quantized visits of every superlist trajectory.
// The result is shuffled.
std::vector<TemporalEphId> cloak_advertised(const std::vector<TemporalEphId>& real,
                                            const std::vector<geo::VisitSet>& cover, std::int64_t rotation_s,
                                            RandomSource& rng);

}  // namespace tracekit::ephid
