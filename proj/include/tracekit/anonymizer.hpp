// Copyright 2026 The tracekit Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <vector>

#include "tracekit/geo.hpp"
#include "tracekit/paillier.hpp"
#include "tracekit/random.hpp"

namespace tracekit::anon {

using geo::GeoBox;
using geo::GeoPoint;
using geo::RawTrajectory;
using geo::VisitSet;

struct SensitiveZone {
  GeoPoint center;
  double radius_m = 0.0;
};

// Daily UTC window [start_s, end_s) in seconds of day; wraps past midnight
// when start_s > end_s.
struct QuietHours {
  int start_s = 0;
  int end_s = 0;

  bool contains(std::int64_t t) const;
};

struct SensitivePolicy {
  std::vector<SensitiveZone> zones;
  std::vector<QuietHours> quiet_hours;

  // Throws DomainError on a non-positive radius or out-of-day window.
  void validate() const;
  bool covers(const geo::TimedPoint& sample) const;
};

// Keeps exactly the samples outside every zone and every quiet window.
RawTrajectory redact(const RawTrajectory& t, const SensitivePolicy& policy);

// A sample is moving when it is more than this fast relative to the previous
// sample; the first sample is stationary.
inline constexpr double kStationarySpeedMps = 0.5;
inline constexpr double kMaxTravelSpeedMps = 130.0 / 3.6;

std::vector<bool> moving_mask(const RawTrajectory& t);
double stationary_fraction(const RawTrajectory& t);

struct SynthesisProfile {
  GeoBox region;
  int anchor_count = 3;  // anchor 0 is home
  std::array<double, 24> activity{};  // per UTC hour: probability of being out of home
  std::uint64_t seed = 0;
  double min_anchor_separation_m = 300.0;
};

// Per-hour out-of-home probability of a trajectory. Home is the most visited
// precision-7 cell; hours without samples get 0.5.
std::array<double, 24> activity_histogram(const RawTrajectory& t);

SynthesisProfile derive_profile(const GeoBox& region, const RawTrajectory& real, std::uint64_t seed,
                                int anchor_count = 3);

/// Produces a fake trajectory that shares the template's timestamps.
class TrajectorySynthesizer {
 public:
  virtual ~TrajectorySynthesizer() = default;
  virtual RawTrajectory synthesize(const SynthesisProfile& profile, const RawTrajectory& templ) const = 0;
};

/// Anchor-and-commute model: dwell at anchors wherever the template dwells,
/// and during each of the template's moving runs travel between anchors over
/// the same path length at the same average speed (capped at 130 km/h).
class AnchorCommuteSynthesizer final : public TrajectorySynthesizer {
 public:
  RawTrajectory synthesize(const SynthesisProfile& profile, const RawTrajectory& templ) const override;
};

// Places `profile.anchor_count` anchors pairwise at least
// min_anchor_separation_m apart; ConfigError if the region cannot fit them.
std::vector<GeoPoint> place_anchors(const SynthesisProfile& profile, RandomSource& rng);

// AnchorCommuteSynthesizer; DomainError on an empty template.
RawTrajectory synthesize_fake(const SynthesisProfile& profile, const RawTrajectory& templ);

struct QuantizationParams {
  int precision = geo::kDefaultPrecision;
  std::int64_t geo_bin_s = 300;
  std::int64_t ephid_bin_s = 60;
};

struct FlaggedTrajectory {
  VisitSet visits;
  paillier::Ciphertext flag;  // E(1) for the real trajectory, E(0) for fakes
};

// Position of the real trajectory in a cloaked list. Known only to the owner;
// the wire codec deliberately has no encoding for it.
struct RealIndex {
  std::size_t value = 0;
};

class TrajectorySuperlist {
 public:
  TrajectorySuperlist(std::vector<FlaggedTrajectory> entries, RealIndex real_index);

  const std::vector<FlaggedTrajectory>& entries() const { return entries_; }
  RealIndex real_index() const { return real_index_; }

 private:
  std::vector<FlaggedTrajectory> entries_;
  RealIndex real_index_;
};

struct SuperlistBuild {
  TrajectorySuperlist superlist;
  // Minute-level visits of every entry, aligned with superlist.entries();
  // feeds EphID cloaking.
  std::vector<VisitSet> minute_visits;
};

// k fakes from derived seeds, the real trajectory at a uniform position, every
// flag freshly encrypted.
SuperlistBuild build_superlist(const RawTrajectory& real, int k, const paillier::PublicKey& pk,
                               const SynthesisProfile& profile, RandomSource& rng,
                               const QuantizationParams& q = {},
                               const TrajectorySynthesizer& synth = AnchorCommuteSynthesizer{});

/// A healthy user's cloaked query: k' + 1 visit sets, no flags.
struct QueryCloak {
  std::vector<VisitSet> visits;
  RealIndex real_index;
  std::vector<VisitSet> fake_minute_visits;  // one per fake, generation order
};

QueryCloak cloak_query(const RawTrajectory& real, int k_prime, const SynthesisProfile& profile, RandomSource& rng,
                       const QuantizationParams& q = {},
                       const TrajectorySynthesizer& synth = AnchorCommuteSynthesizer{});

/// Parameters of the diary model used to give simulated people a plausible
/// day: home, commute, work, an optional leisure stop, home again.
struct DiaryParams {
  GeoBox region;
  std::int64_t sample_interval_s = 15;
  double log_hours_min = 10.0;
  double log_hours_max = 16.0;
  double day_start_hour = 7.0;  // logging starts within +-1 h of this (UTC)
  double leisure_probability = 0.5;
  double min_anchor_separation_m = 500.0;
};

struct DiaryPerson {
  GeoPoint home;
  GeoPoint work;
  GeoPoint leisure;
};

DiaryPerson make_person(const DiaryParams& params, RandomSource& rng);

// `days` consecutive days of 15-second samples starting at day_start (a UTC
// midnight), logged only inside each day's 10-16 h window.
RawTrajectory generate_diary(const DiaryParams& params, const DiaryPerson& person, std::int64_t day_start, int days,
                             RandomSource& rng);

}  // namespace tracekit::anon
