// Copyright 2026 The tracekit Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

namespace tracekit::geo {

inline constexpr int kDefaultPrecision = 8;
inline constexpr int kMaxPrecision = 12;
inline constexpr double kEarthRadiusMeters = 6371000.0;
inline constexpr std::int64_t kRetentionSeconds = 14 * 24 * 3600;

struct GeoPoint {
  double lat = 0.0;
  double lon = 0.0;

  friend bool operator==(const GeoPoint&, const GeoPoint&) = default;
};

// Throws DomainError when lat/lon fall outside [-90, 90] x [-180, 180].
void check_point(const GeoPoint& p);

/// A geohash cell code, stored inline (codes never exceed 12 characters).
class GeoCell {
 public:
  GeoCell() = default;
  // Throws ParseError on an empty, over-long or non-alphabet code.
  explicit GeoCell(std::string_view code);

  std::string_view code() const { return {chars_.data(), size_}; }
  std::string str() const { return std::string(code()); }
  int precision() const { return size_; }

  friend bool operator==(const GeoCell& a, const GeoCell& b) { return a.code() == b.code(); }
  friend std::strong_ordering operator<=>(const GeoCell& a, const GeoCell& b) { return a.code() <=> b.code(); }

 private:
  std::array<char, kMaxPrecision> chars_{};
  std::uint8_t size_ = 0;
};

struct GeoBox {
  GeoPoint min;
  GeoPoint max;

  GeoPoint center() const { return {(min.lat + max.lat) / 2, (min.lon + max.lon) / 2}; }
  bool contains(const GeoPoint& p) const {
    return p.lat >= min.lat && p.lat <= max.lat && p.lon >= min.lon && p.lon <= max.lon;
  }
};

GeoCell geohash_encode(const GeoPoint& p, int precision = kDefaultPrecision);
GeoBox geohash_decode_box(const GeoCell& cell);
GeoBox geohash_decode_box(std::string_view code);

// Haversine great-circle distance.
double distance_meters(const GeoPoint& a, const GeoPoint& b);

struct TimedPoint {
  GeoPoint point;
  std::int64_t t = 0;  // seconds since the Unix epoch

  friend bool operator==(const TimedPoint&, const TimedPoint&) = default;
};

// Ordered location samples with strictly increasing timestamps.
using RawTrajectory = std::vector<TimedPoint>;

// Throws DomainError unless timestamps increase strictly, every point is on
// the globe and the span is at most 14 days.
void check_trajectory(const RawTrajectory& t);

// Samples with t in [from, to).
RawTrajectory slice(const RawTrajectory& t, std::int64_t from, std::int64_t to);

/// One (cell, time bin) occupancy. `bin` counts bins of a width fixed by the
/// context since the epoch: 300 s for the risk matrix, 60 s for EphIDs.
struct Visit {
  GeoCell cell;
  std::int64_t bin = 0;

  friend bool operator==(const Visit&, const Visit&) = default;
  friend auto operator<=>(const Visit&, const Visit&) = default;
};

/// Sorted, duplicate-free set of visits.
class VisitSet {
 public:
  VisitSet() = default;
  // Sorts and removes duplicates.
  explicit VisitSet(std::vector<Visit> visits);

  const std::vector<Visit>& visits() const { return visits_; }
  std::size_t size() const { return visits_.size(); }
  bool empty() const { return visits_.empty(); }
  bool contains(const Visit& v) const;
  auto begin() const { return visits_.begin(); }
  auto end() const { return visits_.end(); }

  friend bool operator==(const VisitSet&, const VisitSet&) = default;

 private:
  std::vector<Visit> visits_;
};

// Each sample maps to (geohash(point, precision), floor(t / bin_width_s)).
VisitSet quantize(const RawTrajectory& t, int precision, std::int64_t bin_width_s);

// floor division that stays correct for negative timestamps.
inline std::int64_t bin_of(std::int64_t t, std::int64_t width) {
  std::int64_t q = t / width;
  if ((t % width != 0) && ((t < 0) != (width < 0))) --q;
  return q;
}

/// Local east/north metres around an origin; adequate for city-scale
/// geometry where the haversine distance is overkill.
struct LocalFrame {
  GeoPoint origin;

  std::array<double, 2> to_xy(const GeoPoint& p) const;
  GeoPoint to_point(const std::array<double, 2>& xy) const;
};

}  // namespace tracekit::geo

template <>
struct std::hash<tracekit::geo::GeoCell> {
  std::size_t operator()(const tracekit::geo::GeoCell& c) const noexcept {
    return std::hash<std::string_view>{}(c.code());
  }
};

template <>
struct std::hash<tracekit::geo::Visit> {
  std::size_t operator()(const tracekit::geo::Visit& v) const noexcept {
    return std::hash<tracekit::geo::GeoCell>{}(v.cell) * 1000003u ^ std::hash<std::int64_t>{}(v.bin);
  }
};
