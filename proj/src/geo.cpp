// Copyright 2026 The tracekit Authors
// SPDX-License-Identifier: Apache-2.0

#include "tracekit/geo.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "tracekit/errors.hpp"

namespace tracekit::geo {
namespace {

constexpr std::string_view kAlphabet = "0123456789bcdefghjkmnpqrstuvwxyz";

int alphabet_index(char ch) {
  const auto pos = kAlphabet.find(ch);
  return pos == std::string_view::npos ? -1 : static_cast<int>(pos);
}

double radians(double deg) { return deg * std::numbers::pi / 180.0; }

}  // namespace

void check_point(const GeoPoint& p) {
  if (!(p.lat >= -90.0 && p.lat <= 90.0) || !(p.lon >= -180.0 && p.lon <= 180.0)) {
    throw DomainError("coordinates outside [-90, 90] x [-180, 180]");
  }
}

GeoCell::GeoCell(std::string_view code) {
  if (code.empty() || code.size() > kMaxPrecision) throw ParseError("geohash: length must be 1..12");
  for (std::size_t i = 0; i < code.size(); ++i) {
    if (alphabet_index(code[i]) < 0) throw ParseError("geohash: invalid character '" + std::string(1, code[i]) + "'");
    chars_[i] = code[i];
  }
  size_ = static_cast<std::uint8_t>(code.size());
}

GeoCell geohash_encode(const GeoPoint& p, int precision) {
  check_point(p);
  if (precision < 1 || precision > kMaxPrecision) throw DomainError("geohash: precision must be 1..12");

  double lat_lo = -90.0, lat_hi = 90.0;
  double lon_lo = -180.0, lon_hi = 180.0;
  std::string code;
  code.reserve(precision);
  bool lon_bit = true;
  int acc = 0;
  int nbits = 0;
  while (static_cast<int>(code.size()) < precision) {
    if (lon_bit) {
      const double mid = (lon_lo + lon_hi) / 2;
      if (p.lon >= mid) {
        acc = (acc << 1) | 1;
        lon_lo = mid;
      } else {
        acc <<= 1;
        lon_hi = mid;
      }
    } else {
      const double mid = (lat_lo + lat_hi) / 2;
      if (p.lat >= mid) {
        acc = (acc << 1) | 1;
        lat_lo = mid;
      } else {
        acc <<= 1;
        lat_hi = mid;
      }
    }
    lon_bit = !lon_bit;
    if (++nbits == 5) {
      code.push_back(kAlphabet[acc]);
      acc = 0;
      nbits = 0;
    }
  }
  return GeoCell(code);
}

GeoBox geohash_decode_box(const GeoCell& cell) {
  double lat_lo = -90.0, lat_hi = 90.0;
  double lon_lo = -180.0, lon_hi = 180.0;
  bool lon_bit = true;
  for (char ch : cell.code()) {
    const int v = alphabet_index(ch);
    for (int bit = 4; bit >= 0; --bit) {
      const bool set = (v >> bit) & 1;
      if (lon_bit) {
        const double mid = (lon_lo + lon_hi) / 2;
        (set ? lon_lo : lon_hi) = mid;
      } else {
        const double mid = (lat_lo + lat_hi) / 2;
        (set ? lat_lo : lat_hi) = mid;
      }
      lon_bit = !lon_bit;
    }
  }
  return GeoBox{{lat_lo, lon_lo}, {lat_hi, lon_hi}};
}

GeoBox geohash_decode_box(std::string_view code) { return geohash_decode_box(GeoCell(code)); }

double distance_meters(const GeoPoint& a, const GeoPoint& b) {
  const double dlat = radians(b.lat - a.lat);
  const double dlon = radians(b.lon - a.lon);
  const double s = std::sin(dlat / 2) * std::sin(dlat / 2) +
                   std::cos(radians(a.lat)) * std::cos(radians(b.lat)) * std::sin(dlon / 2) * std::sin(dlon / 2);
  return 2 * kEarthRadiusMeters * std::asin(std::min(1.0, std::sqrt(s)));
}

void check_trajectory(const RawTrajectory& t) {
  for (std::size_t i = 0; i < t.size(); ++i) {
    check_point(t[i].point);
    if (i > 0 && t[i].t <= t[i - 1].t) throw DomainError("trajectory timestamps must increase strictly");
  }
  if (!t.empty() && t.back().t - t.front().t > kRetentionSeconds) {
    throw DomainError("trajectory spans more than 14 days");
  }
}

RawTrajectory slice(const RawTrajectory& t, std::int64_t from, std::int64_t to) {
  auto lo = std::lower_bound(t.begin(), t.end(), from, [](const TimedPoint& p, std::int64_t v) { return p.t < v; });
  auto hi = std::lower_bound(lo, t.end(), to, [](const TimedPoint& p, std::int64_t v) { return p.t < v; });
  return RawTrajectory(lo, hi);
}

VisitSet::VisitSet(std::vector<Visit> visits) : visits_(std::move(visits)) {
  std::sort(visits_.begin(), visits_.end());
  visits_.erase(std::unique(visits_.begin(), visits_.end()), visits_.end());
}

bool VisitSet::contains(const Visit& v) const { return std::binary_search(visits_.begin(), visits_.end(), v); }

VisitSet quantize(const RawTrajectory& t, int precision, std::int64_t bin_width_s) {
  if (bin_width_s <= 0) throw DomainError("quantize: bin width must be positive");
  std::vector<Visit> visits;
  visits.reserve(t.size());
  for (const auto& sample : t) {
    visits.push_back(Visit{geohash_encode(sample.point, precision), bin_of(sample.t, bin_width_s)});
  }
  return VisitSet(std::move(visits));
}

std::array<double, 2> LocalFrame::to_xy(const GeoPoint& p) const {
  const double x = radians(p.lon - origin.lon) * std::cos(radians(origin.lat)) * kEarthRadiusMeters;
  const double y = radians(p.lat - origin.lat) * kEarthRadiusMeters;
  return {x, y};
}

GeoPoint LocalFrame::to_point(const std::array<double, 2>& xy) const {
  const double lat = origin.lat + xy[1] / kEarthRadiusMeters * 180.0 / std::numbers::pi;
  const double lon = origin.lon + xy[0] / (kEarthRadiusMeters * std::cos(radians(origin.lat))) * 180.0 / std::numbers::pi;
  return {lat, lon};
}

}  // namespace tracekit::geo
