// Copyright 2026 The tracekit Authors
// SPDX-License-Identifier: Apache-2.0

#include "tracekit/anonymizer.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include "tracekit/errors.hpp"

namespace tracekit::anon {
namespace {

using Vec2 = std::array<double, 2>;

constexpr std::int64_t kDay = 24 * 3600;

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t index) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (index + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

double norm(const Vec2& v) { return std::hypot(v[0], v[1]); }
Vec2 sub(const Vec2& a, const Vec2& b) { return {a[0] - b[0], a[1] - b[1]}; }
Vec2 add(const Vec2& a, const Vec2& b) { return {a[0] + b[0], a[1] + b[1]}; }
Vec2 mul(const Vec2& a, double s) { return {a[0] * s, a[1] * s}; }

int hour_of(std::int64_t t) { return static_cast<int>(((t % kDay) + kDay) % kDay / 3600); }

struct BoxXY {
  Vec2 lo;
  Vec2 hi;

  bool contains(const Vec2& p) const { return p[0] >= lo[0] && p[0] <= hi[0] && p[1] >= lo[1] && p[1] <= hi[1]; }
  Vec2 clamp(const Vec2& p) const {
    return {std::clamp(p[0], lo[0], hi[0]), std::clamp(p[1], lo[1], hi[1])};
  }
};

BoxXY box_xy(const geo::LocalFrame& frame, const GeoBox& region) {
  return BoxXY{frame.to_xy(region.min), frame.to_xy(region.max)};
}

GeoPoint uniform_point(const GeoBox& region, RandomSource& rng) {
  return {region.min.lat + rng.uniform01() * (region.max.lat - region.min.lat),
          region.min.lon + rng.uniform01() * (region.max.lon - region.min.lon)};
}

// A polyline walked at constant speed.
class Polyline {
 public:
  explicit Polyline(std::vector<Vec2> points) : points_(std::move(points)) {
    for (std::size_t i = 1; i < points_.size(); ++i) length_ += norm(sub(points_[i], points_[i - 1]));
  }

  double length() const { return length_; }

  Vec2 at(double s) const {
    s = std::clamp(s, 0.0, length_);
    for (std::size_t i = 1; i < points_.size(); ++i) {
      const Vec2 seg = sub(points_[i], points_[i - 1]);
      const double len = norm(seg);
      if (s <= len || i + 1 == points_.size()) {
        return len > 0 ? add(points_[i - 1], mul(seg, std::min(1.0, s / len))) : points_[i - 1];
      }
      s -= len;
    }
    return points_.back();
  }

 private:
  std::vector<Vec2> points_;
  double length_ = 0.0;
};

// Path from `from` that heads for `dest` and has total length `length`: a
// detour through one waypoint when dest is nearer than that, a partial
// straight leg when it is farther.
Polyline plan_leg(const Vec2& from, const Vec2& dest, double length, const BoxXY& box, RandomSource& rng) {
  const Vec2 delta = sub(dest, from);
  const double dist = norm(delta);
  if (dist >= length) {
    if (dist <= 0) return Polyline({from, from});
    return Polyline({from, add(from, mul(delta, length / dist))});
  }
  Vec2 dir;
  Vec2 perp;
  if (dist < 1e-9) {
    const double angle = rng.uniform01() * 2 * 3.141592653589793;
    dir = {std::cos(angle), std::sin(angle)};
    perp = {-dir[1], dir[0]};
  } else {
    dir = mul(delta, 1.0 / dist);
    perp = {-dir[1], dir[0]};
  }
  const double offset = std::sqrt(std::max(0.0, length * length / 4 - dist * dist / 4));
  const Vec2 mid = add(from, mul(delta, 0.5));
  const double side = rng.uniform01() < 0.5 ? 1.0 : -1.0;
  Vec2 waypoint = add(mid, mul(perp, side * offset));
  if (!box.contains(waypoint)) {
    const Vec2 other = add(mid, mul(perp, -side * offset));
    waypoint = box.contains(other) ? other : box.clamp(waypoint);
  }
  return Polyline({from, waypoint, dest});
}

}  // namespace

bool QuietHours::contains(std::int64_t t) const {
  const auto sod = static_cast<int>(((t % kDay) + kDay) % kDay);
  if (start_s <= end_s) return sod >= start_s && sod < end_s;
  return sod >= start_s || sod < end_s;
}

void SensitivePolicy::validate() const {
  for (const auto& z : zones) {
    geo::check_point(z.center);
    if (!(z.radius_m > 0)) throw DomainError("sensitive zone radius must be positive");
  }
  for (const auto& q : quiet_hours) {
    if (q.start_s < 0 || q.start_s >= kDay || q.end_s < 0 || q.end_s > kDay) {
      throw DomainError("quiet hours must lie within one day");
    }
  }
}

bool SensitivePolicy::covers(const geo::TimedPoint& sample) const {
  for (const auto& z : zones) {
    if (geo::distance_meters(z.center, sample.point) <= z.radius_m) return true;
  }
  for (const auto& q : quiet_hours) {
    if (q.contains(sample.t)) return true;
  }
  return false;
}

RawTrajectory redact(const RawTrajectory& t, const SensitivePolicy& policy) {
  policy.validate();
  RawTrajectory out;
  out.reserve(t.size());
  std::copy_if(t.begin(), t.end(), std::back_inserter(out), [&](const auto& s) { return !policy.covers(s); });
  return out;
}

std::vector<bool> moving_mask(const RawTrajectory& t) {
  std::vector<bool> mask(t.size(), false);
  for (std::size_t i = 1; i < t.size(); ++i) {
    const double dt = static_cast<double>(t[i].t - t[i - 1].t);
    mask[i] = geo::distance_meters(t[i - 1].point, t[i].point) > kStationarySpeedMps * dt;
  }
  return mask;
}

double stationary_fraction(const RawTrajectory& t) {
  if (t.empty()) return 0.0;
  const auto mask = moving_mask(t);
  const auto moving = std::count(mask.begin(), mask.end(), true);
  return 1.0 - static_cast<double>(moving) / static_cast<double>(t.size());
}

std::array<double, 24> activity_histogram(const RawTrajectory& t) {
  std::array<double, 24> out;
  out.fill(0.5);
  if (t.empty()) return out;

  std::map<geo::GeoCell, std::size_t> counts;
  for (const auto& s : t) ++counts[geo::geohash_encode(s.point, 7)];
  const auto home_cell = std::max_element(counts.begin(), counts.end(), [](const auto& a, const auto& b) {
                           return a.second < b.second;
                         })->first;
  const GeoPoint home = geo::geohash_decode_box(home_cell).center();

  std::array<std::size_t, 24> total{};
  std::array<std::size_t, 24> away{};
  for (const auto& s : t) {
    const int h = hour_of(s.t);
    ++total[h];
    if (geo::distance_meters(home, s.point) > 150.0) ++away[h];
  }
  for (int h = 0; h < 24; ++h) {
    if (total[h] > 0) out[h] = static_cast<double>(away[h]) / static_cast<double>(total[h]);
  }
  return out;
}

SynthesisProfile derive_profile(const GeoBox& region, const RawTrajectory& real, std::uint64_t seed, int anchor_count) {
  SynthesisProfile p;
  p.region = region;
  p.anchor_count = anchor_count;
  p.activity = activity_histogram(real);
  p.seed = seed;
  return p;
}

std::vector<GeoPoint> place_anchors(const SynthesisProfile& profile, RandomSource& rng) {
  if (profile.anchor_count < 2) throw ConfigError("synthesis needs at least two anchors");
  std::vector<GeoPoint> anchors;
  for (int attempt = 0; attempt < 2000 && static_cast<int>(anchors.size()) < profile.anchor_count; ++attempt) {
    const GeoPoint candidate = uniform_point(profile.region, rng);
    const bool clear = std::all_of(anchors.begin(), anchors.end(), [&](const GeoPoint& a) {
      return geo::distance_meters(a, candidate) >= profile.min_anchor_separation_m;
    });
    if (clear) anchors.push_back(candidate);
  }
  if (static_cast<int>(anchors.size()) < profile.anchor_count) {
    throw ConfigError("synthesis region too small to place distinct anchors");
  }
  return anchors;
}

RawTrajectory AnchorCommuteSynthesizer::synthesize(const SynthesisProfile& profile, const RawTrajectory& templ) const {
  if (templ.empty()) throw DomainError("synthesis template must contain at least one sample");
  RandomSource rng(profile.seed);
  const std::vector<GeoPoint> anchors = place_anchors(profile, rng);

  const geo::LocalFrame frame{profile.region.center()};
  const BoxXY box = box_xy(frame, profile.region);
  std::vector<Vec2> anchor_xy;
  for (const auto& a : anchors) anchor_xy.push_back(frame.to_xy(a));

  const auto moving = moving_mask(templ);
  RawTrajectory out(templ.size());
  Vec2 pos = anchor_xy[0];
  int current = 0;  // -1 when between anchors

  std::size_t i = 0;
  while (i < templ.size()) {
    if (!moving[i]) {
      out[i] = {frame.to_point(pos), templ[i].t};
      ++i;
      continue;
    }
    std::size_t j = i;
    double length = 0.0;
    while (j < templ.size() && moving[j]) {
      length += geo::distance_meters(templ[j - 1].point, templ[j].point);
      ++j;
    }
    // Run [i, j) starts from the previous (stationary or earlier) sample.
    const std::int64_t t0 = templ[i - 1].t;
    const std::int64_t t1 = templ[j - 1].t;
    const double duration = static_cast<double>(t1 - t0);
    length = std::min(length, kMaxTravelSpeedMps * duration);

    const bool go_out = current == 0 || rng.uniform01() < profile.activity[hour_of(t0)];
    int dest = 0;
    if (go_out) {
      std::vector<int> options;
      for (int a = 1; a < static_cast<int>(anchors.size()); ++a) {
        if (a != current) options.push_back(a);
      }
      dest = options.empty() ? 0 : options[rng.uniform(options.size())];
    }
    if (dest == current) dest = current == 0 ? 1 : 0;

    const Polyline leg = plan_leg(pos, anchor_xy[dest], length, box, rng);
    for (std::size_t m = i; m < j; ++m) {
      const double frac = duration > 0 ? static_cast<double>(templ[m].t - t0) / duration : 1.0;
      out[m] = {frame.to_point(leg.at(frac * leg.length())), templ[m].t};
    }
    pos = leg.at(leg.length());
    current = norm(sub(pos, anchor_xy[dest])) < 1e-6 ? dest : -1;
    i = j;
  }
  return out;
}

RawTrajectory synthesize_fake(const SynthesisProfile& profile, const RawTrajectory& templ) {
  return AnchorCommuteSynthesizer{}.synthesize(profile, templ);
}

TrajectorySuperlist::TrajectorySuperlist(std::vector<FlaggedTrajectory> entries, RealIndex real_index)
    : entries_(std::move(entries)), real_index_(real_index) {
  if (real_index_.value >= entries_.size()) throw DomainError("superlist: real index out of range");
}

SuperlistBuild build_superlist(const RawTrajectory& real, int k, const paillier::PublicKey& pk,
                               const SynthesisProfile& profile, RandomSource& rng, const QuantizationParams& q,
                               const TrajectorySynthesizer& synth) {
  if (k < 1) throw DomainError("superlist: k must be >= 1");
  if (real.empty()) throw DomainError("superlist: real trajectory is empty");

  std::vector<RawTrajectory> trajectories;
  trajectories.reserve(k + 1);
  for (int i = 0; i < k; ++i) {
    SynthesisProfile fake_profile = profile;
    fake_profile.seed = mix_seed(profile.seed, static_cast<std::uint64_t>(i));
    trajectories.push_back(synth.synthesize(fake_profile, real));
  }
  const auto real_pos = static_cast<std::size_t>(rng.uniform(static_cast<std::uint64_t>(k) + 1));
  trajectories.insert(trajectories.begin() + static_cast<std::ptrdiff_t>(real_pos), real);

  std::vector<FlaggedTrajectory> entries;
  std::vector<VisitSet> minute_visits;
  entries.reserve(trajectories.size());
  minute_visits.reserve(trajectories.size());
  for (std::size_t i = 0; i < trajectories.size(); ++i) {
    const int flag = i == real_pos ? 1 : 0;
    entries.push_back({geo::quantize(trajectories[i], q.precision, q.geo_bin_s), paillier::encrypt(pk, flag, rng)});
    minute_visits.push_back(geo::quantize(trajectories[i], q.precision, q.ephid_bin_s));
  }
  return SuperlistBuild{TrajectorySuperlist(std::move(entries), RealIndex{real_pos}), std::move(minute_visits)};
}

QueryCloak cloak_query(const RawTrajectory& real, int k_prime, const SynthesisProfile& profile, RandomSource& rng,
                       const QuantizationParams& q, const TrajectorySynthesizer& synth) {
  if (k_prime < 0) throw DomainError("query cloak: k' must be >= 0");
  QueryCloak out;
  std::vector<VisitSet> fakes;
  if (!real.empty()) {
    for (int i = 0; i < k_prime; ++i) {
      SynthesisProfile fake_profile = profile;
      fake_profile.seed = mix_seed(profile.seed, static_cast<std::uint64_t>(i));
      const RawTrajectory fake = synth.synthesize(fake_profile, real);
      fakes.push_back(geo::quantize(fake, q.precision, q.geo_bin_s));
      out.fake_minute_visits.push_back(geo::quantize(fake, q.precision, q.ephid_bin_s));
    }
  } else {
    // Nothing to imitate: fakes are as empty as the real trajectory.
    fakes.assign(static_cast<std::size_t>(k_prime), VisitSet{});
    out.fake_minute_visits.assign(static_cast<std::size_t>(k_prime), VisitSet{});
  }
  const auto real_pos = static_cast<std::size_t>(rng.uniform(static_cast<std::uint64_t>(k_prime) + 1));
  out.visits = std::move(fakes);
  out.visits.insert(out.visits.begin() + static_cast<std::ptrdiff_t>(real_pos),
                    geo::quantize(real, q.precision, q.geo_bin_s));
  out.real_index = RealIndex{real_pos};
  return out;
}

DiaryPerson make_person(const DiaryParams& params, RandomSource& rng) {
  SynthesisProfile layout;
  layout.region = params.region;
  layout.anchor_count = 3;
  layout.min_anchor_separation_m = params.min_anchor_separation_m;
  const auto anchors = place_anchors(layout, rng);
  return DiaryPerson{anchors[0], anchors[1], anchors[2]};
}

RawTrajectory generate_diary(const DiaryParams& params, const DiaryPerson& person, std::int64_t day_start, int days,
                             RandomSource& rng) {
  if (params.sample_interval_s <= 0) throw ConfigError("diary: sample interval must be positive");
  if (params.log_hours_min <= 0 || params.log_hours_max < params.log_hours_min || params.log_hours_max > 20) {
    throw ConfigError("diary: logging hours must satisfy 0 < min <= max <= 20");
  }
  RawTrajectory out;
  for (int d = 0; d < days; ++d) {
    const std::int64_t midnight = day_start + d * kDay;
    const double start_h = params.day_start_hour - 1.0 + 2.0 * rng.uniform01();
    const double hours = params.log_hours_min + (params.log_hours_max - params.log_hours_min) * rng.uniform01();
    std::int64_t on = midnight + static_cast<std::int64_t>(start_h * 3600);
    on -= on % params.sample_interval_s;
    const std::int64_t off = on + static_cast<std::int64_t>(hours * 3600);

    // Keyframes (time, place); straight-line travel between consecutive ones.
    std::vector<std::pair<double, GeoPoint>> keys;
    double t = static_cast<double>(on);
    keys.emplace_back(t, person.home);
    auto travel = [&](const GeoPoint& from, const GeoPoint& to) {
      const double dist = geo::distance_meters(from, to);
      const double speed = dist < 1500 ? 1.4 : 8.0 + 6.0 * rng.uniform01();
      t += dist / speed;
      keys.emplace_back(t, to);
    };
    auto dwell = [&](const GeoPoint& at, double seconds) {
      t += seconds;
      keys.emplace_back(t, at);
    };
    dwell(person.home, (15 + 75 * rng.uniform01()) * 60);
    travel(person.home, person.work);
    const double leave_work = static_cast<double>(off) - (2 + 2 * rng.uniform01()) * 3600;
    dwell(person.work, std::max(3600.0, leave_work - t));
    GeoPoint last = person.work;
    if (rng.uniform01() < params.leisure_probability) {
      travel(person.work, person.leisure);
      dwell(person.leisure, (30 + 60 * rng.uniform01()) * 60);
      last = person.leisure;
    }
    travel(last, person.home);
    keys.emplace_back(std::max(t, static_cast<double>(off)) + 1, person.home);

    std::size_t k = 0;
    for (std::int64_t s = on; s < off; s += params.sample_interval_s) {
      const double ts = static_cast<double>(s);
      while (k + 1 < keys.size() && keys[k + 1].first < ts) ++k;
      GeoPoint p = keys[k].second;
      if (k + 1 < keys.size()) {
        const auto& [ta, pa] = keys[k];
        const auto& [tb, pb] = keys[k + 1];
        const double f = tb > ta ? std::clamp((ts - ta) / (tb - ta), 0.0, 1.0) : 1.0;
        p = {pa.lat + (pb.lat - pa.lat) * f, pa.lon + (pb.lon - pa.lon) * f};
      }
      out.push_back({p, s});
    }
  }
  return out;
}

}  // namespace tracekit::anon
