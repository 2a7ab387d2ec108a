// Copyright 2026 The tracekit Authors
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <cmath>

#include <gtest/gtest.h>

#include "tracekit/anonymizer.hpp"
#include "tracekit/errors.hpp"
#include "tracekit/paillier_keys.hpp"

namespace tracekit::anon {
namespace {

constexpr std::int64_t kDay0 = 1'700'006'400;  // a UTC midnight

const GeoBox kRegion{{37.50, 126.95}, {37.56, 127.03}};

RawTrajectory diary_day(std::uint64_t seed) {
  RandomSource rng(seed);
  DiaryParams params;
  params.region = kRegion;
  const DiaryPerson person = make_person(params, rng);
  return generate_diary(params, person, kDay0, 1, rng);
}

double path_length(const RawTrajectory& t) {
  double total = 0;
  for (std::size_t i = 1; i < t.size(); ++i) total += geo::distance_meters(t[i - 1].point, t[i].point);
  return total;
}

TEST(Redact, ZonesAndQuietHours) {
  const GeoPoint home{37.52, 126.98};
  const GeoPoint away{37.54, 127.01};
  const RawTrajectory t{{home, kDay0 + 3600}, {away, kDay0 + 7200}, {away, kDay0 + 23 * 3600}};
  SensitivePolicy policy;
  policy.zones.push_back({home, 100});
  EXPECT_EQ(redact(t, policy).size(), 2u);
  policy.quiet_hours.push_back({22 * 3600, 1 * 3600});
  const auto kept = redact(t, policy);
  ASSERT_EQ(kept.size(), 1u);
  EXPECT_EQ(kept[0].t, kDay0 + 7200);
}

TEST(Redact, PolicyValidation) {
  SensitivePolicy bad;
  bad.zones.push_back({{0, 0}, 0});
  EXPECT_THROW(redact({}, bad), DomainError);
  SensitivePolicy late;
  late.quiet_hours.push_back({0, 90000});
  EXPECT_THROW(late.validate(), DomainError);
}

TEST(QuietHours, WrapsMidnight) {
  const QuietHours q{23 * 3600, 2 * 3600};
  EXPECT_TRUE(q.contains(kDay0 + 23 * 3600 + 1));
  EXPECT_TRUE(q.contains(kDay0 + 3600));
  EXPECT_FALSE(q.contains(kDay0 + 2 * 3600));
  EXPECT_FALSE(q.contains(kDay0 + 12 * 3600));
}

TEST(Motion, MovingMask) {
  const GeoPoint a{37.5, 127.0};
  const GeoPoint b{37.5009, 127.0};  // about 100 m north
  const auto mask = moving_mask({{a, 0}, {a, 15}, {b, 30}, {b, 45}});
  EXPECT_EQ(mask, (std::vector<bool>{false, false, true, false}));
  EXPECT_DOUBLE_EQ(stationary_fraction({{a, 0}, {a, 15}, {b, 30}, {b, 45}}), 0.75);
}

TEST(Profile, ActivityHistogram) {
  const GeoPoint home{37.52, 126.98};
  const GeoPoint work{37.54, 127.01};
  RawTrajectory t;
  for (int h = 0; h < 8; ++h) t.push_back({home, kDay0 + h * 3600});
  for (int h = 9; h < 12; ++h) t.push_back({work, kDay0 + h * 3600});
  const auto hist = activity_histogram(t);
  EXPECT_DOUBLE_EQ(hist[0], 0.0);
  EXPECT_DOUBLE_EQ(hist[10], 1.0);
  EXPECT_DOUBLE_EQ(hist[20], 0.5);
}

TEST(Synthesis, SharesTimestampsAndStaysInRegion) {
  const RawTrajectory real = diary_day(1);
  const SynthesisProfile profile = derive_profile(kRegion, real, 99);
  const RawTrajectory fake = synthesize_fake(profile, real);
  ASSERT_EQ(fake.size(), real.size());
  for (std::size_t i = 0; i < real.size(); ++i) {
    ASSERT_EQ(fake[i].t, real[i].t);
    ASSERT_TRUE(kRegion.contains(fake[i].point)) << i;
  }
}

TEST(Synthesis, DeterministicUnderSeed) {
  const RawTrajectory real = diary_day(2);
  const SynthesisProfile profile = derive_profile(kRegion, real, 5);
  EXPECT_EQ(synthesize_fake(profile, real), synthesize_fake(profile, real));
  SynthesisProfile other = profile;
  other.seed = 6;
  EXPECT_NE(synthesize_fake(profile, real), synthesize_fake(other, real));
}

TEST(Synthesis, MatchesDwellAndTravelStatistics) {
  for (std::uint64_t seed = 10; seed < 20; ++seed) {
    const RawTrajectory real = diary_day(seed);
    const RawTrajectory fake = synthesize_fake(derive_profile(kRegion, real, seed), real);
    EXPECT_NEAR(stationary_fraction(fake), stationary_fraction(real), 0.02) << seed;
    EXPECT_NEAR(path_length(fake), path_length(real), 0.05 * path_length(real) + 50) << seed;
    for (std::size_t i = 1; i < fake.size(); ++i) {
      const double dt = static_cast<double>(fake[i].t - fake[i - 1].t);
      ASSERT_LE(geo::distance_meters(fake[i - 1].point, fake[i].point), kMaxTravelSpeedMps * dt + 1.0);
    }
  }
}

TEST(Synthesis, RejectsEmptyTemplateAndTinyRegion) {
  SynthesisProfile p;
  p.region = kRegion;
  EXPECT_THROW(synthesize_fake(p, {}), DomainError);
  p.region = {{37.5, 127.0}, {37.5001, 127.0001}};
  RandomSource rng(1);
  EXPECT_THROW(place_anchors(p, rng), ConfigError);
}

TEST(Superlist, OneRealFlagAtRecordedIndex) {
  RandomSource rng(3);
  const auto keys = paillier::generate_keypair(32, rng, paillier::KeyMode::insecure_test);
  const RawTrajectory real = diary_day(4);
  const auto build = build_superlist(real, 5, keys.pub, derive_profile(kRegion, real, 8), rng);
  const auto& entries = build.superlist.entries();
  ASSERT_EQ(entries.size(), 6u);
  ASSERT_EQ(build.minute_visits.size(), 6u);
  mpz_class sum = 0;
  for (std::size_t i = 0; i < entries.size(); ++i) {
    const mpz_class flag = paillier::decrypt(keys.priv, entries[i].flag);
    EXPECT_EQ(flag, i == build.superlist.real_index().value ? 1 : 0);
    sum += flag;
  }
  EXPECT_EQ(sum, 1);
  const auto& real_entry = entries[build.superlist.real_index().value];
  EXPECT_EQ(real_entry.visits, geo::quantize(real, 8, 300));
  EXPECT_EQ(build.minute_visits[build.superlist.real_index().value], geo::quantize(real, 8, 60));
}

TEST(Superlist, RejectsBadArguments) {
  RandomSource rng(3);
  const auto keys = paillier::generate_keypair(32, rng, paillier::KeyMode::insecure_test);
  const RawTrajectory real = diary_day(4);
  EXPECT_THROW(build_superlist(real, 0, keys.pub, derive_profile(kRegion, real, 8), rng), DomainError);
  EXPECT_THROW(build_superlist({}, 5, keys.pub, derive_profile(kRegion, real, 8), rng), DomainError);
  EXPECT_THROW(TrajectorySuperlist({}, RealIndex{0}), DomainError);
}

TEST(QueryCloak, RealAtIndex) {
  RandomSource rng(5);
  const RawTrajectory real = diary_day(6);
  const auto cloak = cloak_query(real, 4, derive_profile(kRegion, real, 1), rng);
  ASSERT_EQ(cloak.visits.size(), 5u);
  ASSERT_EQ(cloak.fake_minute_visits.size(), 4u);
  EXPECT_EQ(cloak.visits[cloak.real_index.value], geo::quantize(real, 8, 300));
  const auto empty = cloak_query({}, 3, derive_profile(kRegion, {}, 1), rng);
  EXPECT_EQ(empty.visits.size(), 4u);
}

TEST(Diary, SamplingWindow) {
  RandomSource rng(8);
  DiaryParams params;
  params.region = kRegion;
  const DiaryPerson person = make_person(params, rng);
  EXPECT_GE(geo::distance_meters(person.home, person.work), params.min_anchor_separation_m);
  const RawTrajectory t = generate_diary(params, person, kDay0, 3, rng);
  EXPECT_NO_THROW(geo::check_trajectory(t));
  for (int d = 0; d < 3; ++d) {
    const auto day = geo::slice(t, kDay0 + d * 86400, kDay0 + (d + 1) * 86400);
    const double hours = static_cast<double>(day.size()) * 15 / 3600.0;
    EXPECT_GE(hours, 9.99);
    EXPECT_LE(hours, 16.01);
    EXPECT_LT(geo::distance_meters(day.front().point, person.home), 1.0);
    for (std::size_t i = 1; i < day.size(); ++i) ASSERT_EQ(day[i].t - day[i - 1].t, 15);
  }
}

}  // namespace
}  // namespace tracekit::anon
