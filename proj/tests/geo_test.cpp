// Copyright 2026 The tracekit Authors
// SPDX-License-Identifier: Apache-2.0

#include <cmath>

#include <gtest/gtest.h>

#include "tracekit/errors.hpp"
#include "tracekit/geo.hpp"

namespace tracekit::geo {
namespace {

struct EncodeCase {
  GeoPoint p;
  const char* p8;
  const char* p12;
};

// Reference values from an independent bit-interleaving implementation.
const EncodeCase kCases[] = {
    {{57.64911, 10.40744}, "u4pruydq", "u4pruydqqvj8"},
    {{37.5665, 126.9780}, "wydm9qy8", "wydm9qy89z5m"},
    {{-33.8688, 151.2093}, "r3gx2f77", "r3gx2f77bn44"},
    {{0.0, 0.0}, "s0000000", "s00000000000"},
    {{51.5074, -0.1278}, "gcpvj0du", "gcpvj0duq533"},
};

TEST(Geohash, MatchesReference) {
  for (const auto& c : kCases) {
    EXPECT_EQ(geohash_encode(c.p, 8).code(), c.p8);
    EXPECT_EQ(geohash_encode(c.p, 12).code(), c.p12);
  }
}

TEST(Geohash, DecodedBoxContainsPoint) {
  for (const auto& c : kCases) {
    const GeoBox box = geohash_decode_box(geohash_encode(c.p, 8));
    EXPECT_TRUE(box.contains(c.p));
    EXPECT_EQ(geohash_encode(box.center(), 8).code(), c.p8);
    // An 8-character cell is about 38 m by 19 m.
    EXPECT_LT(distance_meters(box.min, box.max), 45.0);
  }
}

TEST(Geohash, PrefixProperty) {
  const GeoPoint p{37.5665, 126.9780};
  for (int precision = 1; precision <= 12; ++precision) {
    EXPECT_EQ(geohash_encode(p, precision).code(), std::string_view("wydm9qy89z5m").substr(0, precision));
  }
}

TEST(Geohash, RejectsBadInput) {
  EXPECT_THROW(GeoCell("abc"), ParseError);  // 'a' is not in the alphabet
  EXPECT_THROW(GeoCell(""), ParseError);
  EXPECT_THROW(GeoCell("0123456789bcd"), ParseError);
  EXPECT_THROW(geohash_encode({91.0, 0.0}), DomainError);
  EXPECT_THROW(geohash_encode({0.0, 0.0}, 0), DomainError);
}

TEST(Distance, HaversineReference) {
  EXPECT_NEAR(distance_meters({37.5665, 126.9780}, {35.1796, 129.0756}), 325111.258850, 1e-3);
  EXPECT_NEAR(distance_meters({0, 0}, {0, 1}), 111194.926645, 1e-3);
  EXPECT_EQ(distance_meters({10, 10}, {10, 10}), 0.0);
}

TEST(Quantize, DeduplicatesPerCellAndBin) {
  const GeoPoint p{37.5665, 126.9780};
  const RawTrajectory t{{p, 0}, {p, 15}, {p, 299}, {p, 300}};
  const VisitSet v = quantize(t, 8, 300);
  ASSERT_EQ(v.size(), 2u);
  EXPECT_EQ(v.visits()[0].bin, 0);
  EXPECT_EQ(v.visits()[1].bin, 1);
  EXPECT_TRUE(v.contains({geohash_encode(p), 1}));
  EXPECT_FALSE(v.contains({geohash_encode(p), 2}));
}

TEST(Quantize, BinOfFloorsNegatives) {
  EXPECT_EQ(bin_of(0, 60), 0);
  EXPECT_EQ(bin_of(59, 60), 0);
  EXPECT_EQ(bin_of(60, 60), 1);
  EXPECT_EQ(bin_of(-1, 60), -1);
  EXPECT_EQ(bin_of(-60, 60), -1);
  EXPECT_EQ(bin_of(-61, 60), -2);
}

TEST(Trajectory, SliceIsHalfOpen) {
  RawTrajectory t;
  for (int i = 0; i < 10; ++i) t.push_back({{0, 0}, i * 10});
  const auto s = slice(t, 20, 50);
  ASSERT_EQ(s.size(), 3u);
  EXPECT_EQ(s.front().t, 20);
  EXPECT_EQ(s.back().t, 40);
}

TEST(Trajectory, CheckRejectsUnordered) {
  EXPECT_THROW(check_trajectory({{{0, 0}, 10}, {{0, 0}, 5}}), DomainError);
  EXPECT_NO_THROW(check_trajectory({{{0, 0}, 5}, {{0, 0}, 10}}));
}

TEST(LocalFrame, RoundTrip) {
  const LocalFrame f{{37.5, 127.0}};
  const GeoPoint p{37.51, 127.02};
  const auto xy = f.to_xy(p);
  const GeoPoint back = f.to_point(xy);
  EXPECT_NEAR(back.lat, p.lat, 1e-9);
  EXPECT_NEAR(back.lon, p.lon, 1e-9);
  EXPECT_NEAR(std::hypot(xy[0], xy[1]), distance_meters(f.origin, p), 2.0);
}

}  // namespace
}  // namespace tracekit::geo
