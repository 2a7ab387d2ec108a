// Copyright 2026 The tracekit Authors
// SPDX-License-Identifier: Apache-2.0

#include <sstream>

#include <gtest/gtest.h>

#include "tracekit/errors.hpp"
#include "tracekit/harness/bench.hpp"
#include "tracekit/harness/config.hpp"
#include "tracekit/harness/oracle.hpp"
#include "tracekit/harness/report.hpp"
#include "tracekit/harness/scenario.hpp"

namespace tracekit::harness {
namespace {

ScenarioConfig parse(const std::string& text) {
  std::istringstream in(text);
  return parse_config(in);
}

ScenarioConfig pair_scenario() {
  return parse(R"(
[scenario]
name = pair
seed = 11
agents = 2
days = 1
key_bits = 256
threads = 1

[patients]
0 = 0

[colocation]
cafe = 0, 1, 0, 600, 30
)");
}

geo::VisitSet visits(std::initializer_list<std::pair<const char*, std::int64_t>> items) {
  std::vector<geo::Visit> v;
  for (const auto& [cell, bin] : items) v.push_back({geo::GeoCell(cell), bin});
  return geo::VisitSet(std::move(v));
}

TEST(Config, DefaultsAndOverrides) {
  const auto c = parse("[scenario]\nagents = 7\n[protocol]\nk = 9\n[privacy]\nquiet_hours = 22:00-06:00\n");
  EXPECT_EQ(c.agents, 7u);
  EXPECT_EQ(c.protocol.k, 9);
  EXPECT_EQ(c.protocol.k_prime, 5);
  EXPECT_EQ(c.protocol.rotation_s, 1200);
  EXPECT_EQ(c.delta_bins, 24);
  ASSERT_EQ(c.protocol.policy.quiet_hours.size(), 1u);
  EXPECT_EQ(c.protocol.policy.quiet_hours[0].start_s, 22 * 3600);
  EXPECT_EQ(c.protocol.policy.quiet_hours[0].end_s, 6 * 3600);
  EXPECT_EQ(c.protocol.region.min.lat, c.region.min.lat);
}

TEST(Config, RenderRoundTrips) {
  auto c = parse(R"(
[scenario]
agents = 4
days = 2
[privacy]
quiet_hours = 23:30-05:00
zone_home = 37.51, 126.96, 120.5
[patients]
2 = 1
[colocation]
a = 0, 1, 0, 600, 20, 37.52, 127.0
b = 1, 3, 1, 60, 45
[relay]
r = 2, 0, 0, 700, 30, 5000
[adoption]
3 = 0
)");
  const std::string text = render_config(c);
  EXPECT_EQ(render_config(parse(text)), text);
  EXPECT_FALSE(c.adopts(3));
  EXPECT_TRUE(c.adopts(1));
}

TEST(Config, RejectsBadInput) {
  EXPECT_THROW(parse("[scenario]\nagentz = 3\n"), ConfigError);
  EXPECT_THROW(parse("[scenery]\nagents = 3\n"), ConfigError);
  EXPECT_THROW(parse("[scenario]\nagents = three\n"), ConfigError);
  EXPECT_THROW(parse("[protocol]\nrotation_s = 90\n"), ConfigError);
  EXPECT_THROW(parse("[protocol]\nephid_bin_s = 30\n"), ConfigError);
  EXPECT_THROW(parse("[scenario]\nagents = 2\n[patients]\n5 = 0\n"), ConfigError);
  EXPECT_THROW(parse("[scenario]\nagents = 2\ndays = 1\n[patients]\n0 = 1\n"), ConfigError);
  EXPECT_THROW(parse("[colocation]\nx = 0, 0, 0, 10, 10\n"), ConfigError);
  EXPECT_THROW(parse("[colocation]\nx = 0, 1, 0, 1430, 20\n"), ConfigError);
  EXPECT_THROW(parse("[privacy]\nquiet_hours = 25:00-01:00\n"), ConfigError);
  EXPECT_THROW(parse("[scenario]\nagents = 2\n[adoption]\n0 = 0\n[patients]\n0 = 0\n"), ConfigError);
  EXPECT_THROW(parse("[scenario]\nstart = 1700000000\n"), ConfigError);
}

TEST(Oracle, DecayWeights) {
  const std::uint64_t expected[] = {100, 96, 92, 88, 83, 79, 75, 71, 67, 63, 58, 54, 50,
                                    46,  42, 38, 33, 29, 25, 21, 17, 13, 8,  4,  1};
  for (int d = 0; d <= 24; ++d) EXPECT_EQ(oracle::decay_weight(d, 24, 100), expected[d]) << d;
  EXPECT_EQ(oracle::decay_weight(0, 0, 100), 100u);
}

TEST(Oracle, GeolocationRisk) {
  const auto q = visits({{"wydm9qy8", 100}, {"wydm9qy9", 100}});
  EXPECT_EQ(oracle::geolocation_risk(q, {visits({{"u4pruydq", 100}})}, 24, 100, 300, 0), 0u);
  EXPECT_EQ(oracle::geolocation_risk(q, {visits({{"wydm9qy8", 100}})}, 24, 100, 300, 0), 100u);
  EXPECT_EQ(oracle::geolocation_risk(q, {visits({{"wydm9qy8", 100}}), visits({{"wydm9qy8", 100}})}, 24, 100, 300, 0),
            200u);
  EXPECT_EQ(oracle::geolocation_risk(q, {visits({{"wydm9qy8", 99}, {"wydm9qy8", 76}})}, 24, 100, 300, 0), 96u + 1u);
  EXPECT_EQ(oracle::geolocation_risk(q, {visits({{"wydm9qy8", 75}, {"wydm9qy8", 101}})}, 24, 100, 300, 0), 0u);
  // Query cell already pruned.
  EXPECT_EQ(oracle::geolocation_risk(q, {visits({{"wydm9qy8", 100}})}, 24, 100, 300, 101 * 300 + 1), 0u);
}

TEST(Oracle, ContactCount) {
  RandomSource rng(3);
  const geo::GeoPoint here{37.5665, 126.978};
  const ephid::EphId e{geo::geohash_encode(here), ephid::Rand128::random(rng)};
  const ephid::EphId far{geo::geohash_encode({37.60, 126.978}), ephid::Rand128::random(rng)};
  oracle::Ear ear;
  EXPECT_TRUE(ear.hear(e, 60'000, here, 200));
  EXPECT_TRUE(ear.hear(e, 60'000 + 900, here, 200));
  EXPECT_FALSE(ear.hear(far, 60'000, here, 200));
  std::vector<std::set<ephid::TemporalEphId>> patients(2);
  patients[0].insert({e.cell, e.rand, 1000});
  EXPECT_EQ(oracle::contact_count(ear, patients, 900, 0, 0), 1u);
  EXPECT_EQ(oracle::contact_count(ear, patients, 901, 0, 0), 0u);
  EXPECT_EQ(oracle::contact_count(ear, patients, 900, 60'001, 0), 0u);
  patients[1].insert({e.cell, e.rand, 1000});
  EXPECT_EQ(oracle::contact_count(ear, patients, 900, 0, 0), 2u);
  ear.forget_before(60'000 + 901);
  EXPECT_TRUE(ear.heard().empty());
}

TEST(Scenario, ColocatedPairIsExposed) {
  const auto r = run_scenario(pair_scenario());
  ASSERT_EQ(r.uploads.size(), 1u);
  EXPECT_TRUE(r.uploads[0].covers_real);
  ASSERT_EQ(r.exposures.size(), 1u);
  const auto& e = r.exposures[0];
  EXPECT_EQ(e.agent, 1u);
  EXPECT_EQ(e.protocol.ephid_contact_count, 1u);
  EXPECT_GT(e.protocol.geolocation_risk, 0u);
  EXPECT_TRUE(e.matches());
}

TEST(Scenario, NoPatientsNoRisk) {
  auto c = pair_scenario();
  c.patients.clear();
  const auto r = run_scenario(c);
  ASSERT_EQ(r.exposures.size(), 2u);
  for (const auto& e : r.exposures) {
    EXPECT_EQ(e.protocol, client::ExposureResult{});
    EXPECT_TRUE(e.matches());
  }
}

TEST(Scenario, DeterministicAcrossThreadCounts) {
  auto c = parse(R"(
[scenario]
seed = 5
agents = 6
days = 2
key_bits = 256
threads = 1
[patients]
0 = 0
[colocation]
a = 0, 1, 0, 600, 40
b = 2, 3, 1, 620, 25
)");
  const auto a = scenario_jsonl(run_scenario(c));
  EXPECT_EQ(scenario_jsonl(run_scenario(c)), a);
  c.threads = 4;
  EXPECT_EQ(scenario_jsonl(run_scenario(c)), a);
}

TEST(Scenario, TcpMatchesInProcess) {
  const auto c = pair_scenario();
  EXPECT_EQ(scenario_jsonl(run_scenario(c, {.tcp = true})), scenario_jsonl(run_scenario(c)));
}

TEST(Scenario, RelayFromFarAwayIsDiscarded) {
  auto c = pair_scenario();
  c.colocations.clear();
  c.relays.push_back({0, 1, 0, 600, 30, 5000.0});
  const auto r = run_scenario(c);
  EXPECT_GT(r.relay.relayed, 0u);
  EXPECT_EQ(r.relay.accepted, 0u);
  ASSERT_EQ(r.exposures.size(), 1u);
  EXPECT_EQ(r.exposures[0].protocol.ephid_contact_count, 0u);
  EXPECT_TRUE(r.exposures[0].matches());
}

TEST(Bench, FitLine) {
  const auto f = fit_line({1, 2, 3, 4}, {3, 5, 7, 9});
  EXPECT_NEAR(f.slope, 2.0, 1e-12);
  EXPECT_NEAR(f.intercept, 1.0, 1e-12);
  EXPECT_NEAR(f.r2, 1.0, 1e-12);
  EXPECT_THROW(fit_line({1, 1}, {2, 3}), DomainError);
}

TEST(Bench, SmallSweep) {
  BenchOptions o;
  o.key_bits = 512;
  o.ks = {1, 2, 4};
  o.op_samples = 2;
  o.upload_days = 2;
  o.daily_contacts = 20;
  const auto r = run_bench(o);
  ASSERT_EQ(r.points.size(), 3u);
  EXPECT_LT(r.points[0].upload_bytes, r.points[1].upload_bytes);
  EXPECT_LT(r.points[1].upload_bytes, r.points[2].upload_bytes);
  EXPECT_EQ(r.points[2].seeded_hits, 5u * 1u);
  EXPECT_GT(r.points[0].healthy_total(), 0u);
  EXPECT_EQ(r.ops.size(), 4u);
}

}  // namespace
}  // namespace tracekit::harness
