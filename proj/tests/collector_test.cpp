// Copyright 2026 The tracekit Authors
// SPDX-License-Identifier: Apache-2.0

#include <atomic>
#include <chrono>
#include <thread>

#include <gtest/gtest.h>

#include "tracekit/collector.hpp"
#include "tracekit/errors.hpp"
#include "tracekit/paillier_keys.hpp"

namespace tracekit::collector {
namespace {

constexpr std::int64_t kNow = 1'700'006'400;
constexpr std::int64_t kBin = kNow / 300;

const paillier::KeyPair& keys() {
  static const paillier::KeyPair k = [] {
    RandomSource rng(77);
    return paillier::generate_keypair(256, rng, paillier::KeyMode::insecure_test);
  }();
  return k;
}

struct Fixture {
  std::int64_t now = kNow;
  RandomSource rng{5};
  std::unique_ptr<Collector> collector =
      std::make_unique<Collector>(keys().pub, CollectorConfig{}, RandomSource(6), [this] { return now; });

  mpz_class dec(const Ciphertext& c) const { return paillier::decrypt(keys().priv, c); }
  mpz_class cell(const geo::GeoCell& c, std::int64_t bin) const {
    const auto v = collector->cell({c, bin});
    return v ? dec(*v) : mpz_class(-1);
  }
  anon::FlaggedTrajectory trajectory(std::vector<Visit> visits, int flag) {
    return {geo::VisitSet(std::move(visits)), paillier::encrypt(keys().pub, flag, rng)};
  }
  wire::Message upload(const std::string& token, std::vector<anon::FlaggedTrajectory> t,
                       std::vector<wire::EphIdGroup> e = {}) {
    collector->issue_token(token, now + 3600);
    return collector->upload(wire::PatientUpload{token, std::move(t), std::move(e)});
  }
};

const geo::GeoCell kCell("wydm9qy8");
const geo::GeoCell kOther("wydm9qy9");

TEST(Decay, DefaultWeights) {
  const DecayProfile d = DecayProfile::linear();
  // 100 * (1 - d/24) rounded half up; d = 9 and d = 21 land exactly on .5.
  const std::vector<std::uint32_t> expected{100, 96, 92, 88, 83, 79, 75, 71, 67, 63, 58, 54, 50,
                                            46,  42, 38, 33, 29, 25, 21, 17, 13, 8,  4,  1};
  EXPECT_EQ(d.weights(), expected);
  EXPECT_EQ(d.delta_bins(), 24);
  EXPECT_EQ(d.fingerprint().size(), 64u);
  EXPECT_NE(d.fingerprint(), DecayProfile::linear(12).fingerprint());
}

TEST(Decay, TieBreakAndValidation) {
  EXPECT_EQ(DecayProfile::linear(4, 10).weights(), (std::vector<std::uint32_t>{10, 8, 5, 3, 1}));
  // round(10 / 8) = 1 ties the floor of 1 at d = 8; lowering it would reach 0.
  EXPECT_THROW(DecayProfile::linear(8, 10), ConfigError);
  EXPECT_THROW(DecayProfile::linear(20, 10), ConfigError);
  EXPECT_EQ(DecayProfile::linear(0, 7).weights(), std::vector<std::uint32_t>{7});
  EXPECT_THROW(DecayProfile({3, 3}), ConfigError);
  EXPECT_THROW(DecayProfile({3, 0}), ConfigError);
  EXPECT_THROW(DecayProfile(std::vector<std::uint32_t>{}), ConfigError);
}

TEST(Tokens, SingleUseAndExpiry) {
  TokenRegistry r;
  r.issue("a", 100);
  EXPECT_EQ(r.check("a", 50, "d"), TokenStatus::permit);
  EXPECT_EQ(r.consume("a", 50, "d"), TokenStatus::permit);
  EXPECT_EQ(r.consume("a", 51, "d"), TokenStatus::replay);
  EXPECT_EQ(r.consume("a", 51, "other"), TokenStatus::consumed);
  r.issue("b", 100);
  EXPECT_EQ(r.consume("b", 100, "d"), TokenStatus::expired);
  EXPECT_EQ(r.consume("zzz", 0, "d"), TokenStatus::unknown);
}

TEST(Integrate, SingleVisitFollowsDecay) {
  Fixture f;
  ASSERT_TRUE(std::holds_alternative<wire::Ack>(f.upload("t1", {f.trajectory({{kCell, kBin}}, 1)})));
  EXPECT_EQ(f.cell(kCell, kBin), 100);
  EXPECT_EQ(f.cell(kCell, kBin + 1), 96);
  EXPECT_EQ(f.cell(kCell, kBin + 24), 1);
  EXPECT_EQ(f.cell(kCell, kBin + 25), -1);
  EXPECT_EQ(f.cell(kCell, kBin - 1), -1);
  EXPECT_EQ(f.collector->cell_count(), 25u);
}

TEST(Integrate, FakeOnlyCellsAreUpdatedZeros) {
  Fixture f;
  f.upload("t1", {f.trajectory({{kCell, kBin}}, 0), f.trajectory({{kOther, kBin}}, 0)});
  EXPECT_EQ(f.collector->cell_count(), 50u);
  EXPECT_EQ(f.cell(kCell, kBin), 0);
  EXPECT_EQ(f.cell(kOther, kBin + 10), 0);
}

TEST(Integrate, TwoPatientsAdd) {
  Fixture f;
  f.upload("t1", {f.trajectory({{kCell, kBin}}, 1)});
  f.upload("t2", {f.trajectory({{kCell, kBin}}, 1), f.trajectory({{kCell, kBin + 2}}, 0)});
  EXPECT_EQ(f.cell(kCell, kBin), 200);
  EXPECT_EQ(f.cell(kCell, kBin + 3), 2 * 88);
}

TEST(Integrate, LinearityAcrossPatients) {
  Fixture a, b, both;
  const std::vector<Visit> va{{kCell, kBin}, {kCell, kBin + 3}, {kOther, kBin + 1}};
  const std::vector<Visit> vb{{kCell, kBin + 1}, {kOther, kBin + 30}};
  a.upload("x", {a.trajectory(va, 1)});
  b.upload("y", {b.trajectory(vb, 1)});
  both.upload("x", {both.trajectory(va, 1)});
  both.upload("y", {both.trajectory(vb, 1)});
  for (const auto& c : {kCell, kOther}) {
    for (std::int64_t bin = kBin - 2; bin < kBin + 60; ++bin) {
      const auto sa = std::max<mpz_class>(a.cell(c, bin), 0);
      const auto sb = std::max<mpz_class>(b.cell(c, bin), 0);
      EXPECT_EQ(std::max<mpz_class>(both.cell(c, bin), 0), sa + sb);
    }
  }
}

TEST(Integrate, MalformedCiphertextRejectsAtomically) {
  Fixture f;
  auto good = f.trajectory({{kCell, kBin}}, 1);
  anon::FlaggedTrajectory bad{geo::VisitSet({{kOther, kBin}}), Ciphertext{keys().pub.n()}};
  const auto reply = f.upload("t1", {good, bad});
  ASSERT_TRUE(std::holds_alternative<wire::Error>(reply));
  EXPECT_EQ(std::get<wire::Error>(reply).code, wire::ErrorCode::malformed_ciphertext);
  EXPECT_EQ(f.collector->cell_count(), 0u);
  // The token survives a rejected upload.
  EXPECT_TRUE(std::holds_alternative<wire::Ack>(
      f.collector->upload(wire::PatientUpload{"t1", {f.trajectory({{kCell, kBin}}, 1)}, {}})));
}

TEST(Integrate, TokenFlows) {
  Fixture f;
  const auto t = f.trajectory({{kCell, kBin}}, 1);
  EXPECT_TRUE(std::holds_alternative<wire::Ack>(f.upload("t1", {t})));
  // Identical retry is acknowledged and not double counted.
  EXPECT_TRUE(std::holds_alternative<wire::Ack>(f.collector->upload(wire::PatientUpload{"t1", {t}, {}})));
  EXPECT_EQ(f.cell(kCell, kBin), 100);
  const auto replay = f.collector->upload(wire::PatientUpload{"t1", {f.trajectory({{kOther, kBin}}, 1)}, {}});
  EXPECT_EQ(std::get<wire::Error>(replay).code, wire::ErrorCode::token_consumed);
  const auto unknown = f.collector->upload(wire::PatientUpload{"nope", {t}, {}});
  EXPECT_EQ(std::get<wire::Error>(unknown).code, wire::ErrorCode::token_unknown);
  f.collector->issue_token("late", f.now + 10);
  f.now += 20;
  const auto expired = f.collector->upload(wire::PatientUpload{"late", {t}, {}});
  EXPECT_EQ(std::get<wire::Error>(expired).code, wire::ErrorCode::token_expired);
}

TEST(Query, GeolocationOracleCases) {
  Fixture f;
  f.upload("t1", {f.trajectory({{kCell, kBin}}, 1), f.trajectory({{kOther, kBin}}, 0)});
  const auto risks = f.collector->query_geolocation({
      geo::VisitSet({{geo::GeoCell("s0000000"), kBin}}),
      geo::VisitSet({{kCell, kBin + 1}}),
      geo::VisitSet({{kCell, kBin + 25}}),
      geo::VisitSet({{kCell, kBin}, {kCell, kBin + 1}, {kOther, kBin}}),
      geo::VisitSet{},
  });
  ASSERT_EQ(risks.size(), 5u);
  EXPECT_EQ(f.dec(risks[0]), 0);
  EXPECT_EQ(f.dec(risks[1]), 96);
  EXPECT_EQ(f.dec(risks[2]), 0);
  EXPECT_EQ(f.dec(risks[3]), 196);
  EXPECT_EQ(f.dec(risks[4]), 0);
  // Fresh zeros are not a fixed ciphertext.
  EXPECT_NE(risks[0].value, risks[4].value);
}

TEST(EphIds, StoredNegatedAndQueried) {
  Fixture f;
  RandomSource rng(3);
  const auto u1 = ephid::Rand128::random(rng);
  const auto u2 = ephid::Rand128::random(rng);
  const Visit at{kCell, kNow / 60};
  EXPECT_TRUE(f.collector->query_ephids({at}).empty());
  f.upload("p1", {f.trajectory({{kCell, kBin}}, 1)}, {{u1, {at}}});
  f.upload("p2", {f.trajectory({{kCell, kBin}}, 1)}, {{u2, {at, {kOther, kNow / 60}}}});
  const auto stored = f.collector->ephids_at(at);
  ASSERT_EQ(stored.size(), 2u);
  EXPECT_EQ(f.dec(stored[0]), keys().pub.n() - u1.value());
  EXPECT_EQ(f.dec(stored[1]), keys().pub.n() - u2.value());
  EXPECT_EQ(f.collector->ephid_ciphertext_count(), 3u);

  const auto rows = f.collector->query_ephids({at, {kOther, kNow / 60 + 1}});
  ASSERT_EQ(rows.size(), 2u);
  for (const auto& r : rows) EXPECT_EQ(r.pair, at);

  // No plaintext rand appears anywhere in the stored state.
  const auto snap = f.collector->snapshot();
  const std::string text(snap.begin(), snap.end());
  EXPECT_EQ(text.find(u1.hex()), std::string::npos);
  EXPECT_EQ(text.find(paillier::to_hex(u1.value())), std::string::npos);
}

TEST(EphIds, SmallModulusRefused) {
  RandomSource rng(1);
  const auto small = paillier::generate_keypair(64, rng, paillier::KeyMode::insecure_test);
  Collector c(small.pub, CollectorConfig{}, RandomSource(1), [] { return kNow; });
  c.issue_token("t", kNow + 10);
  const auto reply = c.upload({"t", {}, {{ephid::Rand128::random(rng), {{kCell, 1}}}}});
  EXPECT_TRUE(std::holds_alternative<wire::Error>(reply));
}

TEST(Prune, RetentionWindow) {
  Fixture f;
  const std::int64_t day = 86400;
  const std::int64_t old_bin = (kNow - 15 * day) / 300;
  const std::int64_t recent_bin = (kNow - 13 * day) / 300;
  f.upload("t1", {f.trajectory({{kCell, old_bin - 30}, {kOther, recent_bin}}, 1)},
           {{ephid::Rand128::random(f.rng), {{kCell, (kNow - 15 * day) / 60}, {kOther, (kNow - 13 * day) / 60}}}});
  const auto first = f.collector->prune(kNow);
  EXPECT_EQ(first.cells, 25u);
  EXPECT_EQ(first.ephid_keys, 1u);
  EXPECT_EQ(f.collector->cell_count(), 25u);
  EXPECT_EQ(f.cell(kOther, recent_bin), 100);
  EXPECT_EQ(f.collector->prune(kNow), (PruneCounts{0, 0}));
}

TEST(Snapshot, RoundTripIsByteIdentical) {
  Fixture f;
  RandomSource rng(4);
  f.upload("t1", {f.trajectory({{kCell, kBin}, {kOther, kBin + 7}}, 1)},
           {{ephid::Rand128::random(rng), {{kCell, kNow / 60}}}});
  f.collector->issue_token("pending", kNow + 99);
  const auto bytes = f.collector->snapshot();
  const auto restored = Collector::restore(bytes, RandomSource(1));
  EXPECT_EQ(restored->snapshot(), bytes);
  EXPECT_EQ(restored->cell_count(), f.collector->cell_count());
  EXPECT_EQ(paillier::decrypt(keys().priv, *restored->cell({kCell, kBin})), 100);
  const auto empty = std::make_unique<Collector>(keys().pub, CollectorConfig{}, RandomSource(1));
  EXPECT_EQ(Collector::restore(empty->snapshot(), RandomSource(1))->snapshot(), empty->snapshot());
}

TEST(Snapshot, CorruptionDiagnosed) {
  Fixture f;
  f.upload("t1", {f.trajectory({{kCell, kBin}}, 1)});
  const auto bytes = f.collector->snapshot();
  auto version = bytes;
  version[5] = 9;
  try {
    Collector::restore(version, RandomSource(1));
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_NE(std::string(e.what()).find("version"), std::string::npos);
  }
  auto magic = bytes;
  magic[0] = 'X';
  EXPECT_THROW(Collector::restore(magic, RandomSource(1)), ParseError);
  auto truncated = bytes;
  truncated.resize(bytes.size() - 3);
  EXPECT_THROW(Collector::restore(truncated, RandomSource(1)), ParseError);
  auto flipped = bytes;
  flipped[bytes.size() - 2] = 'z';
  EXPECT_THROW(Collector::restore(flipped, RandomSource(1)), ParseError);
}

TEST(Concurrency, QueriesDuringUploads) {
  Fixture f;
  std::atomic<bool> done{false};
  std::thread reader([&] {
    while (!done) {
      const auto r = f.collector->query_geolocation({geo::VisitSet({{kCell, kBin}})});
      const auto v = f.dec(r.front());
      ASSERT_EQ(v % 100, 0);
    }
  });
  for (int i = 0; i < 10; ++i) {
    f.upload("t" + std::to_string(i), {f.trajectory({{kCell, kBin}}, 1)});
  }
  done = true;
  reader.join();
  EXPECT_EQ(f.cell(kCell, kBin), 1000);
}

TEST(Handle, DispatchAndRefusal) {
  Fixture f;
  const auto key = f.collector->handle(wire::PublishKey{});
  EXPECT_EQ(*std::get<wire::PublishKey>(key).modulus, keys().pub.n());
  const auto refused = f.collector->handle(wire::DecryptRisk{Ciphertext{1}});
  EXPECT_EQ(std::get<wire::Error>(refused).code, wire::ErrorCode::unsupported);
}

}  // namespace
}  // namespace tracekit::collector
