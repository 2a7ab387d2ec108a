// Copyright 2026 The tracekit Authors
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <string>

#include <gtest/gtest.h>

#include "tracekit/errors.hpp"
#include "tracekit/wire.hpp"

namespace tracekit::wire {
namespace {

template <class T>
concept Encodable = requires(Writer& w, const T& v) { w.put(v); };

static_assert(Encodable<geo::Visit>);
static_assert(Encodable<Ciphertext>);
static_assert(!Encodable<anon::RealIndex>, "the real index must never be serializable");

class Fuzzer {
 public:
  explicit Fuzzer(std::uint64_t seed) : rng_(seed) {}

  std::size_t small(std::size_t max) { return static_cast<std::size_t>(rng_.uniform(max + 1)); }

  mpz_class big() { return rng_.bits(static_cast<unsigned>(1 + rng_.uniform(600))); }
  Ciphertext ciphertext() { return {big()}; }

  geo::Visit visit() {
    static constexpr std::string_view kAlphabet = "0123456789bcdefghjkmnpqrstuvwxyz";
    std::string code(1 + small(11), '0');
    for (auto& ch : code) ch = kAlphabet[rng_.uniform(kAlphabet.size())];
    return {geo::GeoCell(code), static_cast<std::int64_t>(rng_.uniform(1ULL << 32))};
  }

  geo::VisitSet visits() {
    std::vector<geo::Visit> v;
    for (std::size_t i = small(6); i > 0; --i) v.push_back(visit());
    return geo::VisitSet(std::move(v));
  }

  std::string text(std::size_t max) {
    std::string s(small(max), '\0');
    for (auto& ch : s) ch = static_cast<char>(rng_.uniform(256));
    return s;
  }

  Message message(Kind kind) {
    switch (kind) {
      case Kind::publish_key:
        return small(1) ? PublishKey{big()} : PublishKey{};
      case Kind::patient_upload: {
        PatientUpload m{text(40), {}, {}};
        for (std::size_t i = small(4); i > 0; --i) m.trajectories.push_back({visits(), ciphertext()});
        for (std::size_t i = small(4); i > 0; --i) {
          EphIdGroup g{ephid::Rand128::random(rng_), {}};
          for (std::size_t j = small(4); j > 0; --j) g.sightings.push_back(visit());
          m.ephids.push_back(std::move(g));
        }
        return m;
      }
      case Kind::geo_query: {
        GeoQuery m;
        for (std::size_t i = small(4); i > 0; --i) m.trajectories.push_back(visits());
        return m;
      }
      case Kind::geo_query_response: {
        GeoQueryResponse m;
        for (std::size_t i = small(4); i > 0; --i) m.risks.push_back(ciphertext());
        return m;
      }
      case Kind::eph_query: {
        EphQuery m;
        for (std::size_t i = small(5); i > 0; --i) m.pairs.push_back(visit());
        return m;
      }
      case Kind::eph_query_response: {
        EphQueryResponse m;
        for (std::size_t i = small(4); i > 0; --i) m.rows.push_back({visit(), ciphertext()});
        return m;
      }
      case Kind::decrypt_risk:
        return DecryptRisk{ciphertext()};
      case Kind::decrypt_shuffle: {
        DecryptShuffle m;
        for (std::size_t i = small(4); i > 0; --i) m.values.push_back(ciphertext());
        return m;
      }
      case Kind::decrypt_response: {
        DecryptResponse m;
        for (std::size_t i = small(4); i > 0; --i) m.plaintexts.push_back(big());
        return m;
      }
      case Kind::ack:
        return Ack{text(30)};
      case Kind::error:
        return Error{static_cast<ErrorCode>(1 + small(6)), text(30)};
    }
    return Ack{};
  }

 private:
  RandomSource rng_;
};

TEST(Wire, FuzzedRoundTripIsBitExact) {
  Fuzzer fuzz(1);
  for (int i = 0; i < 10000; ++i) {
    const auto kind = static_cast<Kind>(1 + i % kKindCount);
    const Message m = fuzz.message(kind);
    ASSERT_EQ(kind_of(m), kind);
    const Bytes bytes = serialize(m);
    const Message back = parse(bytes);
    ASSERT_EQ(kind_of(back), kind);
    ASSERT_EQ(serialize(back), bytes) << kind_name(kind);
  }
}

TEST(Wire, EmptyListsRoundTrip) {
  for (const Message& m : {Message{PatientUpload{"t", {}, {}}}, Message{GeoQuery{}}, Message{GeoQueryResponse{}},
                           Message{EphQuery{}}, Message{EphQueryResponse{}}, Message{DecryptShuffle{}},
                           Message{DecryptResponse{}}, Message{Ack{}}}) {
    EXPECT_EQ(serialize(parse(serialize(m))), serialize(m));
  }
}

TEST(Wire, EveryTruncationFailsCleanly) {
  Fuzzer fuzz(2);
  for (int i = 0; i < 200; ++i) {
    const Bytes bytes = serialize(fuzz.message(static_cast<Kind>(1 + i % kKindCount)));
    for (std::size_t cut = 0; cut < bytes.size(); ++cut) {
      EXPECT_THROW(parse(std::span(bytes).first(cut)), ParseError) << i << " cut " << cut;
    }
  }
}

TEST(Wire, RejectsTrailingBytesUnknownTagAndBadHex) {
  Bytes bytes = serialize(DecryptRisk{Ciphertext{255}});
  Bytes trailing = bytes;
  trailing.push_back(0);
  EXPECT_THROW(parse(trailing), ParseError);

  Bytes unknown = bytes;
  unknown[0] = 0;
  EXPECT_THROW(parse(unknown), ParseError);
  unknown[0] = 12;
  EXPECT_THROW(parse(unknown), ParseError);

  Bytes bad_hex = bytes;
  bad_hex.back() = 'g';
  EXPECT_THROW(parse(bad_hex), ParseError);
  bad_hex.back() = 'F';
  EXPECT_THROW(parse(bad_hex), ParseError);
}

TEST(Wire, RejectsUnsortedVisitSets) {
  Writer w;
  w.u8(static_cast<std::uint8_t>(Kind::geo_query));
  w.count(1);
  w.count(2);
  w.put(geo::Visit{geo::GeoCell("s1"), 5});
  w.put(geo::Visit{geo::GeoCell("s0"), 5});
  EXPECT_THROW(parse(w.take()), ParseError);
}

TEST(Wire, HugeCountRejectedWithoutAllocation) {
  Writer w;
  w.u8(static_cast<std::uint8_t>(Kind::eph_query));
  w.u32(0xffffffffu);
  EXPECT_THROW(parse(w.take()), ParseError);
}

TEST(Wire, RangeChecksOnEncode) {
  EXPECT_THROW(serialize(EphQuery{{geo::Visit{geo::GeoCell("s0"), -1}}}), DomainError);
  EXPECT_THROW(serialize(EphQuery{{geo::Visit{geo::GeoCell("s0"), 1LL << 33}}}), DomainError);
  EXPECT_THROW(serialize(PatientUpload{std::string(256, 'x'), {}, {}}), DomainError);
}

TEST(Wire, Frames) {
  const Bytes payload = serialize(Ack{"ok"});
  const Bytes f = frame(payload);
  ASSERT_EQ(f.size(), payload.size() + 4);
  EXPECT_EQ(frame_length(std::span(f).first<4>()), payload.size());
  EXPECT_EQ(f[0], 0);
  EXPECT_EQ(f[3], payload.size());
}

TEST(WireSchema, NoPrivateKeyOrRealityFields) {
  for (int k = 1; k <= kKindCount; ++k) {
    for (std::string_view field : field_names(static_cast<Kind>(k))) {
      for (std::string_view banned : {"lambda", "mu", "prime", "private", "real_index", "is_real", "epsilon"}) {
        EXPECT_EQ(field.find(banned), std::string_view::npos) << field;
      }
    }
  }
}

TEST(WireSchema, UploadFlagIsCiphertextOnly) {
  // The flag travels as a ciphertext; a reserved zero or one never appears.
  const Message m = PatientUpload{"tok", {{geo::VisitSet{}, Ciphertext{mpz_class("123456789abcdef", 16)}}}, {}};
  const Bytes bytes = serialize(m);
  const auto& upload = std::get<PatientUpload>(parse(bytes));
  EXPECT_EQ(upload.trajectories.front().flag.value, mpz_class("123456789abcdef", 16));
  const auto& fields = field_names(Kind::patient_upload);
  EXPECT_EQ(std::count(fields.begin(), fields.end(), "trajectories.flag"), 1);
}

TEST(Wire, ErrorMapping) {
  EXPECT_EQ(error_from(MalformedCiphertext("x")).code, ErrorCode::malformed_ciphertext);
  EXPECT_EQ(error_from(ParseError("x")).code, ErrorCode::bad_request);
  EXPECT_EQ(error_from(std::runtime_error("secret detail")).message, "internal error");
}

}  // namespace
}  // namespace tracekit::wire
