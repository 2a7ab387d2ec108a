// Copyright 2026 The tracekit Authors
// SPDX-License-Identifier: Apache-2.0

#include "tracekit/wire.hpp"

#include <algorithm>
#include <array>
#include <limits>

#include "tracekit/errors.hpp"

namespace tracekit::wire {
namespace {

constexpr std::size_t kVisitMinSize = 1 + 1 + 4;
constexpr std::size_t kBigMinSize = 2 + 1;

void encode_body(Writer& w, const PublishKey& m) {
  w.u8(m.modulus ? 1 : 0);
  if (m.modulus) w.big(*m.modulus);
}

void encode_body(Writer& w, const PatientUpload& m) {
  w.str8(m.token);
  w.count(m.trajectories.size());
  for (const auto& t : m.trajectories) {
    w.count(t.visits.size());
    for (const auto& v : t.visits) w.put(v);
    w.put(t.flag);
  }
  w.count(m.ephids.size());
  for (const auto& g : m.ephids) {
    const std::string hex = g.rand.hex();
    for (char ch : hex) w.u8(static_cast<std::uint8_t>(ch));
    w.count(g.sightings.size());
    for (const auto& v : g.sightings) w.put(v);
  }
}

void encode_body(Writer& w, const GeoQuery& m) {
  w.count(m.trajectories.size());
  for (const auto& t : m.trajectories) {
    w.count(t.size());
    for (const auto& v : t) w.put(v);
  }
}

void encode_body(Writer& w, const GeoQueryResponse& m) {
  w.count(m.risks.size());
  for (const auto& c : m.risks) w.put(c);
}

void encode_body(Writer& w, const EphQuery& m) {
  w.count(m.pairs.size());
  for (const auto& v : m.pairs) w.put(v);
}

void encode_body(Writer& w, const EphQueryResponse& m) {
  w.count(m.rows.size());
  for (const auto& r : m.rows) {
    w.put(r.pair);
    w.put(r.value);
  }
}

void encode_body(Writer& w, const DecryptRisk& m) { w.put(m.value); }

void encode_body(Writer& w, const DecryptShuffle& m) {
  w.count(m.values.size());
  for (const auto& c : m.values) w.put(c);
}

void encode_body(Writer& w, const DecryptResponse& m) {
  w.count(m.plaintexts.size());
  for (const auto& p : m.plaintexts) w.big(p);
}

void encode_body(Writer& w, const Ack& m) { w.str32(m.detail); }

void encode_body(Writer& w, const Error& m) {
  w.u16(static_cast<std::uint16_t>(m.code));
  w.str32(m.message);
}

geo::VisitSet read_visits(Reader& r) {
  const std::size_t n = r.count(kVisitMinSize);
  std::vector<geo::Visit> visits;
  visits.reserve(n);
  for (std::size_t i = 0; i < n; ++i) visits.push_back(r.visit());
  geo::VisitSet set(visits);
  if (set.size() != n) throw ParseError("wire: visit set is not strictly ordered");
  if (!std::equal(set.begin(), set.end(), visits.begin())) throw ParseError("wire: visit set is not strictly ordered");
  return set;
}

Message decode_body(Kind kind, Reader& r) {
  switch (kind) {
    case Kind::publish_key: {
      PublishKey m;
      const auto present = r.u8();
      if (present > 1) throw ParseError("wire: bad presence byte");
      if (present) m.modulus = r.big();
      return m;
    }
    case Kind::patient_upload: {
      PatientUpload m;
      m.token = r.str8();
      const std::size_t nt = r.count(4 + kBigMinSize);
      m.trajectories.reserve(nt);
      for (std::size_t i = 0; i < nt; ++i) {
        anon::FlaggedTrajectory t;
        t.visits = read_visits(r);
        t.flag = r.ciphertext();
        m.trajectories.push_back(std::move(t));
      }
      const std::size_t ng = r.count(2 * ephid::kRandBytes + 4);
      m.ephids.reserve(ng);
      for (std::size_t i = 0; i < ng; ++i) {
        std::string hex(2 * ephid::kRandBytes, '\0');
        for (auto& ch : hex) ch = static_cast<char>(r.u8());
        EphIdGroup g{ephid::Rand128::from_hex(hex), {}};
        const std::size_t ns = r.count(kVisitMinSize);
        g.sightings.reserve(ns);
        for (std::size_t j = 0; j < ns; ++j) g.sightings.push_back(r.visit());
        m.ephids.push_back(std::move(g));
      }
      return m;
    }
    case Kind::geo_query: {
      GeoQuery m;
      const std::size_t n = r.count(4);
      m.trajectories.reserve(n);
      for (std::size_t i = 0; i < n; ++i) m.trajectories.push_back(read_visits(r));
      return m;
    }
    case Kind::geo_query_response: {
      GeoQueryResponse m;
      const std::size_t n = r.count(kBigMinSize);
      m.risks.reserve(n);
      for (std::size_t i = 0; i < n; ++i) m.risks.push_back(r.ciphertext());
      return m;
    }
    case Kind::eph_query: {
      EphQuery m;
      const std::size_t n = r.count(kVisitMinSize);
      m.pairs.reserve(n);
      for (std::size_t i = 0; i < n; ++i) m.pairs.push_back(r.visit());
      return m;
    }
    case Kind::eph_query_response: {
      EphQueryResponse m;
      const std::size_t n = r.count(kVisitMinSize + kBigMinSize);
      m.rows.reserve(n);
      for (std::size_t i = 0; i < n; ++i) {
        EphRow row;
        row.pair = r.visit();
        row.value = r.ciphertext();
        m.rows.push_back(std::move(row));
      }
      return m;
    }
    case Kind::decrypt_risk:
      return DecryptRisk{r.ciphertext()};
    case Kind::decrypt_shuffle: {
      DecryptShuffle m;
      const std::size_t n = r.count(kBigMinSize);
      m.values.reserve(n);
      for (std::size_t i = 0; i < n; ++i) m.values.push_back(r.ciphertext());
      return m;
    }
    case Kind::decrypt_response: {
      DecryptResponse m;
      const std::size_t n = r.count(kBigMinSize);
      m.plaintexts.reserve(n);
      for (std::size_t i = 0; i < n; ++i) m.plaintexts.push_back(r.big());
      return m;
    }
    case Kind::ack:
      return Ack{r.str32()};
    case Kind::error: {
      Error m;
      const auto code = r.u16();
      if (code < 1 || code > static_cast<std::uint16_t>(ErrorCode::internal)) throw ParseError("wire: unknown error code");
      m.code = static_cast<ErrorCode>(code);
      m.message = r.str32();
      return m;
    }
  }
  throw ParseError("wire: unknown message kind");
}

}  // namespace

std::string_view kind_name(Kind k) {
  switch (k) {
    case Kind::publish_key: return "PublishKey";
    case Kind::patient_upload: return "PatientUpload";
    case Kind::geo_query: return "GeoQuery";
    case Kind::geo_query_response: return "GeoQueryResponse";
    case Kind::eph_query: return "EphQuery";
    case Kind::eph_query_response: return "EphQueryResponse";
    case Kind::decrypt_risk: return "DecryptRisk";
    case Kind::decrypt_shuffle: return "DecryptShuffle";
    case Kind::decrypt_response: return "DecryptResponse";
    case Kind::ack: return "Ack";
    case Kind::error: return "Error";
  }
  return "Unknown";
}

Kind kind_of(const Message& m) { return static_cast<Kind>(m.index() + 1); }

const std::vector<std::string_view>& field_names(Kind k) {
  static const std::array<std::vector<std::string_view>, kKindCount> kFields = {{
      {"modulus"},
      {"token", "trajectories", "trajectories.visits", "trajectories.flag", "ephids", "ephids.rand",
       "ephids.sightings"},
      {"trajectories", "trajectories.visits"},
      {"risks"},
      {"pairs"},
      {"rows", "rows.pair", "rows.value"},
      {"value"},
      {"values"},
      {"plaintexts"},
      {"detail"},
      {"code", "message"},
  }};
  const auto i = static_cast<std::size_t>(k);
  if (i < 1 || i > kFields.size()) throw DomainError("wire: unknown message kind");
  return kFields[i - 1];
}

void Writer::u8(std::uint8_t v) { out_.push_back(v); }

void Writer::u16(std::uint16_t v) {
  out_.push_back(static_cast<std::uint8_t>(v >> 8));
  out_.push_back(static_cast<std::uint8_t>(v));
}

void Writer::u32(std::uint32_t v) {
  for (int shift = 24; shift >= 0; shift -= 8) out_.push_back(static_cast<std::uint8_t>(v >> shift));
}

void Writer::str8(std::string_view s) {
  if (s.size() > std::numeric_limits<std::uint8_t>::max()) throw DomainError("wire: string longer than 255 bytes");
  u8(static_cast<std::uint8_t>(s.size()));
  out_.insert(out_.end(), s.begin(), s.end());
}

void Writer::str32(std::string_view s) {
  count(s.size());
  out_.insert(out_.end(), s.begin(), s.end());
}

void Writer::big(const mpz_class& v) {
  const std::string hex = paillier::to_hex(v);
  if (hex.size() > std::numeric_limits<std::uint16_t>::max()) throw DomainError("wire: integer too large");
  u16(static_cast<std::uint16_t>(hex.size()));
  out_.insert(out_.end(), hex.begin(), hex.end());
}

void Writer::count(std::size_t n) {
  if (n > std::numeric_limits<std::uint32_t>::max()) throw DomainError("wire: list too long");
  u32(static_cast<std::uint32_t>(n));
}

void Writer::put(const geo::GeoCell& c) { str8(c.code()); }

void Writer::put(const geo::Visit& v) {
  if (v.bin < 0 || v.bin > std::numeric_limits<std::uint32_t>::max()) throw DomainError("wire: bin out of range");
  put(v.cell);
  u32(static_cast<std::uint32_t>(v.bin));
}

void Writer::put(const Ciphertext& c) { big(c.value); }

std::span<const std::uint8_t> Reader::take(std::size_t n) {
  if (in_.size() - pos_ < n) throw ParseError("wire: truncated input");
  auto s = in_.subspan(pos_, n);
  pos_ += n;
  return s;
}

std::uint8_t Reader::u8() { return take(1)[0]; }

std::uint16_t Reader::u16() {
  const auto b = take(2);
  return static_cast<std::uint16_t>((b[0] << 8) | b[1]);
}

std::uint32_t Reader::u32() {
  const auto b = take(4);
  return (std::uint32_t{b[0]} << 24) | (std::uint32_t{b[1]} << 16) | (std::uint32_t{b[2]} << 8) | b[3];
}

std::string Reader::str8() {
  const auto b = take(u8());
  return std::string(b.begin(), b.end());
}

std::string Reader::str32() {
  const auto b = take(count(1));
  return std::string(b.begin(), b.end());
}

mpz_class Reader::big() {
  const auto b = take(u16());
  return paillier::from_hex(std::string_view(reinterpret_cast<const char*>(b.data()), b.size()));
}

std::size_t Reader::count(std::size_t min_item_size) {
  const std::size_t n = u32();
  if (min_item_size > 0 && n > (in_.size() - pos_) / min_item_size) throw ParseError("wire: list count exceeds input");
  return n;
}

geo::GeoCell Reader::cell() {
  const auto s = str8();
  return geo::GeoCell(s);
}

geo::Visit Reader::visit() {
  geo::Visit v;
  v.cell = cell();
  v.bin = u32();
  return v;
}

Ciphertext Reader::ciphertext() { return Ciphertext{big()}; }

void Reader::finish() const {
  if (pos_ != in_.size()) throw ParseError("wire: trailing bytes");
}

Bytes serialize(const Message& m) {
  Writer w;
  w.u8(static_cast<std::uint8_t>(kind_of(m)));
  std::visit([&](const auto& body) { encode_body(w, body); }, m);
  return w.take();
}

Message parse(std::span<const std::uint8_t> bytes) {
  Reader r(bytes);
  const auto tag = r.u8();
  if (tag < 1 || tag > kKindCount) throw ParseError("wire: unknown message kind " + std::to_string(tag));
  Message m = decode_body(static_cast<Kind>(tag), r);
  r.finish();
  return m;
}

Bytes frame(const Bytes& payload) {
  if (payload.size() > kMaxFrame) throw DomainError("wire: frame too large");
  const auto n = static_cast<std::uint32_t>(payload.size());
  Bytes out(kFrameHeader + payload.size());
  for (std::size_t i = 0; i < kFrameHeader; ++i) out[i] = static_cast<std::uint8_t>(n >> (8 * (kFrameHeader - 1 - i)));
  std::copy(payload.begin(), payload.end(), out.begin() + kFrameHeader);
  return out;
}

std::size_t frame_length(std::span<const std::uint8_t, kFrameHeader> header) {
  Reader r(header);
  const std::size_t n = r.u32();
  if (n > kMaxFrame) throw ParseError("wire: frame too large");
  return n;
}

Error error_from(const std::exception& e) {
  if (dynamic_cast<const MalformedCiphertext*>(&e)) return {ErrorCode::malformed_ciphertext, e.what()};
  if (dynamic_cast<const ParseError*>(&e) || dynamic_cast<const DomainError*>(&e)) {
    return {ErrorCode::bad_request, e.what()};
  }
  return {ErrorCode::internal, "internal error"};
}

}  // namespace tracekit::wire
