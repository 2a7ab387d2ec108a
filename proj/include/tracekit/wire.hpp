// Copyright 2026 The tracekit Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <gmpxx.h>

#include "tracekit/anonymizer.hpp"
#include "tracekit/ephid.hpp"
#include "tracekit/geo.hpp"
#include "tracekit/paillier.hpp"

namespace tracekit::wire {

using Bytes = std::vector<std::uint8_t>;
using paillier::Ciphertext;

enum class Kind : std::uint8_t {
  publish_key = 1,
  patient_upload = 2,
  geo_query = 3,
  geo_query_response = 4,
  eph_query = 5,
  eph_query_response = 6,
  decrypt_risk = 7,
  decrypt_shuffle = 8,
  decrypt_response = 9,
  ack = 10,
  error = 11,
};

inline constexpr int kKindCount = 11;

std::string_view kind_name(Kind k);

enum class ErrorCode : std::uint16_t {
  bad_request = 1,
  malformed_ciphertext = 2,
  token_unknown = 3,
  token_consumed = 4,
  token_expired = 5,
  unsupported = 6,
  internal = 7,
};

// Request when `modulus` is empty, response otherwise.
struct PublishKey {
  std::optional<mpz_class> modulus;
};

// EphIDs sharing one rand, with every (cell, minute) they were uploaded at.
struct EphIdGroup {
  ephid::Rand128 rand;
  std::vector<geo::Visit> sightings;
};

struct PatientUpload {
  std::string token;
  std::vector<anon::FlaggedTrajectory> trajectories;
  std::vector<EphIdGroup> ephids;
};

struct GeoQuery {
  std::vector<geo::VisitSet> trajectories;
};

struct GeoQueryResponse {
  std::vector<Ciphertext> risks;  // aligned with the query
};

struct EphQuery {
  std::vector<geo::Visit> pairs;  // (cell, minute)
};

struct EphRow {
  geo::Visit pair;
  Ciphertext value;
};

struct EphQueryResponse {
  std::vector<EphRow> rows;
};

struct DecryptRisk {
  Ciphertext value;
};

struct DecryptShuffle {
  std::vector<Ciphertext> values;
};

struct DecryptResponse {
  std::vector<mpz_class> plaintexts;
};

struct Ack {
  std::string detail;
};

struct Error {
  ErrorCode code = ErrorCode::internal;
  std::string message;
};

using Message = std::variant<PublishKey, PatientUpload, GeoQuery, GeoQueryResponse, EphQuery, EphQueryResponse,
                             DecryptRisk, DecryptShuffle, DecryptResponse, Ack, Error>;

Kind kind_of(const Message& m);

// Field names of each kind's body, in encoding order.
const std::vector<std::string_view>& field_names(Kind k);

// Big-endian primitive encoder.
class Writer {
 public:
  void u8(std::uint8_t v);
  void u16(std::uint16_t v);
  void u32(std::uint32_t v);
  void str8(std::string_view s);
  void str32(std::string_view s);
  void big(const mpz_class& v);  // u16 length + canonical hex
  void count(std::size_t n);

  void put(const geo::GeoCell& c);
  void put(const geo::Visit& v);
  void put(const Ciphertext& c);
  // The real trajectory's position never leaves the owner.
  void put(const anon::RealIndex&) = delete;

  Bytes take() { return std::move(out_); }
  std::size_t size() const { return out_.size(); }

 private:
  Bytes out_;
};

// Throws ParseError on truncation, bad hex, out-of-range values or trailing
// bytes.
class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> in) : in_(in) {}

  std::uint8_t u8();
  std::uint16_t u16();
  std::uint32_t u32();
  std::string str8();
  std::string str32();
  mpz_class big();
  // A list count no larger than the bytes left / min_item_size.
  std::size_t count(std::size_t min_item_size);
  geo::GeoCell cell();
  geo::Visit visit();
  Ciphertext ciphertext();
  void finish() const;
  bool done() const { return pos_ == in_.size(); }

 private:
  std::span<const std::uint8_t> take(std::size_t n);

  std::span<const std::uint8_t> in_;
  std::size_t pos_ = 0;
};

Bytes serialize(const Message& m);
Message parse(std::span<const std::uint8_t> bytes);

inline constexpr std::size_t kFrameHeader = 4;
inline constexpr std::size_t kMaxFrame = 1ULL << 30;

// 4-byte big-endian length, then the payload.
Bytes frame(const Bytes& payload);
// Length of the payload announced by a frame header.
std::size_t frame_length(std::span<const std::uint8_t, kFrameHeader> header);

Error error_from(const std::exception& e);

}  // namespace tracekit::wire
