// Copyright 2026 The tracekit Authors
// SPDX-License-Identifier: Apache-2.0

#include "tracekit/ephid.hpp"

#include <algorithm>
#include <set>
#include <unordered_map>

#include <sodium.h>

#include "tracekit/errors.hpp"

namespace tracekit::ephid {
namespace {

bool is_zero(const std::array<std::uint8_t, kRandBytes>& b) {
  return std::all_of(b.begin(), b.end(), [](std::uint8_t x) { return x == 0; });
}

std::int64_t retention_floor(std::int64_t now) { return now - geo::kRetentionSeconds; }

}  // namespace

Rand128::Rand128(const std::array<std::uint8_t, kRandBytes>& bytes) : bytes_(bytes) {
  if (is_zero(bytes_)) throw DomainError("ephid rand must be nonzero");
}

Rand128 Rand128::random(RandomSource& rng) {
  std::array<std::uint8_t, kRandBytes> b{};
  do {
    rng.fill(b);
  } while (is_zero(b));
  return Rand128(b);
}

Rand128 Rand128::from_hex(std::string_view hex) {
  if (hex.size() != 2 * kRandBytes) throw ParseError("ephid rand: expected 32 hex digits");
  for (char ch : hex) {
    if (!((ch >= '0' && ch <= '9') || (ch >= 'a' && ch <= 'f'))) throw ParseError("ephid rand: invalid hex digit");
  }
  std::array<std::uint8_t, kRandBytes> b{};
  std::size_t used = 0;
  if (sodium_hex2bin(b.data(), b.size(), hex.data(), hex.size(), nullptr, &used, nullptr) != 0 || used != b.size()) {
    throw ParseError("ephid rand: invalid hex");
  }
  if (is_zero(b)) throw ParseError("ephid rand: zero is reserved");
  return Rand128(b);
}

std::string Rand128::hex() const {
  std::array<char, 2 * kRandBytes + 1> out{};
  sodium_bin2hex(out.data(), out.size(), bytes_.data(), bytes_.size());
  return std::string(out.data(), 2 * kRandBytes);
}

mpz_class Rand128::value() const {
  mpz_class v;
  mpz_import(v.get_mpz_t(), bytes_.size(), 1, 1, 1, 0, bytes_.data());
  return v;
}

std::string EphId::encode() const {
  if (cell.precision() != geo::kDefaultPrecision) throw DomainError("ephid cell must have precision 8");
  return cell.str() + rand.hex();
}

EphId EphId::parse(std::string_view wire) {
  if (wire.size() != kEncodedSize) throw ParseError("ephid: expected 40 bytes");
  const auto split = static_cast<std::size_t>(geo::kDefaultPrecision);
  return EphId{GeoCell(wire.substr(0, split)), Rand128::from_hex(wire.substr(split))};
}

Advertiser::Advertiser(std::int64_t rotation_s) : rotation_s_(rotation_s) {
  if (rotation_s_ < kMinuteSeconds || rotation_s_ % kMinuteSeconds != 0) {
    throw ConfigError("rotation period must be a positive whole number of minutes");
  }
}

std::optional<EphId> Advertiser::tick(std::int64_t now, const std::optional<GeoPoint>& location, RandomSource& rng) {
  if (location) last_location_ = *location;
  if (!last_location_) return std::nullopt;

  const std::int64_t slot = geo::bin_of(now, rotation_s_);
  if (!slot_ || *slot_ != slot) {
    Rand128 next = Rand128::random(rng);
    while (slot_ && next == rand_) next = Rand128::random(rng);
    rand_ = next;
    slot_ = slot;
  }
  EphId e{geo::geohash_encode(*last_location_, geo::kDefaultPrecision), rand_};
  const std::int64_t minute = geo::bin_of(now, kMinuteSeconds);
  if (log_.empty() || log_.back().minute < minute) {
    log_.push_back({e.cell, e.rand, minute});
  } else if (log_.back().minute > minute) {
    throw DomainError("advertiser: time went backwards");
  }
  return e;
}

std::size_t Advertiser::prune(std::int64_t now) {
  const std::int64_t floor = retention_floor(now);
  const auto keep = std::find_if(log_.begin(), log_.end(),
                                 [&](const TemporalEphId& e) { return (e.minute + 1) * kMinuteSeconds >= floor; });
  const auto removed = static_cast<std::size_t>(keep - log_.begin());
  log_.erase(log_.begin(), keep);
  return removed;
}

ReceiveResult ReceivedLog::receive(const EphId& e, std::int64_t now, const GeoPoint& here, double phi_m) {
  const GeoPoint center = geo::geohash_decode_box(e.cell).center();
  if (geo::distance_meters(center, here) > phi_m) {
    ++too_far_;
    return ReceiveResult::too_far;
  }
  auto [it, inserted] = records_.try_emplace(e);
  Reception& r = it->second;
  if (inserted) {
    r.id = TemporalEphId{e.cell, e.rand, geo::bin_of(now, kMinuteSeconds)};
    r.first_seen = now;
    r.last_seen = now;
  } else {
    r.first_seen = std::min(r.first_seen, now);
    r.last_seen = std::max(r.last_seen, now);
    r.id.minute = geo::bin_of(r.first_seen, kMinuteSeconds);
  }
  return ReceiveResult::accepted;
}

ReceiveResult ReceivedLog::receive(std::string_view wire, std::int64_t now, const GeoPoint& here, double phi_m) {
  EphId e;
  try {
    e = EphId::parse(wire);
  } catch (const ParseError&) {
    ++malformed_;
    return ReceiveResult::malformed;
  }
  return receive(e, now, here, phi_m);
}

std::vector<Reception> ReceivedLog::entries() const {
  std::vector<Reception> out;
  out.reserve(records_.size());
  for (const auto& [key, r] : records_) out.push_back(r);
  return out;
}

std::vector<TemporalEphId> ReceivedLog::eligible(std::int64_t min_duration_s) const {
  std::vector<TemporalEphId> out;
  for (const auto& [key, r] : records_) {
    if (r.last_seen - r.first_seen >= min_duration_s) out.push_back(r.id);
  }
  return out;
}

std::size_t ReceivedLog::prune(std::int64_t now) {
  const std::int64_t floor = retention_floor(now);
  return std::erase_if(records_, [&](const auto& kv) { return kv.second.last_seen < floor; });
}

std::vector<TemporalEphId> cloak_advertised(const std::vector<TemporalEphId>& real,
                                            const std::vector<geo::VisitSet>& cover, std::int64_t rotation_s,
                                            RandomSource& rng) {
  if (rotation_s < kMinuteSeconds || rotation_s % kMinuteSeconds != 0) {
    throw ConfigError("rotation period must be a positive whole number of minutes");
  }
  std::set<geo::Visit> present;
  std::unordered_map<std::int64_t, Rand128> rand_at;
  for (const auto& e : real) {
    present.insert({e.cell, e.minute});
    rand_at.emplace(e.minute, e.rand);
  }

  std::set<geo::Visit> wanted;
  for (const auto& visits : cover) {
    for (const auto& v : visits) {
      if (!present.contains(v)) wanted.insert(v);
    }
  }

  std::vector<TemporalEphId> out = real;
  out.reserve(real.size() + wanted.size());
  std::unordered_map<std::int64_t, Rand128> fresh;
  const std::int64_t minutes_per_slot = rotation_s / kMinuteSeconds;
  for (const auto& v : wanted) {
    Rand128 rand;
    if (auto it = rand_at.find(v.bin); it != rand_at.end()) {
      rand = it->second;
    } else {
      const std::int64_t slot = geo::bin_of(v.bin, minutes_per_slot);
      auto [slot_it, inserted] = fresh.try_emplace(slot);
      if (inserted) slot_it->second = Rand128::random(rng);
      rand = slot_it->second;
    }
    out.push_back({v.cell, rand, v.bin});
  }
  shuffle(out, rng);
  return out;
}

}  // namespace tracekit::ephid
