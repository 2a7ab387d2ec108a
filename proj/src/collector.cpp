// Copyright 2026 The tracekit Authors
// SPDX-License-Identifier: Apache-2.0

#include "tracekit/collector.hpp"

#include <algorithm>
#include <chrono>
#include <fstream>
#include <iterator>

#include <sodium.h>

#include "tracekit/errors.hpp"

namespace tracekit::collector {
namespace {

enum class RecordKind : std::uint8_t {
  meta = 1,
  cell = 2,
  ephid = 3,
  consumed_token = 4,
  issued_token = 5,
};

std::string blake2b_hex(std::string_view context, std::span<const std::uint8_t> data) {
  std::array<std::uint8_t, crypto_generichash_BYTES> digest{};
  crypto_generichash_state st;
  crypto_generichash_init(&st, nullptr, 0, digest.size());
  crypto_generichash_update(&st, reinterpret_cast<const unsigned char*>(context.data()), context.size());
  crypto_generichash_update(&st, data.data(), data.size());
  crypto_generichash_final(&st, digest.data(), digest.size());
  std::array<char, 2 * crypto_generichash_BYTES + 1> hex{};
  sodium_bin2hex(hex.data(), hex.size(), digest.data(), digest.size());
  return std::string(hex.data(), 2 * digest.size());
}

std::int64_t retention_floor(std::int64_t now) { return now - geo::kRetentionSeconds; }

wire::Bytes visit_key(const Visit& v) {
  wire::Writer w;
  w.put(v);
  return w.take();
}

Visit parse_visit_key(std::span<const std::uint8_t> key) {
  wire::Reader r(key);
  Visit v = r.visit();
  r.finish();
  return v;
}

void put_record(wire::Writer& w, RecordKind kind, std::string_view key, std::string_view value) {
  w.u8(static_cast<std::uint8_t>(kind));
  w.str32(key);
  w.str32(value);
}

std::string as_string(const wire::Bytes& b) { return std::string(b.begin(), b.end()); }

std::span<const std::uint8_t> as_bytes(const std::string& s) {
  return {reinterpret_cast<const std::uint8_t*>(s.data()), s.size()};
}

wire::Message token_error(TokenStatus status) {
  switch (status) {
    case TokenStatus::unknown: return wire::Error{wire::ErrorCode::token_unknown, "upload token unknown"};
    case TokenStatus::consumed: return wire::Error{wire::ErrorCode::token_consumed, "upload token consumed"};
    case TokenStatus::expired: return wire::Error{wire::ErrorCode::token_expired, "upload token expired"};
    default: return wire::Error{wire::ErrorCode::internal, "unexpected token state"};
  }
}

}  // namespace

DecayProfile DecayProfile::linear(int delta_bins, std::uint32_t quantum) {
  if (delta_bins < 0) throw ConfigError("decay: delta_bins must be >= 0");
  if (quantum < 1) throw ConfigError("decay: quantum must be >= 1");
  std::vector<std::uint32_t> w;
  w.reserve(static_cast<std::size_t>(delta_bins) + 1);
  const std::int64_t q = quantum;
  const std::int64_t span = std::max(delta_bins, 1);
  for (int d = 0; d <= delta_bins; ++d) {
    // q * (1 - d / span) rounded half up, in integers.
    std::int64_t v = std::max<std::int64_t>(1, (2 * q * (span - d) + span) / (2 * span));
    if (!w.empty() && v >= static_cast<std::int64_t>(w.back())) v = static_cast<std::int64_t>(w.back()) - 1;
    if (v < 1) throw ConfigError("decay: quantum too small for a strictly decreasing profile");
    w.push_back(static_cast<std::uint32_t>(v));
  }
  return DecayProfile(std::move(w));
}

DecayProfile::DecayProfile(std::vector<std::uint32_t> weights) : weights_(std::move(weights)) {
  if (weights_.empty()) throw ConfigError("decay: at least one weight required");
  for (std::size_t i = 0; i < weights_.size(); ++i) {
    if (weights_[i] < 1) throw ConfigError("decay: weights must be >= 1");
    if (i > 0 && weights_[i] >= weights_[i - 1]) throw ConfigError("decay: weights must strictly decrease");
  }
}

std::string DecayProfile::fingerprint() const {
  wire::Writer w;
  w.count(weights_.size());
  for (auto v : weights_) w.u32(v);
  const wire::Bytes b = w.take();
  return blake2b_hex("tracekit.decay.v1", b);
}

void TokenRegistry::issue(const std::string& code, std::int64_t expiry) {
  if (code.empty() || code.size() > 255) throw DomainError("token: code must be 1..255 bytes");
  if (consumed_.contains(code)) throw DomainError("token: code already consumed");
  issued_[code] = expiry;
}

TokenStatus TokenRegistry::check(const std::string& code, std::int64_t now, const std::string& digest) const {
  if (auto it = consumed_.find(code); it != consumed_.end()) {
    return it->second == digest ? TokenStatus::replay : TokenStatus::consumed;
  }
  const auto it = issued_.find(code);
  if (it == issued_.end()) return TokenStatus::unknown;
  if (now >= it->second) return TokenStatus::expired;
  return TokenStatus::permit;
}

void TokenRegistry::restore_consumed(const std::string& code, const std::string& digest) {
  issued_.erase(code);
  consumed_[code] = digest;
}

TokenStatus TokenRegistry::consume(const std::string& code, std::int64_t now, const std::string& digest) {
  const TokenStatus status = check(code, now, digest);
  if (status == TokenStatus::permit) {
    issued_.erase(code);
    consumed_[code] = digest;
  }
  return status;
}

std::int64_t system_clock_seconds() {
  return std::chrono::duration_cast<std::chrono::seconds>(std::chrono::system_clock::now().time_since_epoch()).count();
}

Collector::Collector(paillier::PublicKey pk, CollectorConfig config, RandomSource rng, Clock clock)
    : pk_(std::move(pk)), config_(std::move(config)), clock_(std::move(clock)), rng_(std::move(rng)) {
  if (config_.geo_bin_s <= 0 || config_.ephid_bin_s <= 0) throw ConfigError("collector: bin widths must be positive");
}

void Collector::issue_token(const std::string& code, std::int64_t expiry) {
  std::unique_lock lock(state_mutex_);
  tokens_.issue(code, expiry);
}

wire::Message Collector::handle(const wire::Message& request) {
  try {
    if (const auto* m = std::get_if<wire::PublishKey>(&request)) {
      if (m->modulus) return wire::Error{wire::ErrorCode::bad_request, "PublishKey request must be empty"};
      return wire::PublishKey{pk_.n()};
    }
    if (const auto* m = std::get_if<wire::PatientUpload>(&request)) return upload(*m);
    if (const auto* m = std::get_if<wire::GeoQuery>(&request)) {
      return wire::GeoQueryResponse{query_geolocation(m->trajectories)};
    }
    if (const auto* m = std::get_if<wire::EphQuery>(&request)) return wire::EphQueryResponse{query_ephids(m->pairs)};
    return wire::Error{wire::ErrorCode::unsupported,
                       "collector does not serve " + std::string(wire::kind_name(wire::kind_of(request)))};
  } catch (const std::exception& e) {
    return wire::error_from(e);
  }
}

Ciphertext Collector::fresh_encryption(const mpz_class& m) {
  std::lock_guard lock(rng_mutex_);
  return paillier::encrypt(pk_, m, rng_);
}

std::map<Visit, Ciphertext> Collector::stage_trajectories(
    const std::vector<anon::FlaggedTrajectory>& trajectories) const {
  const int delta = config_.decay.delta_bins();
  std::map<Visit, Ciphertext> staged;
  std::vector<Ciphertext> weighted(static_cast<std::size_t>(delta) + 1);
  for (const auto& t : trajectories) {
    for (int d = 0; d <= delta; ++d) weighted[d] = paillier::scale(pk_, t.flag, config_.decay.weight(d));
    for (const auto& v : t.visits) {
      for (int d = 0; d <= delta; ++d) {
        const Visit key{v.cell, v.bin + d};
        auto [it, inserted] = staged.try_emplace(key, weighted[d]);
        if (!inserted) it->second = paillier::add(pk_, it->second, weighted[d]);
      }
    }
  }
  return staged;
}

std::map<Visit, std::vector<Ciphertext>> Collector::stage_ephids(const std::vector<wire::EphIdGroup>& groups) {
  std::map<Visit, std::vector<Ciphertext>> staged;
  if (groups.empty()) return staged;
  if (pk_.bits() <= 8 * ephid::kRandBytes) throw ConfigError("collector: modulus too small for 128-bit EphIDs");
  for (const auto& g : groups) {
    const mpz_class negated = paillier::negate(pk_, g.rand.value());
    for (const auto& v : g.sightings) staged[v].push_back(fresh_encryption(negated));
  }
  return staged;
}

wire::Message Collector::upload(const wire::PatientUpload& request) {
  try {
    return integrate(request);
  } catch (const std::exception& e) {
    return wire::error_from(e);
  }
}

wire::Message Collector::integrate(const wire::PatientUpload& request) {
  const std::string digest = blake2b_hex("tracekit.upload.v1", wire::serialize(request));
  const std::int64_t now = clock_();
  {
    std::shared_lock lock(state_mutex_);
    const TokenStatus status = tokens_.check(request.token, now, digest);
    if (status == TokenStatus::replay) return wire::Ack{"duplicate upload ignored"};
    if (status != TokenStatus::permit) return token_error(status);
  }

  for (const auto& t : request.trajectories) paillier::validate(pk_, t.flag);
  auto cells = stage_trajectories(request.trajectories);
  auto ephids = stage_ephids(request.ephids);

  std::unique_lock lock(state_mutex_);
  const TokenStatus status = tokens_.consume(request.token, now, digest);
  if (status == TokenStatus::replay) return wire::Ack{"duplicate upload ignored"};
  if (status != TokenStatus::permit) return token_error(status);
  for (auto& [key, value] : cells) {
    auto [it, inserted] = matrix_.try_emplace(key, value);
    if (!inserted) it->second = paillier::add(pk_, it->second, value);
  }
  std::size_t ephid_count = 0;
  for (auto& [key, values] : ephids) {
    auto& slot = ephids_[key];
    ephid_count += values.size();
    std::move(values.begin(), values.end(), std::back_inserter(slot));
  }
  return wire::Ack{"integrated " + std::to_string(request.trajectories.size()) + " trajectories, " +
                   std::to_string(ephid_count) + " ephids"};
}

std::vector<Ciphertext> Collector::query_geolocation(const std::vector<geo::VisitSet>& trajectories) {
  std::vector<std::optional<Ciphertext>> sums(trajectories.size());
  {
    std::shared_lock lock(state_mutex_);
    for (std::size_t i = 0; i < trajectories.size(); ++i) {
      for (const auto& v : trajectories[i]) {
        const auto it = matrix_.find(v);
        if (it == matrix_.end()) continue;
        sums[i] = sums[i] ? paillier::add(pk_, *sums[i], it->second) : it->second;
      }
    }
  }
  std::vector<Ciphertext> out;
  out.reserve(sums.size());
  for (auto& s : sums) out.push_back(s ? std::move(*s) : fresh_encryption(0));
  return out;
}

std::vector<wire::EphRow> Collector::query_ephids(const std::vector<Visit>& pairs) const {
  std::shared_lock lock(state_mutex_);
  std::vector<wire::EphRow> rows;
  for (const auto& p : pairs) {
    const auto it = ephids_.find(p);
    if (it == ephids_.end()) continue;
    for (const auto& c : it->second) rows.push_back({p, c});
  }
  return rows;
}

PruneCounts Collector::prune(std::int64_t now) {
  const std::int64_t floor = retention_floor(now);
  std::unique_lock lock(state_mutex_);
  PruneCounts counts;
  counts.cells = std::erase_if(matrix_, [&](const auto& kv) { return (kv.first.bin + 1) * config_.geo_bin_s < floor; });
  counts.ephid_keys =
      std::erase_if(ephids_, [&](const auto& kv) { return (kv.first.bin + 1) * config_.ephid_bin_s < floor; });
  return counts;
}

std::optional<Ciphertext> Collector::cell(const Visit& key) const {
  std::shared_lock lock(state_mutex_);
  const auto it = matrix_.find(key);
  if (it == matrix_.end()) return std::nullopt;
  return it->second;
}

std::vector<Ciphertext> Collector::ephids_at(const Visit& key) const {
  std::shared_lock lock(state_mutex_);
  const auto it = ephids_.find(key);
  return it == ephids_.end() ? std::vector<Ciphertext>{} : it->second;
}

std::size_t Collector::cell_count() const {
  std::shared_lock lock(state_mutex_);
  return matrix_.size();
}

std::size_t Collector::ephid_key_count() const {
  std::shared_lock lock(state_mutex_);
  return ephids_.size();
}

std::size_t Collector::ephid_ciphertext_count() const {
  std::shared_lock lock(state_mutex_);
  std::size_t n = 0;
  for (const auto& [key, values] : ephids_) n += values.size();
  return n;
}

wire::Bytes Collector::snapshot() const {
  std::shared_lock lock(state_mutex_);
  wire::Writer w;
  for (char ch : kSnapshotMagic) w.u8(static_cast<std::uint8_t>(ch));
  w.u16(kSnapshotVersion);

  std::string weights;
  for (auto v : config_.decay.weights()) weights += (weights.empty() ? "" : ",") + std::to_string(v);
  put_record(w, RecordKind::meta, "modulus", paillier::to_hex(pk_.n()));
  put_record(w, RecordKind::meta, "geo_bin_s", std::to_string(config_.geo_bin_s));
  put_record(w, RecordKind::meta, "ephid_bin_s", std::to_string(config_.ephid_bin_s));
  put_record(w, RecordKind::meta, "decay_weights", weights);
  put_record(w, RecordKind::meta, "decay_fingerprint", config_.decay.fingerprint());

  for (const auto& [key, value] : matrix_) {
    put_record(w, RecordKind::cell, as_string(visit_key(key)), paillier::to_hex(value.value));
  }
  for (const auto& [key, values] : ephids_) {
    const std::string k = as_string(visit_key(key));
    for (const auto& c : values) put_record(w, RecordKind::ephid, k, paillier::to_hex(c.value));
  }
  for (const auto& [code, digest] : tokens_.consumed()) put_record(w, RecordKind::consumed_token, code, digest);
  for (const auto& [code, expiry] : tokens_.issued()) {
    put_record(w, RecordKind::issued_token, code, std::to_string(expiry));
  }
  return w.take();
}

void Collector::save(const std::filesystem::path& path) const {
  const wire::Bytes bytes = snapshot();
  const auto tmp = std::filesystem::path(path).concat(".tmp");
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw ConfigError("snapshot: cannot write " + tmp.string());
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw ConfigError("snapshot: write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

std::unique_ptr<Collector> Collector::restore(std::span<const std::uint8_t> snapshot, RandomSource rng, Clock clock) {
  wire::Reader r(snapshot);
  std::size_t index = 0;

  try {
    for (char ch : kSnapshotMagic) {
      if (r.u8() != static_cast<std::uint8_t>(ch)) throw ParseError("snapshot: bad magic");
    }
    const auto version = r.u16();
    if (version != kSnapshotVersion) {
      throw ParseError("snapshot: version " + std::to_string(version) + ", expected " +
                       std::to_string(kSnapshotVersion));
    }
  } catch (const ParseError& e) {
    throw ParseError(std::string("snapshot header: ") + e.what());
  }

  std::map<std::string, std::string> meta;
  struct Pending {
    RecordKind kind;
    std::string key;
    std::string value;
  };
  std::vector<Pending> records;
  while (!r.done()) {
    try {
      Pending p;
      const auto kind = r.u8();
      if (kind < 1 || kind > 5) throw ParseError("unknown record kind " + std::to_string(kind));
      p.kind = static_cast<RecordKind>(kind);
      p.key = r.str32();
      p.value = r.str32();
      if (p.kind == RecordKind::meta) {
        meta[p.key] = p.value;
      } else {
        records.push_back(std::move(p));
      }
    } catch (const ParseError& e) {
      throw ParseError("snapshot record " + std::to_string(index) + ": " + e.what());
    }
    ++index;
  }

  auto need = [&](const char* key) -> const std::string& {
    const auto it = meta.find(key);
    if (it == meta.end()) throw ParseError(std::string("snapshot: missing meta record '") + key + "'");
    return it->second;
  };

  std::vector<std::uint32_t> weights;
  {
    const std::string& text = need("decay_weights");
    std::size_t start = 0;
    while (start <= text.size()) {
      const auto comma = text.find(',', start);
      const std::string item = text.substr(start, comma == std::string::npos ? std::string::npos : comma - start);
      try {
        weights.push_back(static_cast<std::uint32_t>(std::stoul(item)));
      } catch (const std::exception&) {
        throw ParseError("snapshot: bad decay weight '" + item + "'");
      }
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
  }
  CollectorConfig config;
  try {
    config.decay = DecayProfile(weights);
    config.geo_bin_s = std::stoll(need("geo_bin_s"));
    config.ephid_bin_s = std::stoll(need("ephid_bin_s"));
  } catch (const ConfigError& e) {
    throw ParseError(std::string("snapshot: ") + e.what());
  } catch (const std::logic_error&) {
    throw ParseError("snapshot: bad bin width");
  }
  if (config.decay.fingerprint() != need("decay_fingerprint")) {
    throw ParseError("snapshot: decay fingerprint does not match its weights");
  }

  paillier::PublicKey pk;
  try {
    pk = paillier::PublicKey(paillier::from_hex(need("modulus")));
  } catch (const std::invalid_argument& e) {
    throw ParseError(std::string("snapshot: bad modulus: ") + e.what());
  }

  auto out = std::make_unique<Collector>(pk, config, std::move(rng), std::move(clock));
  std::size_t rec = 0;
  for (const auto& p : records) {
    ++rec;
    try {
      switch (p.kind) {
        case RecordKind::cell: {
          Ciphertext c{paillier::from_hex(p.value)};
          paillier::validate(pk, c);
          if (!out->matrix_.emplace(parse_visit_key(as_bytes(p.key)), std::move(c)).second) {
            throw ParseError("duplicate cell");
          }
          break;
        }
        case RecordKind::ephid: {
          Ciphertext c{paillier::from_hex(p.value)};
          paillier::validate(pk, c);
          out->ephids_[parse_visit_key(as_bytes(p.key))].push_back(std::move(c));
          break;
        }
        case RecordKind::consumed_token:
          if (p.value.size() != 2 * crypto_generichash_BYTES ||
              !std::all_of(p.value.begin(), p.value.end(),
                           [](char ch) { return (ch >= '0' && ch <= '9') || (ch >= 'a' && ch <= 'f'); })) {
            throw ParseError("bad token digest");
          }
          out->tokens_.restore_consumed(p.key, p.value);
          break;
        case RecordKind::issued_token:
          out->tokens_.issue(p.key, std::stoll(p.value));
          break;
        case RecordKind::meta:
          break;
      }
    } catch (const std::exception& e) {
      throw ParseError("snapshot data record " + std::to_string(rec) + ": " + e.what());
    }
  }
  return out;
}

std::unique_ptr<Collector> Collector::load(const std::filesystem::path& path, RandomSource rng, Clock clock) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("snapshot: cannot open " + path.string());
  const wire::Bytes bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return restore(bytes, std::move(rng), std::move(clock));
}

}  // namespace tracekit::collector
