// Copyright 2026 The tracekit Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <vector>

#include "tracekit/geo.hpp"
#include "tracekit/paillier.hpp"
#include "tracekit/random.hpp"
#include "tracekit/wire.hpp"

// The collector stores and combines ciphertexts. It holds no private key and
// never decrypts.
namespace tracekit::collector {

using geo::Visit;
using paillier::Ciphertext;

/// Integer decay weights w(0) > w(1) > ... > w(delta_bins) >= 1.
class DecayProfile {
 public:
  // w(d) = max(1, round(quantum * (1 - d / delta_bins))); a weight that ties
  // its predecessor is lowered by one. ConfigError if that reaches zero.
  static DecayProfile linear(int delta_bins = 24, std::uint32_t quantum = 100);

  explicit DecayProfile(std::vector<std::uint32_t> weights);

  int delta_bins() const { return static_cast<int>(weights_.size()) - 1; }
  std::uint32_t weight(int d) const { return weights_.at(static_cast<std::size_t>(d)); }
  const std::vector<std::uint32_t>& weights() const { return weights_; }

  // BLAKE2b-256 of the weights, hex.
  std::string fingerprint() const;

  friend bool operator==(const DecayProfile&, const DecayProfile&) = default;

 private:
  std::vector<std::uint32_t> weights_;
};

enum class TokenStatus { permit, replay, unknown, consumed, expired };

/// Single-use upload codes issued by the health authority. A consumed code
/// presented again with the same payload digest is a retry, not a replay.
class TokenRegistry {
 public:
  void issue(const std::string& code, std::int64_t expiry);

  TokenStatus check(const std::string& code, std::int64_t now, const std::string& digest) const;
  // check(), then marks the code consumed on permit.
  TokenStatus consume(const std::string& code, std::int64_t now, const std::string& digest);
  void restore_consumed(const std::string& code, const std::string& digest);

  const std::map<std::string, std::int64_t>& issued() const { return issued_; }
  const std::map<std::string, std::string>& consumed() const { return consumed_; }

 private:
  std::map<std::string, std::int64_t> issued_;    // code -> expiry
  std::map<std::string, std::string> consumed_;  // code -> payload digest
};

struct CollectorConfig {
  std::int64_t geo_bin_s = 300;
  std::int64_t ephid_bin_s = 60;
  DecayProfile decay = DecayProfile::linear();
};

struct PruneCounts {
  std::size_t cells = 0;
  std::size_t ephid_keys = 0;

  friend bool operator==(const PruneCounts&, const PruneCounts&) = default;
};

using Clock = std::function<std::int64_t()>;

std::int64_t system_clock_seconds();

class Collector {
 public:
  Collector(paillier::PublicKey pk, CollectorConfig config, RandomSource rng, Clock clock = system_clock_seconds);

  const paillier::PublicKey& public_key() const { return pk_; }
  const CollectorConfig& config() const { return config_; }

  void issue_token(const std::string& code, std::int64_t expiry);

  // Dispatches PublishKey, PatientUpload, GeoQuery and EphQuery; anything
  // else is answered with an Error.
  wire::Message handle(const wire::Message& request);

  // Authenticates, validates every ciphertext, then integrates trajectories
  // and EphIDs in one step. Nothing changes unless the whole upload is good.
  wire::Message upload(const wire::PatientUpload& request);

  // One ciphertext per trajectory: the sum of its updated cells, or a fresh
  // encryption of zero when it touches none.
  std::vector<Ciphertext> query_geolocation(const std::vector<geo::VisitSet>& trajectories);
  std::vector<wire::EphRow> query_ephids(const std::vector<Visit>& pairs) const;

  // Removes cells and EphID keys whose bin ended before now - 14 days.
  PruneCounts prune(std::int64_t now);

  std::optional<Ciphertext> cell(const Visit& key) const;
  std::vector<Ciphertext> ephids_at(const Visit& key) const;
  std::size_t cell_count() const;
  std::size_t ephid_key_count() const;
  std::size_t ephid_ciphertext_count() const;

  wire::Bytes snapshot() const;
  void save(const std::filesystem::path& path) const;

  // ParseError with a record index on corrupt input or version mismatch.
  static std::unique_ptr<Collector> restore(std::span<const std::uint8_t> snapshot, RandomSource rng,
                                            Clock clock = system_clock_seconds);
  static std::unique_ptr<Collector> load(const std::filesystem::path& path, RandomSource rng,
                                         Clock clock = system_clock_seconds);

 private:
  wire::Message integrate(const wire::PatientUpload& request);
  std::map<Visit, Ciphertext> stage_trajectories(const std::vector<anon::FlaggedTrajectory>& trajectories) const;
  std::map<Visit, std::vector<Ciphertext>> stage_ephids(const std::vector<wire::EphIdGroup>& groups);
  Ciphertext fresh_encryption(const mpz_class& m);

  paillier::PublicKey pk_;
  CollectorConfig config_;
  Clock clock_;

  mutable std::shared_mutex state_mutex_;
  std::map<Visit, Ciphertext> matrix_;
  std::map<Visit, std::vector<Ciphertext>> ephids_;
  TokenRegistry tokens_;

  std::mutex rng_mutex_;
  RandomSource rng_;
};

inline constexpr char kSnapshotMagic[4] = {'T', 'K', 'C', 'S'};
inline constexpr std::uint16_t kSnapshotVersion = 1;

}  // namespace tracekit::collector
