// Copyright 2026 The tracekit Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "tracekit/anonymizer.hpp"
#include "tracekit/channel.hpp"
#include "tracekit/ephid.hpp"
#include "tracekit/geo.hpp"
#include "tracekit/paillier.hpp"
#include "tracekit/random.hpp"
#include "tracekit/wire.hpp"

namespace tracekit::client {

struct AgentParams {
  int k = 5;        // fakes per patient upload
  int k_prime = 5;  // fakes per healthy query
  double phi_m = ephid::kDefaultPhiMeters;
  std::int64_t rotation_s = ephid::kDefaultRotationSeconds;
  std::int64_t min_contact_s = ephid::kDefaultMinContactSeconds;
  std::int64_t query_window_s = geo::kRetentionSeconds;
  anon::QuantizationParams quantization;
  geo::GeoBox region;  // where fakes are synthesized
  anon::SensitivePolicy policy;
};

struct ExposureResult {
  std::uint64_t geolocation_risk = 0;
  std::uint64_t ephid_contact_count = 0;

  friend bool operator==(const ExposureResult&, const ExposureResult&) = default;
};

// (masked - epsilon) mod n. ProtocolError unless the result is at most n/2
// and fits in 64 bits.
std::uint64_t unmask(const paillier::PublicKey& pk, const mpz_class& masked, const mpz_class& epsilon);

// Per fake, a count uniform in [round(0.8 r), round(1.2 r)] of distinct
// pairs drawn from that fake's own minute visits.
std::vector<geo::Visit> generate_fake_query_pairs(const std::vector<geo::VisitSet>& fakes,
                                                  std::size_t real_pair_count, RandomSource& rng);

/// What a patient upload put on the wire, kept for inspection.
struct UploadRecord {
  wire::PatientUpload message;
  anon::RealIndex real_index;
  std::vector<geo::VisitSet> minute_visits;  // aligned with message.trajectories
};

class ClientAgent {
 public:
  ClientAgent(AgentParams params, paillier::PublicKey pk, RandomSource rng);

  // Samples must arrive in time order.
  void record_location(const geo::TimedPoint& sample);

  // One broadcast minute; nothing while the device is off (no location).
  std::optional<ephid::EphId> broadcast(std::int64_t now, const std::optional<geo::GeoPoint>& here);
  ephid::ReceiveResult receive(std::string_view ephid_wire, std::int64_t now, const geo::GeoPoint& here);

  // Redacts, cloaks and sends trajectories and EphIDs in one authenticated
  // upload. Transport failures are retried with the identical payload.
  wire::Ack patient_upload(channel::Transport& t, const std::string& token, std::int64_t now);
  // The message patient_upload would send.
  UploadRecord build_upload(const std::string& token, std::int64_t now);

  std::uint64_t query_geolocation_risk(channel::Transport& t, std::int64_t now);
  std::uint64_t query_ephid_exposure(channel::Transport& t, std::int64_t now);
  // Both queries behind one set of fake trajectories.
  ExposureResult query(channel::Transport& t, std::int64_t now);

  void prune(std::int64_t now);

  const geo::RawTrajectory& trajectory() const { return trajectory_; }
  const ephid::Advertiser& advertiser() const { return advertiser_; }
  const ephid::ReceivedLog& received() const { return received_; }
  const AgentParams& params() const { return params_; }
  const std::optional<UploadRecord>& last_upload() const { return last_upload_; }

  // Advertised entries that survive the sensitive-data policy, judged at the
  // cell center and minute start.
  std::vector<ephid::TemporalEphId> redacted_advertised(std::int64_t now) const;

 private:
  anon::QueryCloak make_cloak(std::int64_t now);
  std::uint64_t geolocation_risk(channel::Transport& t, const anon::QueryCloak& cloak);
  std::uint64_t ephid_exposure(channel::Transport& t, const std::vector<geo::VisitSet>& fakes, std::int64_t now);
  mpz_class draw_mask();

  AgentParams params_;
  paillier::PublicKey pk_;
  RandomSource rng_;
  geo::RawTrajectory trajectory_;
  ephid::Advertiser advertiser_;
  ephid::ReceivedLog received_;
  std::optional<UploadRecord> last_upload_;
};

}  // namespace tracekit::client
