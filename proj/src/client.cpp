// Copyright 2026 The tracekit Authors
// SPDX-License-Identifier: Apache-2.0

#include "tracekit/client.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include "tracekit/errors.hpp"

namespace tracekit::client {
namespace {

constexpr int kUploadAttempts = 3;

}  // namespace

std::uint64_t unmask(const paillier::PublicKey& pk, const mpz_class& masked, const mpz_class& epsilon) {
  mpz_class w = (masked - epsilon) % pk.n();
  if (w < 0) w += pk.n();
  if (w > pk.n() / 2) throw ProtocolError("unmasked value exceeds n/2");
  if (!w.fits_ulong_p()) throw ProtocolError("unmasked value exceeds 64 bits");
  return w.get_ui();
}

std::vector<geo::Visit> generate_fake_query_pairs(const std::vector<geo::VisitSet>& fakes,
                                                  std::size_t real_pair_count, RandomSource& rng) {
  std::vector<geo::Visit> out;
  const auto lo = static_cast<std::int64_t>(std::llround(0.8 * static_cast<double>(real_pair_count)));
  const auto hi = static_cast<std::int64_t>(std::llround(1.2 * static_cast<double>(real_pair_count)));
  for (const auto& fake : fakes) {
    const auto want = static_cast<std::size_t>(rng.uniform_between(lo, hi));
    std::vector<geo::Visit> pool(fake.begin(), fake.end());
    const std::size_t take = std::min(want, pool.size());
    // Partial Fisher-Yates: the first `take` slots become a uniform sample.
    for (std::size_t i = 0; i < take; ++i) {
      const std::size_t j = i + static_cast<std::size_t>(rng.uniform(pool.size() - i));
      std::swap(pool[i], pool[j]);
    }
    out.insert(out.end(), pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(take));
  }
  return out;
}

ClientAgent::ClientAgent(AgentParams params, paillier::PublicKey pk, RandomSource rng)
    : params_(std::move(params)), pk_(std::move(pk)), rng_(std::move(rng)), advertiser_(params_.rotation_s) {
  if (params_.k < 1 || params_.k_prime < 0) throw ConfigError("agent: need k >= 1 and k' >= 0");
  if (!(params_.phi_m >= 0)) throw ConfigError("agent: phi must be >= 0");
  if (params_.min_contact_s < 0 || params_.query_window_s <= 0) throw ConfigError("agent: bad durations");
  params_.policy.validate();
}

void ClientAgent::record_location(const geo::TimedPoint& sample) {
  geo::check_point(sample.point);
  if (!trajectory_.empty() && sample.t <= trajectory_.back().t) throw DomainError("agent: samples out of order");
  trajectory_.push_back(sample);
}

std::optional<ephid::EphId> ClientAgent::broadcast(std::int64_t now, const std::optional<geo::GeoPoint>& here) {
  if (!here) return std::nullopt;
  return advertiser_.tick(now, here, rng_);
}

ephid::ReceiveResult ClientAgent::receive(std::string_view ephid_wire, std::int64_t now, const geo::GeoPoint& here) {
  return received_.receive(ephid_wire, now, here, params_.phi_m);
}

std::vector<ephid::TemporalEphId> ClientAgent::redacted_advertised(std::int64_t now) const {
  const std::int64_t from = now - geo::kRetentionSeconds;
  std::vector<ephid::TemporalEphId> out;
  for (const auto& e : advertiser_.log()) {
    const std::int64_t start = e.minute * ephid::kMinuteSeconds;
    if (start < from || start > now) continue;
    const geo::TimedPoint at{geo::geohash_decode_box(e.cell).center(), start};
    if (!params_.policy.covers(at)) out.push_back(e);
  }
  return out;
}

UploadRecord ClientAgent::build_upload(const std::string& token, std::int64_t now) {
  const auto window = geo::slice(trajectory_, now - geo::kRetentionSeconds, now + 1);
  const auto real = anon::redact(window, params_.policy);
  if (real.empty()) throw DomainError("agent: nothing to upload after redaction");

  const auto profile = anon::derive_profile(params_.region, real, rng_.next_u64());
  auto build = anon::build_superlist(real, params_.k, pk_, profile, rng_, params_.quantization);
  const auto superset =
      ephid::cloak_advertised(redacted_advertised(now), build.minute_visits, params_.rotation_s, rng_);

  std::map<ephid::Rand128, std::vector<geo::Visit>> groups;
  for (const auto& e : superset) groups[e.rand].push_back({e.cell, e.minute});

  UploadRecord record{wire::PatientUpload{token, build.superlist.entries(), {}}, build.superlist.real_index(),
                      std::move(build.minute_visits)};
  record.message.ephids.reserve(groups.size());
  for (auto& [rand, sightings] : groups) {
    std::sort(sightings.begin(), sightings.end());
    record.message.ephids.push_back({rand, std::move(sightings)});
  }
  return record;
}

wire::Ack ClientAgent::patient_upload(channel::Transport& t, const std::string& token, std::int64_t now) {
  UploadRecord record = build_upload(token, now);
  const wire::Message request = record.message;
  last_upload_ = std::move(record);
  for (int attempt = 1;; ++attempt) {
    try {
      wire::Message reply = channel::call(t, channel::Endpoint::collector, request);
      if (auto* ack = std::get_if<wire::Ack>(&reply)) return std::move(*ack);
      throw ProtocolError("collector answered an upload with " + std::string(wire::kind_name(wire::kind_of(reply))));
    } catch (const ProtocolError&) {
      throw;
    } catch (const std::runtime_error&) {
      if (attempt == kUploadAttempts) throw;
    }
  }
}

anon::QueryCloak ClientAgent::make_cloak(std::int64_t now) {
  const auto real = geo::slice(trajectory_, now - params_.query_window_s, now + 1);
  const auto profile = anon::derive_profile(params_.region, real, rng_.next_u64());
  return anon::cloak_query(real, params_.k_prime, profile, rng_, params_.quantization);
}

mpz_class ClientAgent::draw_mask() { return rng_.below(pk_.n()); }

std::uint64_t ClientAgent::geolocation_risk(channel::Transport& t, const anon::QueryCloak& cloak) {
  const wire::Message reply = channel::call(t, channel::Endpoint::collector, wire::GeoQuery{cloak.visits});
  const auto* risks = std::get_if<wire::GeoQueryResponse>(&reply);
  if (!risks) throw ProtocolError("expected GeoQueryResponse");
  if (risks->risks.size() != cloak.visits.size()) throw ProtocolError("GeoQueryResponse length mismatch");

  const auto& mine = risks->risks[cloak.real_index.value];
  paillier::validate(pk_, mine);
  const mpz_class epsilon = draw_mask();
  const auto masked = paillier::add(pk_, mine, paillier::encrypt(pk_, epsilon, rng_));

  const wire::Message decrypted = channel::call(t, channel::Endpoint::interpreter, wire::DecryptRisk{masked});
  const auto* plain = std::get_if<wire::DecryptResponse>(&decrypted);
  if (!plain || plain->plaintexts.size() != 1) throw ProtocolError("expected one decrypted value");
  return unmask(pk_, plain->plaintexts.front(), epsilon);
}

std::uint64_t ClientAgent::ephid_exposure(channel::Transport& t, const std::vector<geo::VisitSet>& fakes,
                                          std::int64_t now) {
  const std::int64_t from = now - params_.query_window_s;
  std::map<geo::Visit, std::vector<ephid::Rand128>> received_at;
  for (const auto& e : received_.eligible(params_.min_contact_s)) {
    if (e.minute * ephid::kMinuteSeconds < from) continue;
    received_at[{e.cell, e.minute}].push_back(e.rand);
  }
  if (received_at.empty()) return 0;

  std::set<geo::Visit> pairs;
  for (const auto& [pair, rands] : received_at) pairs.insert(pair);
  for (const auto& p : generate_fake_query_pairs(fakes, received_at.size(), rng_)) pairs.insert(p);
  std::vector<geo::Visit> query(pairs.begin(), pairs.end());
  shuffle(query, rng_);

  const wire::Message reply = channel::call(t, channel::Endpoint::collector, wire::EphQuery{std::move(query)});
  const auto* rows = std::get_if<wire::EphQueryResponse>(&reply);
  if (!rows) throw ProtocolError("expected EphQueryResponse");

  std::vector<paillier::Ciphertext> products;
  for (const auto& row : rows->rows) {
    const auto it = received_at.find(row.pair);
    if (it == received_at.end()) continue;  // fake pair
    paillier::validate(pk_, row.value);
    for (const auto& u : it->second) {
      products.push_back(paillier::add(pk_, paillier::encrypt(pk_, u.value(), rng_), row.value));
    }
  }
  if (products.empty()) return 0;

  const mpz_class epsilon = draw_mask();
  for (auto& c : products) c = paillier::add(pk_, c, paillier::encrypt(pk_, epsilon, rng_));
  const wire::Message decrypted =
      channel::call(t, channel::Endpoint::interpreter, wire::DecryptShuffle{std::move(products)});
  const auto* plain = std::get_if<wire::DecryptResponse>(&decrypted);
  if (!plain) throw ProtocolError("expected DecryptResponse");

  std::uint64_t zeros = 0;
  for (const auto& p : plain->plaintexts) {
    if (p == epsilon) ++zeros;
  }
  return zeros;
}

std::uint64_t ClientAgent::query_geolocation_risk(channel::Transport& t, std::int64_t now) {
  return geolocation_risk(t, make_cloak(now));
}

std::uint64_t ClientAgent::query_ephid_exposure(channel::Transport& t, std::int64_t now) {
  return ephid_exposure(t, make_cloak(now).fake_minute_visits, now);
}

ExposureResult ClientAgent::query(channel::Transport& t, std::int64_t now) {
  const auto cloak = make_cloak(now);
  ExposureResult r;
  r.geolocation_risk = geolocation_risk(t, cloak);
  r.ephid_contact_count = ephid_exposure(t, cloak.fake_minute_visits, now);
  return r;
}

void ClientAgent::prune(std::int64_t now) {
  const std::int64_t floor = now - geo::kRetentionSeconds;
  std::erase_if(trajectory_, [&](const geo::TimedPoint& s) { return s.t < floor; });
  advertiser_.prune(now);
  received_.prune(now);
}

}  // namespace tracekit::client
