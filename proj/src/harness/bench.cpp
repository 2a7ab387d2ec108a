// Copyright 2026 The tracekit Authors
// SPDX-License-Identifier: Apache-2.0

#include "tracekit/harness/bench.hpp"

#include <chrono>
#include <cmath>
#include <numeric>

#include "tracekit/anonymizer.hpp"
#include "tracekit/client.hpp"
#include "tracekit/collector.hpp"
#include "tracekit/errors.hpp"
#include "tracekit/interpreter.hpp"
#include "tracekit/paillier_keys.hpp"

namespace tracekit::harness {
namespace {

constexpr std::int64_t kDay = 86400;
constexpr std::int64_t kStart = 1'700'006'400;
constexpr std::size_t kPoolSize = 16;

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point t0) { return std::chrono::duration<double, std::milli>(Clock::now() - t0).count(); }

template <typename F>
OpLatency time_op(const std::string& name, int samples, F&& body) {
  OpLatency op{name, samples, 0.0, 0.0};
  for (int i = 0; i < samples; ++i) {
    const auto t0 = Clock::now();
    body(i);
    const double ms = ms_since(t0);
    op.mean_ms += ms;
    op.max_ms = std::max(op.max_ms, ms);
  }
  op.mean_ms /= samples;
  return op;
}

/// Answers EphQuery itself: `hits` rows spread uniformly, with replacement,
/// over the queried pairs, each carrying a pooled E(n - u) for a random u.
/// Everything else goes to the real servers.
class SeededEphIdTable final : public channel::Transport {
 public:
  SeededEphIdTable(channel::Transport& inner, std::vector<paillier::Ciphertext> pool, std::size_t hits,
                   RandomSource rng)
      : inner_(inner), pool_(std::move(pool)), hits_(hits), rng_(std::move(rng)) {}

  wire::Bytes exchange(channel::Endpoint to, const wire::Bytes& frame) override {
    if (to != channel::Endpoint::collector) return inner_.exchange(to, frame);
    wire::Message request = wire::parse(std::span(frame).subspan(wire::kFrameHeader));
    const auto* query = std::get_if<wire::EphQuery>(&request);
    if (!query) return inner_.exchange(to, frame);
    pairs_ = query->pairs.size();
    wire::EphQueryResponse response;
    if (!query->pairs.empty()) {
      for (std::size_t i = 0; i < hits_; ++i) {
        const auto& pair = query->pairs[rng_.uniform(query->pairs.size())];
        response.rows.push_back({pair, pool_[rng_.uniform(pool_.size())]});
      }
    }
    return wire::frame(wire::serialize(response));
  }

  std::size_t pairs() const { return pairs_; }

 private:
  channel::Transport& inner_;
  std::vector<paillier::Ciphertext> pool_;
  std::size_t hits_;
  RandomSource rng_;
  std::size_t pairs_ = 0;
};

// Broadcasts every logged minute so the advertiser log matches the trajectory.
void live(client::ClientAgent& agent, const geo::RawTrajectory& t, std::int64_t from, std::int64_t to) {
  std::size_t i = 0;
  for (std::int64_t m = from; m < to; m += 60) {
    std::optional<geo::GeoPoint> here;
    for (; i < t.size() && t[i].t < m + 60; ++i) {
      if (!here) here = t[i].point;
      agent.record_location(t[i]);
    }
    if (here) agent.broadcast(m, here);
  }
}

// `count` contacts each heard at the start and again 15 minutes later, at
// uniformly chosen logged instants.
void meet(client::ClientAgent& agent, const geo::RawTrajectory& t, int count, RandomSource& rng) {
  if (t.size() < 2) return;
  for (int c = 0; c < count; ++c) {
    const auto& s = t[rng.uniform(t.size())];
    const ephid::EphId e{geo::geohash_encode(s.point), ephid::Rand128::random(rng)};
    agent.receive(e.encode(), s.t, s.point);
    agent.receive(e.encode(), s.t + ephid::kDefaultMinContactSeconds, s.point);
  }
}

}  // namespace

LinearFit fit_line(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw DomainError("fit_line: need two or more points");
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxx = 0, sxy = 0, syy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx == 0) throw DomainError("fit_line: x is constant");
  LinearFit f;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  f.r2 = syy == 0 ? 1.0 : (sxy * sxy) / (sxx * syy);
  return f;
}

BenchResult run_bench(const BenchOptions& options) {
  if (options.ks.empty()) throw ConfigError("bench: empty k sweep");
  for (int k : options.ks) {
    if (k < 1 || k > 1000) throw ConfigError("bench: k must be in [1, 1000]");
  }
  if (options.op_samples < 1 || options.upload_days < 1 || options.upload_days > 14 || options.daily_contacts < 0) {
    throw ConfigError("bench: bad sample counts");
  }
  BenchResult result;
  result.options = options;
  const RandomSource root(options.seed);

  RandomSource key_rng = root.fork(1);
  auto keys = paillier::generate_keypair(
      options.key_bits, key_rng,
      options.key_bits >= 2048 ? paillier::KeyMode::deployment : paillier::KeyMode::insecure_test);
  const paillier::PublicKey pk = keys.pub;

  {
    RandomSource rng = root.fork(2);
    const int n = options.op_samples;
    std::vector<mpz_class> plain(n);
    for (auto& m : plain) m = rng.below(pk.n());
    std::vector<paillier::Ciphertext> cs(n);
    result.ops.push_back(time_op("encrypt", n, [&](int i) { cs[i] = paillier::encrypt(pk, plain[i], rng); }));
    paillier::Ciphertext sink = cs[0];
    result.ops.push_back(time_op("add", n, [&](int i) { sink = paillier::add(pk, cs[i], cs[(i + 1) % n]); }));
    result.ops.push_back(time_op("scale_100", n, [&](int i) { sink = paillier::scale(pk, cs[i], 100); }));
    mpz_class out;
    result.ops.push_back(time_op("decrypt", n, [&](int i) { out = paillier::decrypt(keys.priv, cs[i]); }));
  }

  std::vector<paillier::Ciphertext> pool;
  {
    RandomSource rng = root.fork(3);
    for (std::size_t i = 0; i < kPoolSize; ++i) {
      pool.push_back(paillier::encrypt(pk, paillier::negate(pk, ephid::Rand128::random(rng).value()), rng));
    }
  }

  anon::DiaryParams diary;
  diary.region = options.region;
  RandomSource person_rng = root.fork(4);
  const auto person = anon::make_person(diary, person_rng);
  const auto fortnight = anon::generate_diary(diary, person, kStart, options.upload_days, person_rng);
  const std::int64_t upload_now = kStart + options.upload_days * kDay;
  const std::int64_t day_from = upload_now - kDay;
  const auto last_day = geo::slice(fortnight, day_from, upload_now);

  collector::Collector collector(pk, {}, root.fork(5), [upload_now] { return upload_now; });
  interpreter::RiskInterpreter interpreter(std::move(keys), root.fork(6));
  channel::InProcessTransport servers([&](const wire::Message& m) { return collector.handle(m); },
                                      [&](const wire::Message& m) { return interpreter.handle(m); });

  for (const int k : options.ks) {
    BenchPoint point;
    point.k = k;

    client::AgentParams params;
    params.k = k;
    params.k_prime = k;
    params.region = options.region;

    {
      client::ClientAgent patient(params, pk, root.fork(1000 + static_cast<std::uint64_t>(k)));
      live(patient, fortnight, kStart, upload_now);
      const auto record = patient.build_upload("bench", upload_now);
      point.upload_bytes = wire::frame(wire::serialize(record.message)).size();
      for (const auto& g : record.message.ephids) point.upload_sightings += g.sightings.size();
    }

    {
      params.query_window_s = kDay;
      client::ClientAgent healthy(params, pk, root.fork(2000 + static_cast<std::uint64_t>(k)));
      RandomSource contact_rng = root.fork(3000 + static_cast<std::uint64_t>(k));
      live(healthy, last_day, day_from, upload_now);
      meet(healthy, last_day, options.daily_contacts, contact_rng);

      const auto per_trajectory =
          static_cast<std::size_t>(std::llround(options.hit_rate * options.daily_contacts * k));
      point.seeded_hits = static_cast<std::size_t>(k + 1) * per_trajectory;
      SeededEphIdTable seeded(servers, pool, point.seeded_hits, root.fork(4000 + static_cast<std::uint64_t>(k)));
      channel::MeteringTransport meter(seeded);
      healthy.query(meter, upload_now);
      point.eph_pairs = seeded.pairs();
      point.healthy_up = meter.meter().up();
      point.healthy_down = meter.meter().down();
      point.healthy_up_bytes = meter.meter().total_up();
      point.healthy_down_bytes = meter.meter().total_down();
    }
    result.points.push_back(point);
  }

  std::vector<double> x, y;
  for (const auto& p : result.points) {
    x.push_back(p.k);
    y.push_back(static_cast<double>(p.upload_bytes));
  }
  if (x.size() >= 2) result.upload_fit = fit_line(x, y);
  return result;
}

}  // namespace tracekit::harness
