// Copyright 2026 The tracekit Authors
// SPDX-License-Identifier: Apache-2.0

#include "tracekit/harness/scenario.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <condition_variable>
#include <exception>
#include <map>
#include <memory>
#include <mutex>
#include <set>
#include <thread>

#include "tracekit/collector.hpp"
#include "tracekit/errors.hpp"
#include "tracekit/harness/oracle.hpp"
#include "tracekit/interpreter.hpp"
#include "tracekit/paillier_keys.hpp"

namespace tracekit::harness {
namespace {

constexpr std::int64_t kDay = 86400;

// Stream numbers for RandomSource::fork of the scenario root.
constexpr std::uint64_t kCollectorStream = 1;
constexpr std::uint64_t kInterpreterStream = 2;
constexpr std::uint64_t kKeyStream = 3;
constexpr std::uint64_t kScheduleStream = 4;
constexpr std::uint64_t kVenueStream = 5;
constexpr std::uint64_t kAgentStreamBase = 100;
constexpr std::uint64_t kDiaryStreamBase = 10000;

/// Lets exactly one GeoQuery through at a time, in ticket order. Zero-hit
/// trajectories are answered with fresh encryptions drawn from the
/// collector's stream, so admitting them in a fixed order keeps every
/// ciphertext, and therefore every byte count, reproducible under threads.
class TicketGate {
 public:
  void wait_turn(std::size_t ticket) {
    std::unique_lock lock(mutex_);
    cv_.wait(lock, [&] { return next_ == ticket; });
  }
  void advance() {
    {
      std::lock_guard lock(mutex_);
      ++next_;
    }
    cv_.notify_all();
  }
  void reset() { next_ = 0; }

 private:
  std::mutex mutex_;
  std::condition_variable cv_;
  std::size_t next_ = 0;
};

class GatedTransport final : public channel::Transport {
 public:
  GatedTransport(channel::Transport& inner, TicketGate& gate, std::size_t ticket)
      : inner_(inner), gate_(gate), ticket_(ticket) {}
  ~GatedTransport() override {
    if (!used_) {
      gate_.wait_turn(ticket_);
      gate_.advance();
    }
  }

  wire::Bytes exchange(channel::Endpoint to, const wire::Bytes& frame) override {
    const bool geo_query = frame.size() > wire::kFrameHeader && frame[wire::kFrameHeader] == static_cast<std::uint8_t>(wire::Kind::geo_query);
    if (!geo_query || used_) return inner_.exchange(to, frame);
    gate_.wait_turn(ticket_);
    used_ = true;
    try {
      wire::Bytes reply = inner_.exchange(to, frame);
      gate_.advance();
      return reply;
    } catch (...) {
      gate_.advance();
      throw;
    }
  }

 private:
  channel::Transport& inner_;
  TicketGate& gate_;
  std::size_t ticket_;
  bool used_ = false;
};

void accumulate(std::array<channel::Traffic, wire::kKindCount>& into,
                const std::array<channel::Traffic, wire::kKindCount>& from) {
  for (std::size_t i = 0; i < into.size(); ++i) {
    into[i].frames += from[i].frames;
    into[i].bytes += from[i].bytes;
  }
}

geo::GeoPoint random_point(const geo::GeoBox& box, RandomSource& rng) {
  return {box.min.lat + (box.max.lat - box.min.lat) * rng.uniform01(),
          box.min.lon + (box.max.lon - box.min.lon) * rng.uniform01()};
}

geo::GeoPoint north_of(const geo::GeoPoint& p, double metres) {
  return {p.lat + metres / geo::kEarthRadiusMeters * 180.0 / M_PI, p.lon};
}

// Replaces [from, to) of `t` with samples pinned at `at`.
void pin(geo::RawTrajectory& t, std::int64_t from, std::int64_t to, const geo::GeoPoint& at, std::int64_t step) {
  std::erase_if(t, [&](const geo::TimedPoint& s) { return s.t >= from && s.t < to; });
  for (std::int64_t s = from; s < to; s += step) t.push_back({at, s});
  std::sort(t.begin(), t.end(), [](const auto& a, const auto& b) { return a.t < b.t; });
}

struct Person {
  geo::RawTrajectory truth;
  std::size_t cursor = 0;
  std::unique_ptr<client::ClientAgent> agent;  // null for non-adopters
  std::vector<ephid::TemporalEphId> advertised;  // ground-truth broadcast log
  oracle::Ear ear;
  bool uploaded = false;
};

struct Network {
  std::unique_ptr<collector::Collector> collector;
  std::unique_ptr<interpreter::RiskInterpreter> interpreter;
  std::unique_ptr<channel::InProcessTransport> in_process;
  std::unique_ptr<channel::FrameServer> collector_server;
  std::unique_ptr<channel::FrameServer> interpreter_server;

  // A transport for one agent session.
  std::unique_ptr<channel::Transport> session() {
    if (!collector_server) return nullptr;
    return std::make_unique<channel::TcpTransport>(channel::Address{"127.0.0.1", collector_server->port()},
                                                   channel::Address{"127.0.0.1", interpreter_server->port()});
  }
};

/// Neighbour lookup over a local metric grid with cells of the radio range.
class Grid {
 public:
  Grid(const geo::GeoPoint& origin, double cell_m) : frame_{origin}, cell_m_(cell_m) {}

  void clear() { cells_.clear(); }
  void add(std::size_t id, const geo::GeoPoint& p) { cells_[key(p)].push_back(id); }

  // Ids in the 3x3 block around p, ascending.
  std::vector<std::size_t> near(const geo::GeoPoint& p) const {
    std::vector<std::size_t> out;
    const auto [cx, cy] = key(p);
    for (std::int64_t dx = -1; dx <= 1; ++dx) {
      for (std::int64_t dy = -1; dy <= 1; ++dy) {
        const auto it = cells_.find({cx + dx, cy + dy});
        if (it != cells_.end()) out.insert(out.end(), it->second.begin(), it->second.end());
      }
    }
    std::sort(out.begin(), out.end());
    return out;
  }

 private:
  std::pair<std::int64_t, std::int64_t> key(const geo::GeoPoint& p) const {
    const auto xy = frame_.to_xy(p);
    return {static_cast<std::int64_t>(std::floor(xy[0] / cell_m_)),
            static_cast<std::int64_t>(std::floor(xy[1] / cell_m_))};
  }

  geo::LocalFrame frame_;
  double cell_m_;
  std::map<std::pair<std::int64_t, std::int64_t>, std::vector<std::size_t>> cells_;
};

std::set<ephid::TemporalEphId> redacted_log(const Person& p, const anon::SensitivePolicy& policy, std::int64_t now) {
  std::set<ephid::TemporalEphId> out;
  for (const auto& e : p.advertised) {
    const std::int64_t start = e.minute * 60;
    if (start < now - geo::kRetentionSeconds || start > now) continue;
    if (!policy.covers({geo::geohash_decode_box(e.cell).center(), start})) out.insert(e);
  }
  return out;
}

}  // namespace

std::size_t ScenarioResult::mismatches() const {
  return static_cast<std::size_t>(
      std::count_if(exposures.begin(), exposures.end(), [](const ExposureRow& r) { return !r.matches(); }));
}

std::size_t ScenarioResult::positive_geolocation() const {
  return static_cast<std::size_t>(std::count_if(exposures.begin(), exposures.end(), [](const ExposureRow& r) {
    return r.oracle.geolocation_risk > 0;
  }));
}

std::size_t ScenarioResult::positive_contacts() const {
  return static_cast<std::size_t>(std::count_if(exposures.begin(), exposures.end(), [](const ExposureRow& r) {
    return r.oracle.ephid_contact_count > 0;
  }));
}

ScenarioResult run_scenario(const ScenarioConfig& config, const RunOptions& options) {
  config.validate();
  const auto wall_start = std::chrono::steady_clock::now();
  ScenarioResult result;
  result.config = config;

  const RandomSource root(config.seed);
  const auto& proto = config.protocol;
  const std::int64_t step = config.movement.sample_interval_s;

  RandomSource key_rng = root.fork(kKeyStream);
  auto keys = paillier::generate_keypair(config.key_bits, key_rng,
                                         config.key_bits >= 2048 ? paillier::KeyMode::deployment
                                                                 : paillier::KeyMode::insecure_test);
  const paillier::PublicKey pk = keys.pub;

  std::atomic<std::int64_t> sim_now{config.start};
  collector::CollectorConfig cc;
  cc.geo_bin_s = proto.quantization.geo_bin_s;
  cc.ephid_bin_s = proto.quantization.ephid_bin_s;
  cc.decay = collector::DecayProfile::linear(config.delta_bins, config.weight_quantum);

  Network net;
  net.collector = std::make_unique<collector::Collector>(pk, cc, root.fork(kCollectorStream),
                                                         [&sim_now] { return sim_now.load(); });
  net.interpreter = std::make_unique<interpreter::RiskInterpreter>(std::move(keys), root.fork(kInterpreterStream));
  channel::Handler collector_handler = [&net](const wire::Message& m) { return net.collector->handle(m); };
  channel::Handler interpreter_handler = [&net](const wire::Message& m) { return net.interpreter->handle(m); };
  net.in_process = std::make_unique<channel::InProcessTransport>(collector_handler, interpreter_handler);
  if (options.tcp) {
    net.collector_server = std::make_unique<channel::FrameServer>(channel::Address{"127.0.0.1", 0}, collector_handler);
    net.interpreter_server =
        std::make_unique<channel::FrameServer>(channel::Address{"127.0.0.1", 0}, interpreter_handler);
  }

  // Movement ground truth, including forced encounters.
  std::vector<Person> people(config.agents);
  for (std::size_t i = 0; i < config.agents; ++i) {
    RandomSource rng = root.fork(kDiaryStreamBase + i);
    const auto person = anon::make_person(config.movement, rng);
    people[i].truth = anon::generate_diary(config.movement, person, config.start, config.days, rng);
    if (config.adopts(i)) {
      people[i].agent = std::make_unique<client::ClientAgent>(proto, pk, root.fork(kAgentStreamBase + i));
    }
  }
  RandomSource venue_rng = root.fork(kVenueStream);
  for (const auto& e : config.colocations) {
    const geo::GeoPoint venue = e.venue ? *e.venue : random_point(config.region, venue_rng);
    const std::int64_t from = config.start + e.day * kDay + e.start_minute * 60;
    const std::int64_t to = from + e.duration_minutes * 60;
    pin(people[e.a].truth, from, to, venue, step);
    pin(people[e.b].truth, from, to, venue, step);
  }
  struct ActiveRelay {
    std::int64_t from, to;
    std::size_t patient, victim;
  };
  std::vector<ActiveRelay> relays;
  for (const auto& e : config.relays) {
    const geo::GeoPoint site = random_point(config.region, venue_rng);
    const std::int64_t from = config.start + e.day * kDay + e.start_minute * 60;
    const std::int64_t to = from + e.duration_minutes * 60;
    pin(people[e.patient].truth, from, to, site, step);
    pin(people[e.victim].truth, from, to, north_of(site, e.distance_m), step);
    relays.push_back({from, to, e.patient, e.victim});
  }

  RandomSource schedule_rng = root.fork(kScheduleStream);
  Grid grid(config.region.center(), config.radio_range_m * 1.01);
  TicketGate gate;
  std::vector<std::optional<geo::GeoPoint>> here(config.agents);
  std::vector<std::optional<ephid::EphId>> sent(config.agents);

  // Patient visit sets as uploaded, for the geolocation oracle.
  std::vector<geo::VisitSet> patient_visits;
  std::vector<std::set<ephid::TemporalEphId>> patient_ephids;

  for (int day = 0; day < config.days; ++day) {
    for (int minute = 0; minute < 1440; ++minute) {
      const std::int64_t t = config.start + day * kDay + minute * 60;
      grid.clear();
      for (std::size_t i = 0; i < people.size(); ++i) {
        Person& p = people[i];
        here[i].reset();
        sent[i].reset();
        while (p.cursor < p.truth.size() && p.truth[p.cursor].t < t + 60) {
          const auto& s = p.truth[p.cursor++];
          if (!here[i]) here[i] = s.point;
          if (p.agent) p.agent->record_location(s);
        }
        if (!here[i] || !p.agent) continue;
        sent[i] = p.agent->broadcast(t, here[i]);
        if (!sent[i]) continue;
        ++result.broadcasts;
        p.advertised.push_back({sent[i]->cell, sent[i]->rand, geo::bin_of(t, 60)});
        grid.add(i, *here[i]);
      }
      for (std::size_t b = 0; b < people.size(); ++b) {
        if (!here[b] || !people[b].agent) continue;
        for (const std::size_t a : grid.near(*here[b])) {
          if (a == b || geo::distance_meters(*here[a], *here[b]) > config.radio_range_m) continue;
          const auto outcome = people[b].agent->receive(sent[a]->encode(), t, *here[b]);
          people[b].ear.hear(*sent[a], t, *here[b], proto.phi_m);
          if (outcome == ephid::ReceiveResult::accepted) {
            ++result.receptions_accepted;
          } else {
            ++result.receptions_rejected;
          }
        }
      }
      for (const auto& r : relays) {
        if (t < r.from || t >= r.to || !sent[r.patient] || !here[r.victim] || !people[r.victim].agent) continue;
        ++result.relay.relayed;
        const auto outcome = people[r.victim].agent->receive(sent[r.patient]->encode(), t, *here[r.victim]);
        people[r.victim].ear.hear(*sent[r.patient], t, *here[r.victim], proto.phi_m);
        if (outcome == ephid::ReceiveResult::accepted) ++result.relay.accepted;
      }
    }

    const std::int64_t now = config.start + (day + 1) * kDay;
    sim_now = now;

    for (const auto& [index, diagnosis_day] : config.patients) {
      if (diagnosis_day != day) continue;
      Person& p = people[index];
      const std::string token = "patient-" + std::to_string(index) + "-day-" + std::to_string(day);
      net.collector->issue_token(token, now + config.token_ttl_s);
      auto session = net.session();
      channel::MeteringTransport meter(session ? *session : *net.in_process);

      UploadRow row;
      row.day = day;
      row.agent = index;
      try {
        row.ack = p.agent->patient_upload(meter, token, now).detail;
      } catch (const std::exception& e) {
        row.ack = std::string("failed: ") + e.what();
      }
      row.bytes_up = meter.meter().total_up();
      row.bytes_down = meter.meter().total_down();
      accumulate(result.up, meter.meter().up());
      accumulate(result.down, meter.meter().down());
      p.uploaded = true;

      const auto real = redacted_log(p, proto.policy, now);
      row.real_advertised = real.size();
      if (const auto& sent_upload = p.agent->last_upload()) {
        row.trajectories = sent_upload->message.trajectories.size();
        std::set<ephid::TemporalEphId> uploaded;
        for (const auto& g : sent_upload->message.ephids) {
          row.ephid_sightings += g.sightings.size();
          for (const auto& v : g.sightings) uploaded.insert({v.cell, g.rand, v.bin});
        }
        row.covers_real = std::includes(uploaded.begin(), uploaded.end(), real.begin(), real.end());
      }
      if (row.ack.rfind("failed", 0) != 0) {
        const auto window = geo::slice(p.truth, now - geo::kRetentionSeconds, now);
        patient_visits.push_back(geo::quantize(anon::redact(window, proto.policy), proto.quantization.precision,
                                               proto.quantization.geo_bin_s));
        patient_ephids.push_back(real);
      }
      result.uploads.push_back(std::move(row));
    }

    net.collector->prune(now);
    for (auto& p : people) {
      if (p.agent) p.agent->prune(now);
      p.ear.forget_before(now - geo::kRetentionSeconds);
    }

    std::vector<std::size_t> order;
    for (std::size_t i = 0; i < people.size(); ++i) {
      if (people[i].agent && !people[i].uploaded) order.push_back(i);
    }
    shuffle(order, schedule_rng);

    std::vector<ExposureRow> rows(order.size());
    gate.reset();
    std::atomic<std::size_t> next{0};
    std::mutex error_mutex;
    std::exception_ptr error;
    auto worker = [&] {
      for (;;) {
        const std::size_t slot = next.fetch_add(1);
        if (slot >= order.size()) return;
        const std::size_t i = order[slot];
        ExposureRow& row = rows[slot];
        row.day = day;
        row.agent = i;
        try {
          auto session = net.session();
          channel::MeteringTransport meter(session ? *session : *net.in_process);
          {
            GatedTransport gated(meter, gate, slot);
            row.protocol = people[i].agent->query(gated, now);
          }
          row.bytes_up = meter.meter().total_up();
          row.bytes_down = meter.meter().total_down();
          std::lock_guard lock(error_mutex);
          accumulate(result.up, meter.meter().up());
          accumulate(result.down, meter.meter().down());
        } catch (...) {
          std::lock_guard lock(error_mutex);
          if (!error) error = std::current_exception();
        }
      }
    };
    const std::size_t workers = std::min<std::size_t>(static_cast<std::size_t>(config.threads), order.size());
    std::vector<std::thread> pool;
    for (std::size_t w = 1; w < workers; ++w) pool.emplace_back(worker);
    worker();
    for (auto& th : pool) th.join();
    if (error) std::rethrow_exception(error);

    const std::int64_t floor = now - geo::kRetentionSeconds;
    for (auto& row : rows) {
      const Person& p = people[row.agent];
      const auto mine = geo::quantize(geo::slice(p.truth, now - proto.query_window_s, now),
                                      proto.quantization.precision, proto.quantization.geo_bin_s);
      row.oracle.geolocation_risk = oracle::geolocation_risk(mine, patient_visits, config.delta_bins,
                                                             config.weight_quantum, proto.quantization.geo_bin_s, floor);
      row.oracle.ephid_contact_count =
          oracle::contact_count(p.ear, patient_ephids, proto.min_contact_s, now - proto.query_window_s, floor);
    }
    std::sort(rows.begin(), rows.end(), [](const auto& a, const auto& b) { return a.agent < b.agent; });
    for (auto& row : rows) result.exposures.push_back(std::move(row));
  }

  result.collector_cells = net.collector->cell_count();
  result.collector_ephid_keys = net.collector->ephid_key_count();
  if (net.collector_server) net.collector_server->stop();
  if (net.interpreter_server) net.interpreter_server->stop();
  result.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - wall_start).count();
  return result;
}

}  // namespace tracekit::harness
