// Copyright 2026 The tracekit Authors
// SPDX-License-Identifier: Apache-2.0

#include "tracekit/harness/report.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "tracekit/errors.hpp"

namespace tracekit::harness {
namespace {

using nlohmann::json;

std::string line(const json& j) { return j.dump() + "\n"; }

std::string mb(std::uint64_t bytes) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3f", static_cast<double>(bytes) / 1e6);
  return buf;
}

std::string fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

std::string pad(const std::string& s, std::size_t width) {
  return s.size() >= width ? s : std::string(width - s.size(), ' ') + s;
}

}  // namespace

std::string scenario_text(const ScenarioResult& r) {
  const auto& c = r.config;
  std::ostringstream o;
  o << "scenario " << c.name << "  seed " << c.seed << "\n"
    << "agents " << c.agents << "  days " << c.days << "  patients " << c.patients.size() << "  key bits "
    << c.key_bits << "  k " << c.protocol.k << "  k' " << c.protocol.k_prime << "\n"
    << "broadcasts " << r.broadcasts << "  receptions accepted " << r.receptions_accepted << "  rejected "
    << r.receptions_rejected << "\n"
    << "relayed " << r.relay.relayed << "  relay accepted " << r.relay.accepted << "\n"
    << "collector cells " << r.collector_cells << "  ephid keys " << r.collector_ephid_keys << "\n\n";

  o << "uploads\n" << "  day agent   up_bytes down_bytes trajectories sightings real covered ack\n";
  for (const auto& u : r.uploads) {
    o << pad(std::to_string(u.day), 5) << pad(std::to_string(u.agent), 6) << pad(std::to_string(u.bytes_up), 11)
      << pad(std::to_string(u.bytes_down), 11) << pad(std::to_string(u.trajectories), 13)
      << pad(std::to_string(u.ephid_sightings), 10) << pad(std::to_string(u.real_advertised), 5)
      << pad(u.covers_real ? "yes" : "NO", 8) << " " << u.ack << "\n";
  }

  o << "\nexposures\n" << "  day agent     risk   oracle contacts oracle   up_bytes down_bytes verdict\n";
  for (const auto& e : r.exposures) {
    o << pad(std::to_string(e.day), 5) << pad(std::to_string(e.agent), 6)
      << pad(std::to_string(e.protocol.geolocation_risk), 9) << pad(std::to_string(e.oracle.geolocation_risk), 9)
      << pad(std::to_string(e.protocol.ephid_contact_count), 9)
      << pad(std::to_string(e.oracle.ephid_contact_count), 7) << pad(std::to_string(e.bytes_up), 11)
      << pad(std::to_string(e.bytes_down), 11) << (e.matches() ? " ok" : " MISMATCH") << "\n";
  }

  o << "\ntraffic\n" << "  kind                   up_frames   up_bytes down_frames down_bytes\n";
  for (int k = 1; k <= wire::kKindCount; ++k) {
    const auto& u = r.up[k - 1];
    const auto& d = r.down[k - 1];
    if (u.frames == 0 && d.frames == 0) continue;
    std::string name(wire::kind_name(static_cast<wire::Kind>(k)));
    o << "  " << name << std::string(name.size() < 22 ? 22 - name.size() : 1, ' ') << pad(std::to_string(u.frames), 10)
      << pad(std::to_string(u.bytes), 11) << pad(std::to_string(d.frames), 12) << pad(std::to_string(d.bytes), 11)
      << "\n";
  }

  o << "\nsummary: " << r.exposures.size() << " queries, " << r.mismatches() << " mismatches, "
    << r.positive_geolocation() << " with geolocation risk, " << r.positive_contacts() << " with contacts\n";
  o << (r.mismatches() == 0 ? "RESULT PASS\n" : "RESULT FAIL\n");
  return o.str();
}

std::string scenario_jsonl(const ScenarioResult& r) {
  const auto& c = r.config;
  std::string out;
  json patients = json::object();
  for (const auto& [agent, day] : c.patients) patients[std::to_string(agent)] = day;
  out += line({{"type", "config"},
               {"name", c.name},
               {"seed", c.seed},
               {"agents", c.agents},
               {"days", c.days},
               {"start", c.start},
               {"key_bits", c.key_bits},
               {"k", c.protocol.k},
               {"k_prime", c.protocol.k_prime},
               {"phi_m", c.protocol.phi_m},
               {"rotation_s", c.protocol.rotation_s},
               {"delta_bins", c.delta_bins},
               {"geo_bin_s", c.protocol.quantization.geo_bin_s},
               {"min_contact_s", c.protocol.min_contact_s},
               {"query_window_s", c.protocol.query_window_s},
               {"patients", patients},
               {"colocations", c.colocations.size()},
               {"relays", c.relays.size()}});
  for (const auto& u : r.uploads) {
    out += line({{"type", "upload"},
                 {"day", u.day},
                 {"agent", u.agent},
                 {"bytes_up", u.bytes_up},
                 {"bytes_down", u.bytes_down},
                 {"trajectories", u.trajectories},
                 {"ephid_sightings", u.ephid_sightings},
                 {"real_advertised", u.real_advertised},
                 {"covers_real", u.covers_real},
                 {"ack", u.ack}});
  }
  for (const auto& e : r.exposures) {
    out += line({{"type", "exposure"},
                 {"day", e.day},
                 {"agent", e.agent},
                 {"geolocation_risk", e.protocol.geolocation_risk},
                 {"geolocation_oracle", e.oracle.geolocation_risk},
                 {"contacts", e.protocol.ephid_contact_count},
                 {"contacts_oracle", e.oracle.ephid_contact_count},
                 {"match", e.matches()},
                 {"bytes_up", e.bytes_up},
                 {"bytes_down", e.bytes_down}});
  }
  for (int k = 1; k <= wire::kKindCount; ++k) {
    const auto& u = r.up[k - 1];
    const auto& d = r.down[k - 1];
    if (u.frames == 0 && d.frames == 0) continue;
    out += line({{"type", "traffic"},
                 {"kind", wire::kind_name(static_cast<wire::Kind>(k))},
                 {"up_frames", u.frames},
                 {"up_bytes", u.bytes},
                 {"down_frames", d.frames},
                 {"down_bytes", d.bytes}});
  }
  out += line({{"type", "summary"},
               {"queries", r.exposures.size()},
               {"mismatches", r.mismatches()},
               {"positive_geolocation", r.positive_geolocation()},
               {"positive_contacts", r.positive_contacts()},
               {"broadcasts", r.broadcasts},
               {"receptions_accepted", r.receptions_accepted},
               {"receptions_rejected", r.receptions_rejected},
               {"relayed", r.relay.relayed},
               {"relay_accepted", r.relay.accepted},
               {"collector_cells", r.collector_cells},
               {"collector_ephid_keys", r.collector_ephid_keys},
               {"pass", r.mismatches() == 0}});
  return out;
}

std::string scenario_timing_jsonl(const ScenarioResult& r) {
  return line({{"type", "timing"}, {"name", r.config.name}, {"wall_seconds", r.wall_seconds}});
}

std::string bench_text(const BenchResult& r) {
  std::ostringstream o;
  o << "bench  key bits " << r.options.key_bits << "  seed " << r.options.seed << "  contacts/day "
    << r.options.daily_contacts << "  hit rate " << fixed(r.options.hit_rate, 4) << "\n\n";
  o << "paillier ops\n" << "  op          samples   mean_ms    max_ms\n";
  for (const auto& op : r.ops) {
    o << "  " << op.op << std::string(op.op.size() < 10 ? 10 - op.op.size() : 1, ' ') << pad(std::to_string(op.samples), 9)
      << pad(fixed(op.mean_ms, 3), 10) << pad(fixed(op.max_ms, 3), 10) << "\n";
  }
  o << "\ncommunication (MB)\n"
    << "     k   upload  sightings  healthy_up healthy_down healthy_total  eph_pairs  hits\n";
  for (const auto& p : r.points) {
    o << pad(std::to_string(p.k), 6) << pad(mb(p.upload_bytes), 9) << pad(std::to_string(p.upload_sightings), 11)
      << pad(mb(p.healthy_up_bytes), 12) << pad(mb(p.healthy_down_bytes), 13) << pad(mb(p.healthy_total()), 14)
      << pad(std::to_string(p.eph_pairs), 11) << pad(std::to_string(p.seeded_hits), 6) << "\n";
  }
  o << "\nupload bytes = " << fixed(r.upload_fit.slope, 1) << " * k + " << fixed(r.upload_fit.intercept, 1)
    << "   R^2 = " << fixed(r.upload_fit.r2, 6) << "\n";
  return o.str();
}

std::string bench_jsonl(const BenchResult& r) {
  std::string out;
  out += line({{"type", "bench_config"},
               {"key_bits", r.options.key_bits},
               {"seed", r.options.seed},
               {"ks", r.options.ks},
               {"upload_days", r.options.upload_days},
               {"daily_contacts", r.options.daily_contacts},
               {"hit_rate", r.options.hit_rate}});
  for (const auto& op : r.ops) {
    out += line({{"type", "op"}, {"op", op.op}, {"samples", op.samples}, {"mean_ms", op.mean_ms}, {"max_ms", op.max_ms}});
  }
  for (const auto& p : r.points) {
    json up = json::object(), down = json::object();
    for (int k = 1; k <= wire::kKindCount; ++k) {
      const std::string name(wire::kind_name(static_cast<wire::Kind>(k)));
      if (p.healthy_up[k - 1].frames) up[name] = p.healthy_up[k - 1].bytes;
      if (p.healthy_down[k - 1].frames) down[name] = p.healthy_down[k - 1].bytes;
    }
    out += line({{"type", "point"},
                 {"k", p.k},
                 {"upload_bytes", p.upload_bytes},
                 {"upload_sightings", p.upload_sightings},
                 {"healthy_up_bytes", p.healthy_up_bytes},
                 {"healthy_down_bytes", p.healthy_down_bytes},
                 {"healthy_up_by_kind", up},
                 {"healthy_down_by_kind", down},
                 {"eph_pairs", p.eph_pairs},
                 {"seeded_hits", p.seeded_hits}});
  }
  out += line({{"type", "upload_fit"},
               {"slope", r.upload_fit.slope},
               {"intercept", r.upload_fit.intercept},
               {"r2", r.upload_fit.r2}});
  return out;
}

void write_file(const std::filesystem::path& path, const std::string& content) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw ConfigError("cannot write " + tmp.string());
    out << content;
    if (!out.flush()) throw ConfigError("write failed: " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

}  // namespace tracekit::harness
