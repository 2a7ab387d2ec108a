// Copyright 2026 The tracekit Authors
// SPDX-License-Identifier: Apache-2.0

#include "tracekit/harness/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <boost/algorithm/string.hpp>
#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "tracekit/errors.hpp"

namespace tracekit::harness {
namespace {

namespace pt = boost::property_tree;

[[noreturn]] void fail(const std::string& field, const std::string& why) {
  throw ConfigError(field + ": " + why);
}

template <typename T>
T number(const std::string& field, std::string text) {
  boost::algorithm::trim(text);
  T v{};
  const char* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, v);
  if (ec != std::errc{} || ptr != end || text.empty()) fail(field, "not a number: '" + text + "'");
  if constexpr (std::is_floating_point_v<T>) {
    if (!std::isfinite(v)) fail(field, "not finite");
  }
  return v;
}

std::vector<std::string> split_list(const std::string& text, char sep = ',') {
  std::vector<std::string> parts;
  boost::algorithm::split(parts, text, [sep](char c) { return c == sep; });
  for (auto& p : parts) boost::algorithm::trim(p);
  return parts;
}

std::string fmt(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

int parse_clock(const std::string& field, const std::string& hhmm) {
  auto parts = split_list(hhmm, ':');
  if (parts.size() != 2) fail(field, "expected HH:MM, got '" + hhmm + "'");
  int h = number<int>(field, parts[0]);
  int m = number<int>(field, parts[1]);
  if (h < 0 || h > 24 || m < 0 || m > 59 || (h == 24 && m != 0)) fail(field, "clock out of range: " + hhmm);
  return h * 3600 + m * 60;
}

std::string render_clock(int s) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%02d:%02d", s / 3600, (s / 60) % 60);
  return buf;
}

/// Reads typed values out of one section and remembers which keys were used.
class Section {
 public:
  Section(const pt::ptree& root, std::string name) : name_(std::move(name)) {
    if (auto child = root.get_child_optional(pt::ptree::path_type(name_, '\0'))) node_ = &*child;
  }

  template <typename T>
  void read(const char* key, T& out) {
    if (!node_) return;
    auto v = node_->get_optional<std::string>(pt::ptree::path_type(key, '\0'));
    if (!v) return;
    used_.insert(key);
    const std::string field = name_ + "." + key;
    if constexpr (std::is_same_v<T, std::string>) {
      out = boost::algorithm::trim_copy(*v);
    } else if constexpr (std::is_same_v<T, bool>) {
      std::string s = boost::algorithm::to_lower_copy(boost::algorithm::trim_copy(*v));
      if (s == "1" || s == "true" || s == "yes") {
        out = true;
      } else if (s == "0" || s == "false" || s == "no") {
        out = false;
      } else {
        fail(field, "not a boolean: '" + *v + "'");
      }
    } else {
      out = number<T>(field, *v);
    }
  }

  // Every key of the section, for free-form sections.
  std::vector<std::pair<std::string, std::string>> entries() {
    std::vector<std::pair<std::string, std::string>> out;
    if (!node_) return out;
    for (const auto& [k, v] : *node_) {
      used_.insert(k);
      out.emplace_back(k, v.data());
    }
    return out;
  }

  void reject_unknown() const {
    if (!node_) return;
    for (const auto& [k, v] : *node_) {
      if (!used_.count(k)) fail(name_ + "." + k, "unknown key");
    }
  }

 private:
  std::string name_;
  const pt::ptree* node_ = nullptr;
  std::set<std::string> used_;
};

std::size_t agent_index(const std::string& field, const std::string& text) {
  return number<std::size_t>(field, text);
}

}  // namespace

void ScenarioConfig::validate() const {
  if (name.empty()) fail("scenario.name", "empty");
  for (char c : name) {
    if (!std::isalnum(static_cast<unsigned char>(c)) && c != '-' && c != '_') fail("scenario.name", "use [A-Za-z0-9_-]");
  }
  if (agents < 1 || agents > 5000) fail("scenario.agents", "must be in [1, 5000]");
  if (days < 1 || days > 60) fail("scenario.days", "must be in [1, 60]");
  if (start % 86400 != 0) fail("scenario.start", "must be a UTC midnight");
  if (key_bits < 16 || key_bits > 8192) fail("scenario.key_bits", "must be in [16, 8192]");
  if (!(radio_range_m > 0 && radio_range_m <= 1000)) fail("scenario.radio_range_m", "must be in (0, 1000]");
  if (threads < 1 || threads > 256) fail("scenario.threads", "must be in [1, 256]");
  if (!(region.min.lat < region.max.lat && region.min.lon < region.max.lon)) fail("region", "empty box");
  try {
    geo::check_point(region.min);
    geo::check_point(region.max);
  } catch (const DomainError& e) {
    fail("region", e.what());
  }

  const auto& p = protocol;
  if (p.k < 0 || p.k > 1000) fail("protocol.k", "must be in [0, 1000]");
  if (p.k_prime < 0 || p.k_prime > 1000) fail("protocol.k_prime", "must be in [0, 1000]");
  if (!(p.phi_m >= 0 && p.phi_m <= 100000)) fail("protocol.phi_m", "must be in [0, 100000]");
  if (p.rotation_s < 60 || p.rotation_s % 60 != 0) fail("protocol.rotation_s", "must be a positive multiple of 60");
  if (p.min_contact_s < 0 || p.min_contact_s > 86400) fail("protocol.min_contact_s", "must be in [0, 86400]");
  if (p.query_window_s < 60 || p.query_window_s > geo::kRetentionSeconds) {
    fail("protocol.query_window_s", "must be in [60, 1209600]");
  }
  if (p.quantization.geo_bin_s < 60 || 86400 % p.quantization.geo_bin_s != 0) {
    fail("protocol.geo_bin_s", "must divide a day and be at least 60");
  }
  if (p.quantization.ephid_bin_s != 60) fail("protocol.ephid_bin_s", "EphIDs are logged per minute; must be 60");
  if (delta_bins < 0 || delta_bins > 1000) fail("protocol.delta_bins", "must be in [0, 1000]");
  if (weight_quantum < 1 || weight_quantum > 1'000'000) fail("protocol.weight_quantum", "must be in [1, 1000000]");
  if (token_ttl_s < 1) fail("protocol.token_ttl_s", "must be positive");
  try {
    p.policy.validate();
  } catch (const DomainError& e) {
    fail("privacy", e.what());
  }

  if (!(movement.log_hours_min > 0 && movement.log_hours_min <= movement.log_hours_max &&
        movement.log_hours_max <= 20)) {
    fail("movement.log_hours", "need 0 < min <= max <= 20");
  }
  if (!(movement.day_start_hour >= 1 && movement.day_start_hour + 1 + movement.log_hours_max <= 24)) {
    fail("movement.day_start_hour", "logging window must stay inside the day");
  }
  if (!(movement.leisure_probability >= 0 && movement.leisure_probability <= 1)) {
    fail("movement.leisure_probability", "must be in [0, 1]");
  }
  if (!(movement.min_anchor_separation_m >= 0)) fail("movement.min_anchor_separation_m", "must be >= 0");

  for (const auto& [agent, day] : patients) {
    const std::string f = "patients." + std::to_string(agent);
    if (agent >= agents) fail(f, "no such agent");
    if (day < 0 || day >= days) fail(f, "diagnosis day outside the scenario");
    if (!adopts(agent)) fail(f, "patient does not run the app");
  }
  auto check_window = [&](const std::string& f, std::size_t a, std::size_t b, int day, int start_min, int dur) {
    if (a >= agents || b >= agents) fail(f, "no such agent");
    if (a == b) fail(f, "needs two distinct agents");
    if (day < 0 || day >= days) fail(f, "day outside the scenario");
    if (start_min < 0 || dur < 1 || start_min + dur > 1440) fail(f, "window must lie inside the day");
  };
  for (std::size_t i = 0; i < colocations.size(); ++i) {
    const auto& e = colocations[i];
    check_window("colocation #" + std::to_string(i), e.a, e.b, e.day, e.start_minute, e.duration_minutes);
    if (e.venue) {
      try {
        geo::check_point(*e.venue);
      } catch (const DomainError& err) {
        fail("colocation #" + std::to_string(i), err.what());
      }
    }
  }
  for (std::size_t i = 0; i < relays.size(); ++i) {
    const auto& e = relays[i];
    check_window("relay #" + std::to_string(i), e.patient, e.victim, e.day, e.start_minute, e.duration_minutes);
    if (!(e.distance_m > 0 && e.distance_m <= 1e6)) fail("relay #" + std::to_string(i), "distance must be in (0, 1e6]");
  }
  if (adoption.size() > agents) fail("adoption", "entry for a missing agent");
}

ScenarioConfig parse_config(std::istream& in) {
  pt::ptree root;
  try {
    pt::read_ini(in, root);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError(std::string("ini: ") + e.what());
  }
  static const std::set<std::string> kSections = {"scenario", "region",    "protocol", "privacy", "patients",
                                                  "movement", "colocation", "relay",   "adoption"};
  for (const auto& [k, v] : root) {
    if (!kSections.count(k)) fail(k, "unknown section");
  }

  ScenarioConfig c;
  {
    Section s(root, "scenario");
    s.read("name", c.name);
    s.read("seed", c.seed);
    s.read("agents", c.agents);
    s.read("days", c.days);
    s.read("start", c.start);
    s.read("key_bits", c.key_bits);
    s.read("radio_range_m", c.radio_range_m);
    s.read("threads", c.threads);
    s.reject_unknown();
  }
  {
    Section s(root, "region");
    s.read("min_lat", c.region.min.lat);
    s.read("min_lon", c.region.min.lon);
    s.read("max_lat", c.region.max.lat);
    s.read("max_lon", c.region.max.lon);
    s.reject_unknown();
  }
  {
    Section s(root, "protocol");
    auto& p = c.protocol;
    s.read("k", p.k);
    s.read("k_prime", p.k_prime);
    s.read("phi_m", p.phi_m);
    s.read("rotation_s", p.rotation_s);
    s.read("min_contact_s", p.min_contact_s);
    s.read("query_window_s", p.query_window_s);
    s.read("geo_bin_s", p.quantization.geo_bin_s);
    s.read("ephid_bin_s", p.quantization.ephid_bin_s);
    s.read("delta_bins", c.delta_bins);
    s.read("weight_quantum", c.weight_quantum);
    s.read("token_ttl_s", c.token_ttl_s);
    s.reject_unknown();
  }
  {
    Section s(root, "privacy");
    for (const auto& [key, value] : s.entries()) {
      const std::string f = "privacy." + key;
      if (key == "quiet_hours") {
        for (const auto& range : split_list(value)) {
          if (range.empty()) continue;
          auto ends = split_list(range, '-');
          if (ends.size() != 2) fail(f, "expected HH:MM-HH:MM");
          c.protocol.policy.quiet_hours.push_back({parse_clock(f, ends[0]), parse_clock(f, ends[1])});
        }
      } else if (boost::algorithm::starts_with(key, "zone")) {
        auto parts = split_list(value);
        if (parts.size() != 3) fail(f, "expected lat,lon,radius_m");
        c.protocol.policy.zones.push_back(
            {{number<double>(f, parts[0]), number<double>(f, parts[1])}, number<double>(f, parts[2])});
      } else {
        fail(f, "unknown key");
      }
    }
  }
  {
    Section s(root, "patients");
    for (const auto& [key, value] : s.entries()) {
      const std::string f = "patients." + key;
      c.patients[agent_index(f, key)] = number<int>(f, value);
    }
  }
  {
    Section s(root, "movement");
    s.read("sample_interval_s", c.movement.sample_interval_s);
    s.read("log_hours_min", c.movement.log_hours_min);
    s.read("log_hours_max", c.movement.log_hours_max);
    s.read("day_start_hour", c.movement.day_start_hour);
    s.read("leisure_probability", c.movement.leisure_probability);
    s.read("min_anchor_separation_m", c.movement.min_anchor_separation_m);
    s.reject_unknown();
    if (c.movement.sample_interval_s != 15) fail("movement.sample_interval_s", "only 15 s logging is modelled");
  }
  {
    Section s(root, "colocation");
    for (const auto& [key, value] : s.entries()) {
      const std::string f = "colocation." + key;
      auto parts = split_list(value);
      if (parts.size() != 5 && parts.size() != 7) fail(f, "expected a,b,day,start_min,duration_min[,lat,lon]");
      ColocationEvent e;
      e.a = agent_index(f, parts[0]);
      e.b = agent_index(f, parts[1]);
      e.day = number<int>(f, parts[2]);
      e.start_minute = number<int>(f, parts[3]);
      e.duration_minutes = number<int>(f, parts[4]);
      if (parts.size() == 7) e.venue = geo::GeoPoint{number<double>(f, parts[5]), number<double>(f, parts[6])};
      c.colocations.push_back(e);
    }
  }
  {
    Section s(root, "relay");
    for (const auto& [key, value] : s.entries()) {
      const std::string f = "relay." + key;
      auto parts = split_list(value);
      if (parts.size() != 6) fail(f, "expected patient,victim,day,start_min,duration_min,distance_m");
      RelayEvent e;
      e.patient = agent_index(f, parts[0]);
      e.victim = agent_index(f, parts[1]);
      e.day = number<int>(f, parts[2]);
      e.start_minute = number<int>(f, parts[3]);
      e.duration_minutes = number<int>(f, parts[4]);
      e.distance_m = number<double>(f, parts[5]);
      c.relays.push_back(e);
    }
  }
  {
    Section s(root, "adoption");
    for (const auto& [key, value] : s.entries()) {
      const std::string f = "adoption." + key;
      std::size_t agent = agent_index(f, key);
      if (agent >= 100000) fail(f, "no such agent");
      bool adopts = true;
      std::string v = boost::algorithm::trim_copy(value);
      if (v == "1") {
        adopts = true;
      } else if (v == "0") {
        adopts = false;
      } else {
        fail(f, "expected 0 or 1");
      }
      if (c.adoption.size() <= agent) c.adoption.resize(agent + 1, true);
      c.adoption[agent] = adopts;
    }
  }
  c.protocol.region = c.region;
  c.movement.region = c.region;
  c.validate();
  return c;
}

ScenarioConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open " + path.string());
  return parse_config(in);
}

std::string render_config(const ScenarioConfig& c) {
  std::ostringstream o;
  o << "[scenario]\n"
    << "name = " << c.name << "\nseed = " << c.seed << "\nagents = " << c.agents << "\ndays = " << c.days
    << "\nstart = " << c.start << "\nkey_bits = " << c.key_bits << "\nradio_range_m = " << fmt(c.radio_range_m)
    << "\nthreads = " << c.threads << "\n\n";
  o << "[region]\n"
    << "min_lat = " << fmt(c.region.min.lat) << "\nmin_lon = " << fmt(c.region.min.lon)
    << "\nmax_lat = " << fmt(c.region.max.lat) << "\nmax_lon = " << fmt(c.region.max.lon) << "\n\n";
  const auto& p = c.protocol;
  o << "[protocol]\n"
    << "k = " << p.k << "\nk_prime = " << p.k_prime << "\nphi_m = " << fmt(p.phi_m) << "\nrotation_s = " << p.rotation_s
    << "\nmin_contact_s = " << p.min_contact_s << "\nquery_window_s = " << p.query_window_s
    << "\ngeo_bin_s = " << p.quantization.geo_bin_s << "\nephid_bin_s = " << p.quantization.ephid_bin_s
    << "\ndelta_bins = " << c.delta_bins << "\nweight_quantum = " << c.weight_quantum
    << "\ntoken_ttl_s = " << c.token_ttl_s << "\n\n";
  o << "[privacy]\n";
  if (!p.policy.quiet_hours.empty()) {
    o << "quiet_hours = ";
    for (std::size_t i = 0; i < p.policy.quiet_hours.size(); ++i) {
      const auto& q = p.policy.quiet_hours[i];
      o << (i ? ", " : "") << render_clock(q.start_s) << "-" << render_clock(q.end_s);
    }
    o << "\n";
  }
  for (std::size_t i = 0; i < p.policy.zones.size(); ++i) {
    const auto& z = p.policy.zones[i];
    o << "zone" << i << " = " << fmt(z.center.lat) << ", " << fmt(z.center.lon) << ", " << fmt(z.radius_m) << "\n";
  }
  o << "\n[patients]\n";
  for (const auto& [agent, day] : c.patients) o << agent << " = " << day << "\n";
  o << "\n[movement]\n"
    << "sample_interval_s = " << c.movement.sample_interval_s << "\nlog_hours_min = " << fmt(c.movement.log_hours_min)
    << "\nlog_hours_max = " << fmt(c.movement.log_hours_max)
    << "\nday_start_hour = " << fmt(c.movement.day_start_hour)
    << "\nleisure_probability = " << fmt(c.movement.leisure_probability)
    << "\nmin_anchor_separation_m = " << fmt(c.movement.min_anchor_separation_m) << "\n\n";
  o << "[colocation]\n";
  for (std::size_t i = 0; i < c.colocations.size(); ++i) {
    const auto& e = c.colocations[i];
    o << "event" << i << " = " << e.a << ", " << e.b << ", " << e.day << ", " << e.start_minute << ", "
      << e.duration_minutes;
    if (e.venue) o << ", " << fmt(e.venue->lat) << ", " << fmt(e.venue->lon);
    o << "\n";
  }
  o << "\n[relay]\n";
  for (std::size_t i = 0; i < c.relays.size(); ++i) {
    const auto& e = c.relays[i];
    o << "event" << i << " = " << e.patient << ", " << e.victim << ", " << e.day << ", " << e.start_minute << ", "
      << e.duration_minutes << ", " << fmt(e.distance_m) << "\n";
  }
  o << "\n[adoption]\n";
  for (std::size_t i = 0; i < c.adoption.size(); ++i) {
    if (!c.adoption[i]) o << i << " = 0\n";
  }
  return o.str();
}

}  // namespace tracekit::harness
