// Copyright 2026 The tracekit Authors
// SPDX-License-Identifier: Apache-2.0

#include "tracekit/harness/oracle.hpp"

#include <algorithm>
#include <unordered_map>

namespace tracekit::harness::oracle {

std::uint64_t decay_weight(int d, int delta_bins, std::uint64_t quantum) {
  if (delta_bins == 0) return quantum;
  // floor(q (delta - d) / delta + 1/2) without floating point.
  const auto num = 2 * quantum * static_cast<std::uint64_t>(delta_bins - d) + static_cast<std::uint64_t>(delta_bins);
  return std::max<std::uint64_t>(1, num / (2 * static_cast<std::uint64_t>(delta_bins)));
}

std::uint64_t geolocation_risk(const geo::VisitSet& query, const std::vector<geo::VisitSet>& patients,
                               int delta_bins, std::uint64_t quantum, std::int64_t bin_s, std::int64_t floor_s) {
  std::unordered_map<geo::GeoCell, std::vector<std::int64_t>> by_cell;
  for (const auto& p : patients) {
    for (const auto& v : p) by_cell[v.cell].push_back(v.bin);
  }
  std::uint64_t risk = 0;
  for (const auto& q : query) {
    if ((q.bin + 1) * bin_s < floor_s) continue;
    const auto it = by_cell.find(q.cell);
    if (it == by_cell.end()) continue;
    for (const std::int64_t tau : it->second) {
      const std::int64_t d = q.bin - tau;
      if (d >= 0 && d <= delta_bins) risk += decay_weight(static_cast<int>(d), delta_bins, quantum);
    }
  }
  return risk;
}

bool Ear::hear(const ephid::EphId& e, std::int64_t now, const geo::GeoPoint& here, double phi_m) {
  if (geo::distance_meters(geo::geohash_decode_box(e.cell).center(), here) > phi_m) return false;
  auto [it, fresh] = heard_.try_emplace(e, Heard{now, now});
  if (!fresh) it->second.last = now;
  return true;
}

void Ear::forget_before(std::int64_t floor_s) {
  std::erase_if(heard_, [&](const auto& kv) { return kv.second.last < floor_s; });
}

std::uint64_t contact_count(const Ear& ear, const std::vector<std::set<ephid::TemporalEphId>>& patients,
                            std::int64_t min_contact_s, std::int64_t window_from_s, std::int64_t floor_s) {
  std::uint64_t count = 0;
  for (const auto& [id, h] : ear.heard()) {
    if (h.last - h.first < min_contact_s) continue;
    const std::int64_t minute = geo::bin_of(h.first, 60);
    if (minute * 60 < window_from_s || (minute + 1) * 60 < floor_s) continue;
    const ephid::TemporalEphId key{id.cell, id.rand, minute};
    for (const auto& p : patients) count += p.count(key);
  }
  return count;
}

}  // namespace tracekit::harness::oracle
