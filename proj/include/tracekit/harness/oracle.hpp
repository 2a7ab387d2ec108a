// Copyright 2026 The tracekit Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <vector>

#include "tracekit/ephid.hpp"
#include "tracekit/geo.hpp"

// Plaintext recomputations of what the encrypted protocol should output.
// Nothing here touches ciphertexts or the protocol's own data structures.
namespace tracekit::harness::oracle {

// max(1, q (1 - d / delta)) rounded half up; q for delta == 0.
std::uint64_t decay_weight(int d, int delta_bins, std::uint64_t quantum);

// Sum over query visits (l, t) and patient visits (l, tau) with
// 0 <= t - tau <= delta of the decay weight, counting only cells still
// retained: (t + 1) * bin_s >= floor_s.
std::uint64_t geolocation_risk(const geo::VisitSet& query, const std::vector<geo::VisitSet>& patients,
                               int delta_bins, std::uint64_t quantum, std::int64_t bin_s, std::int64_t floor_s);

/// First and last time one receiver heard one EphID.
struct Heard {
  std::int64_t first = 0;
  std::int64_t last = 0;
};

/// Ground-truth reception bookkeeping for one receiver.
class Ear {
 public:
  // Keeps the sighting iff the cell center lies within phi of `here`.
  bool hear(const ephid::EphId& e, std::int64_t now, const geo::GeoPoint& here, double phi_m);
  void forget_before(std::int64_t floor_s);
  const std::map<ephid::EphId, Heard>& heard() const { return heard_; }

 private:
  std::map<ephid::EphId, Heard> heard_;
};

// Records heard for at least min_contact_s whose first minute starts at or
// after window_from_s, matched against each patient's uploaded real entries
// whose minute is still retained ((minute + 1) * 60 >= floor_s).
std::uint64_t contact_count(const Ear& ear, const std::vector<std::set<ephid::TemporalEphId>>& patients,
                            std::int64_t min_contact_s, std::int64_t window_from_s, std::int64_t floor_s);

}  // namespace tracekit::harness::oracle
