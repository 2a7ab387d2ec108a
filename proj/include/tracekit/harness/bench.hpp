// Copyright 2026 The tracekit Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "tracekit/channel.hpp"
#include "tracekit/geo.hpp"

namespace tracekit::harness {

struct BenchOptions {
  unsigned key_bits = 2048;
  std::vector<int> ks{5, 10, 25, 50, 100};
  std::uint64_t seed = 7;
  int op_samples = 20;
  int upload_days = 14;
  int daily_contacts = 108;
  // Expected matrix hits per queried trajectory = hit_rate * daily_contacts * k.
  double hit_rate = 0.013;
  geo::GeoBox region{{37.50, 126.95}, {37.56, 127.03}};
};

struct OpLatency {
  std::string op;
  int samples = 0;
  double mean_ms = 0.0;
  double max_ms = 0.0;
};

struct BenchPoint {
  int k = 0;
  std::uint64_t upload_bytes = 0;  // framed PatientUpload
  std::size_t upload_sightings = 0;
  std::array<channel::Traffic, wire::kKindCount> healthy_up{};
  std::array<channel::Traffic, wire::kKindCount> healthy_down{};
  std::uint64_t healthy_up_bytes = 0;
  std::uint64_t healthy_down_bytes = 0;
  std::size_t eph_pairs = 0;
  std::size_t seeded_hits = 0;

  std::uint64_t healthy_total() const { return healthy_up_bytes + healthy_down_bytes; }
};

struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
};

// Ordinary least squares; r2 is 1 when y is constant and exactly fit.
LinearFit fit_line(const std::vector<double>& x, const std::vector<double>& y);

struct BenchResult {
  BenchOptions options;
  std::vector<OpLatency> ops;
  std::vector<BenchPoint> points;
  LinearFit upload_fit;  // upload bytes against k
};

// Paillier op latencies, then for each k: one 14-day patient upload and one
// healthy user's daily query over a population whose EphID table is seeded
// with the expected hit density.
BenchResult run_bench(const BenchOptions& options);

}  // namespace tracekit::harness
