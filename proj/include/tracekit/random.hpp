// Copyright 2026 The tracekit Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>

#include <gmpxx.h>

namespace tracekit {

/// ChaCha20 keystream used as the single source of randomness for keys,
/// encryption nonces, masks, shuffles and trajectory synthesis.
///
/// A seeded instance is fully deterministic, which is what tests and the
/// simulation harness rely on. `from_os()` keys the stream from OS entropy.
/// Not thread-safe; callers that share one instance serialize access.
class RandomSource {
 public:
  using result_type = std::uint64_t;

  explicit RandomSource(std::uint64_t seed);
  explicit RandomSource(const std::array<std::uint8_t, 32>& key);

  static RandomSource from_os();

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }
  result_type operator()() { return next_u64(); }

  void fill(std::span<std::uint8_t> out);
  std::uint64_t next_u64();

  // Uniform in [0, bound). bound must be > 0.
  std::uint64_t uniform(std::uint64_t bound);
  // Uniform in [lo, hi].
  std::int64_t uniform_between(std::int64_t lo, std::int64_t hi);
  // Uniform in [0, 1) with 53 bits of resolution.
  double uniform01();

  mpz_class bits(unsigned nbits);
  // Uniform in [0, bound) by rejection sampling.
  mpz_class below(const mpz_class& bound);

  // Independent stream derived from this one's key and `stream`; does not
  // advance this source.
  RandomSource fork(std::uint64_t stream) const;

 private:
  void refill();

  std::array<std::uint8_t, 32> key_{};
  std::uint64_t block_ = 0;
  std::array<std::uint8_t, 512> buffer_{};
  std::size_t offset_ = buffer_.size();
};

// Fisher-Yates over any random-access range.
template <typename Range>
void shuffle(Range& range, RandomSource& rng) {
  using std::swap;
  const auto n = static_cast<std::uint64_t>(std::size(range));
  for (std::uint64_t i = n; i > 1; --i) {
    const std::uint64_t j = rng.uniform(i);
    swap(range[i - 1], range[j]);
  }
}

}  // namespace tracekit
