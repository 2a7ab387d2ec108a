// Copyright 2026 The tracekit Authors
// SPDX-License-Identifier: Apache-2.0

#include "tracekit/random.hpp"

#include <sodium.h>

#include <cstring>
#include <stdexcept>
#include <vector>

namespace tracekit {
namespace {

void ensure_sodium() {
  static const bool ready = [] {
    if (sodium_init() < 0) throw std::runtime_error("libsodium initialisation failed");
    return true;
  }();
  (void)ready;
}

std::array<std::uint8_t, 32> key_from_seed(std::uint64_t seed) {
  ensure_sodium();
  std::array<std::uint8_t, 8> in{};
  for (int i = 0; i < 8; ++i) in[i] = static_cast<std::uint8_t>(seed >> (56 - 8 * i));
  std::array<std::uint8_t, 32> key{};
  static constexpr char kContext[] = "tracekit.rng.seed";
  crypto_generichash(key.data(), key.size(), in.data(), in.size(),
                     reinterpret_cast<const unsigned char*>(kContext), sizeof(kContext) - 1);
  return key;
}

}  // namespace

RandomSource::RandomSource(std::uint64_t seed) : key_(key_from_seed(seed)) {}

RandomSource::RandomSource(const std::array<std::uint8_t, 32>& key) : key_(key) { ensure_sodium(); }

RandomSource RandomSource::from_os() {
  ensure_sodium();
  std::array<std::uint8_t, 32> key{};
  randombytes_buf(key.data(), key.size());
  return RandomSource(key);
}

void RandomSource::refill() {
  std::array<std::uint8_t, crypto_stream_chacha20_NONCEBYTES> nonce{};
  for (std::size_t i = 0; i < nonce.size(); ++i) nonce[i] = static_cast<std::uint8_t>(block_ >> (8 * i));
  ++block_;
  crypto_stream_chacha20(buffer_.data(), buffer_.size(), nonce.data(), key_.data());
  offset_ = 0;
}

void RandomSource::fill(std::span<std::uint8_t> out) {
  std::size_t done = 0;
  while (done < out.size()) {
    if (offset_ == buffer_.size()) refill();
    const std::size_t take = std::min(out.size() - done, buffer_.size() - offset_);
    std::memcpy(out.data() + done, buffer_.data() + offset_, take);
    offset_ += take;
    done += take;
  }
}

std::uint64_t RandomSource::next_u64() {
  std::array<std::uint8_t, 8> raw{};
  fill(raw);
  std::uint64_t v = 0;
  for (auto b : raw) v = (v << 8) | b;
  return v;
}

std::uint64_t RandomSource::uniform(std::uint64_t bound) {
  if (bound == 0) throw std::invalid_argument("uniform: bound must be positive");
  // Reject the low 2^64 mod bound values so every residue is equally likely.
  const std::uint64_t threshold = (0 - bound) % bound;
  for (;;) {
    const std::uint64_t v = next_u64();
    if (v >= threshold) return v % bound;
  }
}

std::int64_t RandomSource::uniform_between(std::int64_t lo, std::int64_t hi) {
  if (hi < lo) throw std::invalid_argument("uniform_between: empty range");
  const auto span = static_cast<std::uint64_t>(hi - lo) + 1;
  if (span == 0) return static_cast<std::int64_t>(next_u64());
  return lo + static_cast<std::int64_t>(uniform(span));
}

double RandomSource::uniform01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

mpz_class RandomSource::bits(unsigned nbits) {
  if (nbits == 0) return 0;
  std::vector<std::uint8_t> raw((nbits + 7) / 8);
  fill(raw);
  const unsigned excess = static_cast<unsigned>(raw.size() * 8 - nbits);
  raw[0] &= static_cast<std::uint8_t>(0xffu >> excess);
  mpz_class out;
  mpz_import(out.get_mpz_t(), raw.size(), 1, 1, 1, 0, raw.data());
  return out;
}

mpz_class RandomSource::below(const mpz_class& bound) {
  if (bound <= 0) throw std::invalid_argument("below: bound must be positive");
  const auto nbits = static_cast<unsigned>(mpz_sizeinbase(bound.get_mpz_t(), 2));
  for (;;) {
    mpz_class v = bits(nbits);
    if (v < bound) return v;
  }
}

RandomSource RandomSource::fork(std::uint64_t stream) const {
  std::array<std::uint8_t, 40> in{};
  std::memcpy(in.data(), key_.data(), key_.size());
  for (int i = 0; i < 8; ++i) in[32 + i] = static_cast<std::uint8_t>(stream >> (56 - 8 * i));
  std::array<std::uint8_t, 32> key{};
  static constexpr char kContext[] = "tracekit.rng.fork";
  crypto_generichash(key.data(), key.size(), in.data(), in.size(),
                     reinterpret_cast<const unsigned char*>(kContext), sizeof(kContext) - 1);
  return RandomSource(key);
}

}  // namespace tracekit
