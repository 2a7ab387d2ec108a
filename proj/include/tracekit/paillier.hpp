// Copyright 2026 The tracekit Authors
// SPDX-License-Identifier: Apache-2.0

// Public half of the Paillier cryptosystem: everything a party that only holds
// the public key may do. Decryption and key generation live in
// paillier_keys.hpp, in a separate library, so server code that must stay
// blind to plaintexts cannot link against them.

#pragma once

#include <string>
#include <string_view>

#include <gmpxx.h>

#include "tracekit/random.hpp"

namespace tracekit::paillier {

/// Public key (n, g) with g fixed to n + 1.
class PublicKey {
 public:
  PublicKey() = default;
  // Throws DomainError if n is not an odd composite >= 15.
  explicit PublicKey(mpz_class n);

  const mpz_class& n() const { return n_; }
  const mpz_class& g() const { return g_; }
  const mpz_class& n_squared() const { return n_squared_; }
  unsigned bits() const;

  friend bool operator==(const PublicKey& a, const PublicKey& b) { return a.n_ == b.n_; }

 private:
  mpz_class n_;
  mpz_class g_;
  mpz_class n_squared_;
};

/// An element of Z*_{n^2}. Plain value type; validity against a key is
/// checked by `validate`.
struct Ciphertext {
  mpz_class value;

  friend bool operator==(const Ciphertext& a, const Ciphertext& b) { return a.value == b.value; }
};

// Throws MalformedCiphertext unless 0 < c < n^2 and gcd(c, n) = 1.
void validate(const PublicKey& pk, const Ciphertext& c);

// E(m) = g^m * gamma^n mod n^2 with gamma drawn from Z*_n.
Ciphertext encrypt(const PublicKey& pk, const mpz_class& m, RandomSource& rng);
// Same with a caller-chosen gamma; for known-answer tests.
Ciphertext encrypt_with_nonce(const PublicKey& pk, const mpz_class& m, const mpz_class& gamma);

// The (+) operator: Dec(add(a, b)) = Dec(a) + Dec(b) mod n.
Ciphertext add(const PublicKey& pk, const Ciphertext& a, const Ciphertext& b);
// The (x) operator: Dec(scale(c, w)) = w * Dec(c) mod n. Requires 0 <= w < n.
Ciphertext scale(const PublicKey& pk, const Ciphertext& c, const mpz_class& factor);

// Additive inverse in Z_n; this is how negative logical values are carried.
mpz_class negate(const PublicKey& pk, const mpz_class& m);
// Interpret a plaintext as signed: values above n/2 map to value - n.
mpz_class to_signed(const PublicKey& pk, const mpz_class& m);

// Lowercase big-endian hex without leading zeros ("0" for zero).
std::string to_hex(const mpz_class& v);
// Inverse of to_hex; rejects uppercase, empty input and leading zeros.
mpz_class from_hex(std::string_view hex);

}  // namespace tracekit::paillier
