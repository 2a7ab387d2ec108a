// Copyright 2026 The tracekit Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>

#include <gmpxx.h>

#include "tracekit/paillier.hpp"
#include "tracekit/random.hpp"

namespace tracekit::paillier {

class PrivateKey {
 public:
  PrivateKey() = default;
  PrivateKey(mpz_class lambda, mpz_class mu, mpz_class n);

  const mpz_class& lambda() const { return lambda_; }
  const mpz_class& mu() const { return mu_; }
  const mpz_class& n() const { return n_; }
  const mpz_class& n_squared() const { return n_squared_; }

 private:
  mpz_class lambda_;
  mpz_class mu_;
  mpz_class n_;
  mpz_class n_squared_;
};

struct KeyPair {
  PublicKey pub;
  PrivateKey priv;
};

enum class KeyMode {
  deployment,     // modulus >= 2048 bits
  insecure_test,  // modulus >= 16 bits; for fast oracle tests and simulations
};

inline constexpr unsigned kDeploymentBits = 2048;
inline constexpr unsigned kMinTestBits = 16;

// Generates p != q of about bits/2 each with gcd(pq, (p-1)(q-1)) = 1 and
// n = pq of exactly `bits` bits. Throws DomainError for a bit length the mode
// does not allow and ConfigError when prime search exceeds its budget.
KeyPair generate_keypair(unsigned bits, RandomSource& rng, KeyMode mode = KeyMode::deployment);

// Builds the key pair for given primes. Throws DomainError if they are not
// distinct primes satisfying the gcd condition.
KeyPair keypair_from_primes(const mpz_class& p, const mpz_class& q);

// m = L(c^lambda mod n^2) * mu mod n. Throws MalformedCiphertext if c is not
// a unit mod n^2.
mpz_class decrypt(const PrivateKey& sk, const Ciphertext& c);

// Miller-Rabin with `rounds` random bases.
bool is_probable_prime(const mpz_class& candidate, RandomSource& rng, int rounds = 64);

// Key file: a small text document holding n, lambda and mu in hex.
void save_keypair(const KeyPair& keys, const std::filesystem::path& path);
KeyPair load_keypair(const std::filesystem::path& path);

// Public half only: the modulus in hex.
void save_public_key(const PublicKey& pk, const std::filesystem::path& path);
PublicKey load_public_key(const std::filesystem::path& path);

}  // namespace tracekit::paillier
