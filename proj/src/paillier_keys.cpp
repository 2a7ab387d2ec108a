// Copyright 2026 The tracekit Authors
// SPDX-License-Identifier: Apache-2.0

#include "tracekit/paillier_keys.hpp"

#include <array>
#include <fstream>
#include <sstream>
#include <string>

#include "tracekit/errors.hpp"

namespace tracekit::paillier {
namespace {

constexpr std::array<unsigned, 25> kSmallPrimes = {3,  5,  7,  11, 13, 17, 19, 23, 29, 31, 37, 41, 43,
                                                   47, 53, 59, 61, 67, 71, 73, 79, 83, 89, 97, 101};

// Candidates rejected before prime search is declared hopeless.
constexpr int kMaxCandidates = 200000;

mpz_class L(const mpz_class& x, const mpz_class& n) { return (x - 1) / n; }

mpz_class random_prime(unsigned bits, RandomSource& rng) {
  for (int attempt = 0; attempt < kMaxCandidates; ++attempt) {
    mpz_class c = rng.bits(bits);
    // Top two bits set so the product of two such primes has exactly the
    // requested length; low bit set for oddness.
    mpz_setbit(c.get_mpz_t(), bits - 1);
    mpz_setbit(c.get_mpz_t(), bits - 2);
    mpz_setbit(c.get_mpz_t(), 0);
    if (is_probable_prime(c, rng)) return c;
  }
  throw ConfigError("keygen: prime search exceeded candidate budget");
}

}  // namespace

PrivateKey::PrivateKey(mpz_class lambda, mpz_class mu, mpz_class n)
    : lambda_(std::move(lambda)), mu_(std::move(mu)), n_(std::move(n)), n_squared_(n_ * n_) {}

bool is_probable_prime(const mpz_class& candidate, RandomSource& rng, int rounds) {
  if (candidate < 2) return false;
  if (candidate == 2) return true;
  if (mpz_even_p(candidate.get_mpz_t())) return false;
  for (unsigned p : kSmallPrimes) {
    if (candidate == p) return true;
    if (mpz_divisible_ui_p(candidate.get_mpz_t(), p)) return false;
  }

  const mpz_class minus_one = candidate - 1;
  mpz_class d = minus_one;
  unsigned s = 0;
  while (mpz_even_p(d.get_mpz_t())) {
    d /= 2;
    ++s;
  }

  const mpz_class base_range = candidate - 3;  // bases drawn from [2, candidate - 2]
  for (int round = 0; round < rounds; ++round) {
    mpz_class a = rng.below(base_range) + 2;
    mpz_class x;
    mpz_powm(x.get_mpz_t(), a.get_mpz_t(), d.get_mpz_t(), candidate.get_mpz_t());
    if (x == 1 || x == minus_one) continue;
    bool witness = true;
    for (unsigned r = 1; r < s; ++r) {
      mpz_powm_ui(x.get_mpz_t(), x.get_mpz_t(), 2, candidate.get_mpz_t());
      if (x == minus_one) {
        witness = false;
        break;
      }
    }
    if (witness) return false;
  }
  return true;
}

KeyPair keypair_from_primes(const mpz_class& p, const mpz_class& q) {
  if (p == q) throw DomainError("keygen: p and q must differ");
  if (mpz_probab_prime_p(p.get_mpz_t(), 40) == 0 || mpz_probab_prime_p(q.get_mpz_t(), 40) == 0) {
    throw DomainError("keygen: p and q must be prime");
  }
  const mpz_class n = p * q;
  const mpz_class phi = (p - 1) * (q - 1);
  mpz_class common;
  mpz_gcd(common.get_mpz_t(), n.get_mpz_t(), phi.get_mpz_t());
  if (common != 1) throw DomainError("keygen: gcd(pq, (p-1)(q-1)) != 1");

  mpz_class lambda;
  mpz_lcm(lambda.get_mpz_t(), mpz_class(p - 1).get_mpz_t(), mpz_class(q - 1).get_mpz_t());

  PublicKey pub(n);
  mpz_class g_lambda;
  mpz_powm(g_lambda.get_mpz_t(), pub.g().get_mpz_t(), lambda.get_mpz_t(), pub.n_squared().get_mpz_t());
  mpz_class mu;
  if (mpz_invert(mu.get_mpz_t(), L(g_lambda, n).get_mpz_t(), n.get_mpz_t()) == 0) {
    throw DomainError("keygen: L(g^lambda) not invertible mod n");
  }
  return KeyPair{std::move(pub), PrivateKey(lambda, mu, n)};
}

KeyPair generate_keypair(unsigned bits, RandomSource& rng, KeyMode mode) {
  const unsigned floor = mode == KeyMode::deployment ? kDeploymentBits : kMinTestBits;
  if (bits < floor) {
    throw DomainError("keygen: " + std::to_string(bits) + "-bit modulus below the " + std::to_string(floor) +
                      "-bit minimum for this mode");
  }
  const unsigned p_bits = (bits + 1) / 2;
  const unsigned q_bits = bits / 2;
  for (int attempt = 0; attempt < 1000; ++attempt) {
    const mpz_class p = random_prime(p_bits, rng);
    const mpz_class q = random_prime(q_bits, rng);
    if (p == q) continue;
    const mpz_class n = p * q;
    if (mpz_sizeinbase(n.get_mpz_t(), 2) != bits) continue;
    mpz_class common;
    mpz_gcd(common.get_mpz_t(), n.get_mpz_t(), mpz_class((p - 1) * (q - 1)).get_mpz_t());
    if (common != 1) continue;
    return keypair_from_primes(p, q);
  }
  throw ConfigError("keygen: could not find a valid prime pair");
}

mpz_class decrypt(const PrivateKey& sk, const Ciphertext& c) {
  if (c.value <= 0 || c.value >= sk.n_squared()) throw MalformedCiphertext("ciphertext outside (0, n^2)");
  mpz_class common;
  mpz_gcd(common.get_mpz_t(), c.value.get_mpz_t(), sk.n().get_mpz_t());
  if (common != 1) throw MalformedCiphertext("ciphertext is not a unit mod n^2");

  mpz_class x;
  mpz_powm(x.get_mpz_t(), c.value.get_mpz_t(), sk.lambda().get_mpz_t(), sk.n_squared().get_mpz_t());
  return (L(x, sk.n()) * sk.mu()) % sk.n();
}

void save_keypair(const KeyPair& keys, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw ConfigError("cannot write key file " + path.string());
  out << "tracekit-paillier-key 1\n"
      << "n " << to_hex(keys.pub.n()) << "\n"
      << "lambda " << to_hex(keys.priv.lambda()) << "\n"
      << "mu " << to_hex(keys.priv.mu()) << "\n";
  if (!out) throw ConfigError("failed writing key file " + path.string());
}

KeyPair load_keypair(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read key file " + path.string());
  std::string header;
  std::getline(in, header);
  if (header != "tracekit-paillier-key 1") throw ParseError("key file: unsupported header");
  mpz_class n, lambda, mu;
  bool have_n = false, have_lambda = false, have_mu = false;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream fields(line);
    std::string name, value;
    fields >> name >> value;
    if (name == "n") {
      n = from_hex(value);
      have_n = true;
    } else if (name == "lambda") {
      lambda = from_hex(value);
      have_lambda = true;
    } else if (name == "mu") {
      mu = from_hex(value);
      have_mu = true;
    } else {
      throw ParseError("key file: unknown field '" + name + "'");
    }
  }
  if (!have_n || !have_lambda || !have_mu) throw ParseError("key file: missing field");
  KeyPair keys{PublicKey(n), PrivateKey(lambda, mu, n)};
  // A key whose parts do not belong together would decrypt to garbage.
  mpz_class g_lambda;
  mpz_powm(g_lambda.get_mpz_t(), keys.pub.g().get_mpz_t(), lambda.get_mpz_t(), keys.pub.n_squared().get_mpz_t());
  if ((L(g_lambda, n) * mu) % n != 1) throw ParseError("key file: mu does not invert L(g^lambda)");
  return keys;
}

void save_public_key(const PublicKey& pk, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw ConfigError("cannot write key file " + path.string());
  out << "tracekit-paillier-public 1\n"
      << "n " << to_hex(pk.n()) << "\n";
  if (!out) throw ConfigError("failed writing key file " + path.string());
}

PublicKey load_public_key(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read key file " + path.string());
  std::string header, name, value, rest;
  std::getline(in, header);
  if (header != "tracekit-paillier-public 1") throw ParseError("public key file: unsupported header");
  in >> name >> value;
  if (name != "n" || value.empty()) throw ParseError("public key file: missing modulus");
  if (in >> rest) throw ParseError("public key file: trailing data");
  try {
    return PublicKey(from_hex(value));
  } catch (const DomainError& e) {
    throw ParseError(std::string("public key file: ") + e.what());
  }
}

}  // namespace tracekit::paillier
