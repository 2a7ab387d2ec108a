// Copyright 2026 The tracekit Authors
// SPDX-License-Identifier: Apache-2.0

#include "tracekit/paillier.hpp"

#include "tracekit/errors.hpp"

namespace tracekit::paillier {

PublicKey::PublicKey(mpz_class n) : n_(std::move(n)) {
  if (n_ < 15 || mpz_even_p(n_.get_mpz_t())) throw DomainError("paillier: modulus must be an odd integer >= 15");
  g_ = n_ + 1;
  n_squared_ = n_ * n_;
}

unsigned PublicKey::bits() const { return static_cast<unsigned>(mpz_sizeinbase(n_.get_mpz_t(), 2)); }

void validate(const PublicKey& pk, const Ciphertext& c) {
  if (c.value <= 0 || c.value >= pk.n_squared()) throw MalformedCiphertext("ciphertext outside (0, n^2)");
  mpz_class g;
  mpz_gcd(g.get_mpz_t(), c.value.get_mpz_t(), pk.n().get_mpz_t());
  if (g != 1) throw MalformedCiphertext("ciphertext is not a unit mod n^2");
}

Ciphertext encrypt_with_nonce(const PublicKey& pk, const mpz_class& m, const mpz_class& gamma) {
  if (m < 0 || m >= pk.n()) throw DomainError("encrypt: plaintext outside [0, n)");
  mpz_class common;
  mpz_gcd(common.get_mpz_t(), gamma.get_mpz_t(), pk.n().get_mpz_t());
  if (gamma <= 0 || gamma >= pk.n() || common != 1) throw DomainError("encrypt: nonce must be a unit mod n");

  // g = n + 1, so g^m = 1 + m*n (mod n^2).
  mpz_class gm = (1 + m * pk.n()) % pk.n_squared();
  mpz_class rn;
  mpz_powm(rn.get_mpz_t(), gamma.get_mpz_t(), pk.n().get_mpz_t(), pk.n_squared().get_mpz_t());
  return Ciphertext{(gm * rn) % pk.n_squared()};
}

Ciphertext encrypt(const PublicKey& pk, const mpz_class& m, RandomSource& rng) {
  for (;;) {
    mpz_class gamma = rng.below(pk.n());
    mpz_class common;
    mpz_gcd(common.get_mpz_t(), gamma.get_mpz_t(), pk.n().get_mpz_t());
    if (gamma != 0 && common == 1) return encrypt_with_nonce(pk, m, gamma);
  }
}

Ciphertext add(const PublicKey& pk, const Ciphertext& a, const Ciphertext& b) {
  return Ciphertext{(a.value * b.value) % pk.n_squared()};
}

Ciphertext scale(const PublicKey& pk, const Ciphertext& c, const mpz_class& factor) {
  if (factor < 0 || factor >= pk.n()) throw DomainError("scale: factor outside [0, n)");
  Ciphertext out;
  mpz_powm(out.value.get_mpz_t(), c.value.get_mpz_t(), factor.get_mpz_t(), pk.n_squared().get_mpz_t());
  return out;
}

mpz_class negate(const PublicKey& pk, const mpz_class& m) {
  mpz_class r = (pk.n() - m) % pk.n();
  if (r < 0) r += pk.n();
  return r;
}

mpz_class to_signed(const PublicKey& pk, const mpz_class& m) {
  if (m > pk.n() / 2) return m - pk.n();
  return m;
}

std::string to_hex(const mpz_class& v) {
  if (v < 0) throw DomainError("to_hex: negative value");
  return v.get_str(16);
}

mpz_class from_hex(std::string_view hex) {
  if (hex.empty()) throw ParseError("hex: empty");
  if (hex.size() > 1 && hex.front() == '0') throw ParseError("hex: leading zero");
  for (char ch : hex) {
    if (!((ch >= '0' && ch <= '9') || (ch >= 'a' && ch <= 'f'))) throw ParseError("hex: invalid character");
  }
  return mpz_class(std::string(hex), 16);
}

}  // namespace tracekit::paillier
