// Copyright 2026 The tracekit Authors
// SPDX-License-Identifier: Apache-2.0

#include <filesystem>
#include <fstream>
#include <map>
#include <set>

#include <gtest/gtest.h>

#include "tracekit/errors.hpp"
#include "tracekit/paillier.hpp"
#include "tracekit/paillier_keys.hpp"
#include "tracekit/random.hpp"

namespace tracekit::paillier {
namespace {

// Hand-checkable key: p = 5, q = 7.
KeyPair tiny() { return keypair_from_primes(5, 7); }

TEST(PaillierOracle, TinyKeyParameters) {
  const KeyPair k = tiny();
  EXPECT_EQ(k.pub.n(), 35);
  EXPECT_EQ(k.pub.n_squared(), 1225);
  EXPECT_EQ(k.pub.g(), 36);
  EXPECT_EQ(k.priv.lambda(), 12);
  EXPECT_EQ(k.priv.mu(), 3);
}

TEST(PaillierOracle, FrozenCiphertexts) {
  const KeyPair k = tiny();
  const Ciphertext c3 = encrypt_with_nonce(k.pub, 3, 2);
  const Ciphertext c4 = encrypt_with_nonce(k.pub, 4, 3);
  EXPECT_EQ(c3.value, 683);
  EXPECT_EQ(c4.value, 1062);
  EXPECT_EQ(decrypt(k.priv, c3), 3);
  EXPECT_EQ(decrypt(k.priv, add(k.pub, c3, c4)), 7);
  EXPECT_EQ(scale(k.pub, c3, 5).value, 443);
  EXPECT_EQ(decrypt(k.priv, scale(k.pub, c3, 5)), 15);
}

TEST(PaillierOracle, EncryptionIsRandomized) {
  const KeyPair k = tiny();
  std::set<mpz_class> seen;
  for (int gamma : {1, 2, 3, 4, 6, 8}) seen.insert(encrypt_with_nonce(k.pub, 3, gamma).value);
  EXPECT_GT(seen.size(), 1u);
}

TEST(Paillier, NonceMustBeUnit) {
  const KeyPair k = tiny();
  EXPECT_THROW(encrypt_with_nonce(k.pub, 3, 5), DomainError);
  EXPECT_THROW(encrypt_with_nonce(k.pub, 3, 0), DomainError);
  EXPECT_THROW(encrypt_with_nonce(k.pub, 35, 2), DomainError);
}

TEST(Paillier, LawsAtSixtyFourBits) {
  RandomSource rng(7);
  const KeyPair k = generate_keypair(64, rng, KeyMode::insecure_test);
  EXPECT_EQ(k.pub.bits(), 64u);
  for (int i = 0; i < 200; ++i) {
    const mpz_class m1 = rng.below(k.pub.n());
    const mpz_class m2 = rng.below(k.pub.n());
    const mpz_class w = rng.below(k.pub.n());
    const Ciphertext c1 = encrypt(k.pub, m1, rng);
    const Ciphertext c2 = encrypt(k.pub, m2, rng);
    ASSERT_EQ(decrypt(k.priv, c1), m1);
    ASSERT_EQ(decrypt(k.priv, add(k.pub, c1, c2)), mpz_class((m1 + m2) % k.pub.n()));
    ASSERT_EQ(decrypt(k.priv, scale(k.pub, c1, w)), mpz_class((m1 * w) % k.pub.n()));
  }
}

TEST(Paillier, NegativeValuesWrap) {
  RandomSource rng(3);
  const KeyPair k = generate_keypair(32, rng, KeyMode::insecure_test);
  const mpz_class minus_five = negate(k.pub, 5);
  EXPECT_EQ(minus_five, k.pub.n() - 5);
  EXPECT_EQ(to_signed(k.pub, minus_five), -5);
  const Ciphertext c = add(k.pub, encrypt(k.pub, 5, rng), encrypt(k.pub, minus_five, rng));
  EXPECT_EQ(decrypt(k.priv, c), 0);
}

TEST(Paillier, ValidateRejectsOutOfRange) {
  const KeyPair k = tiny();
  EXPECT_THROW(validate(k.pub, Ciphertext{0}), MalformedCiphertext);
  EXPECT_THROW(validate(k.pub, Ciphertext{1225}), MalformedCiphertext);
  EXPECT_THROW(validate(k.pub, Ciphertext{35}), MalformedCiphertext);
  EXPECT_NO_THROW(validate(k.pub, Ciphertext{683}));
  EXPECT_THROW(decrypt(k.priv, Ciphertext{70}), MalformedCiphertext);
}

TEST(Paillier, ScaleFactorRange) {
  const KeyPair k = tiny();
  EXPECT_THROW(scale(k.pub, Ciphertext{683}, 35), DomainError);
  EXPECT_THROW(scale(k.pub, Ciphertext{683}, -1), DomainError);
}

TEST(Paillier, HexIsCanonical) {
  EXPECT_EQ(to_hex(mpz_class(255)), "ff");
  EXPECT_EQ(to_hex(mpz_class(0)), "0");
  EXPECT_EQ(from_hex("ff"), 255);
  EXPECT_THROW(from_hex("0ff"), ParseError);
  EXPECT_THROW(from_hex("FF"), ParseError);
  EXPECT_THROW(from_hex(""), ParseError);
  EXPECT_THROW(from_hex("xyz"), ParseError);
}

TEST(PaillierKeys, ModeLimits) {
  RandomSource rng(1);
  EXPECT_THROW(generate_keypair(512, rng, KeyMode::deployment), DomainError);
  EXPECT_THROW(generate_keypair(8, rng, KeyMode::insecure_test), DomainError);
  const KeyPair k = generate_keypair(16, rng, KeyMode::insecure_test);
  EXPECT_EQ(k.pub.bits(), 16u);
}

TEST(PaillierKeys, RejectsBadPrimes) {
  EXPECT_THROW(keypair_from_primes(5, 5), DomainError);
  EXPECT_THROW(keypair_from_primes(5, 9), DomainError);
  // gcd(pq, (p-1)(q-1)) = 3 for p = 3, q = 7.
  EXPECT_THROW(keypair_from_primes(3, 7), DomainError);
}

TEST(PaillierKeys, PrimalityOracle) {
  RandomSource rng(11);
  EXPECT_TRUE(is_probable_prime(2, rng));
  EXPECT_TRUE(is_probable_prime(65537, rng));
  EXPECT_FALSE(is_probable_prime(1, rng));
  EXPECT_FALSE(is_probable_prime(561, rng));  // Carmichael
  EXPECT_TRUE(is_probable_prime(mpz_class("170141183460469231731687303715884105727"), rng));  // 2^127 - 1
  EXPECT_FALSE(is_probable_prime(mpz_class("170141183460469231731687303715884105729"), rng));
}

TEST(PaillierKeys, SaveLoadRoundTrip) {
  RandomSource rng(5);
  const KeyPair k = generate_keypair(128, rng, KeyMode::insecure_test);
  const auto path = std::filesystem::temp_directory_path() / "tracekit_key_test.txt";
  save_keypair(k, path);
  const KeyPair loaded = load_keypair(path);
  EXPECT_EQ(loaded.pub, k.pub);
  EXPECT_EQ(loaded.priv.lambda(), k.priv.lambda());
  EXPECT_EQ(loaded.priv.mu(), k.priv.mu());
  std::filesystem::remove(path);
}

TEST(PaillierKeys, PublicKeyFileRoundTrip) {
  RandomSource rng(6);
  const KeyPair k = generate_keypair(128, rng, KeyMode::insecure_test);
  const auto path = std::filesystem::temp_directory_path() / "tracekit_pub_test.txt";
  save_public_key(k.pub, path);
  EXPECT_EQ(load_public_key(path), k.pub);
  EXPECT_THROW(load_keypair(path), ParseError);
  {
    std::ofstream out(path);
    out << "tracekit-paillier-public 1\nn 23\nextra\n";
  }
  EXPECT_THROW(load_public_key(path), ParseError);
  std::filesystem::remove(path);
}

TEST(PaillierKeys, LoadRejectsTamperedKey) {
  const auto path = std::filesystem::temp_directory_path() / "tracekit_key_bad.txt";
  {
    std::ofstream out(path);
    out << "tracekit-paillier-key 1\nn 23\nlambda c\nmu 4\n";
  }
  EXPECT_ANY_THROW(load_keypair(path));
  std::filesystem::remove(path);
}

TEST(RandomSource, DeterministicUnderSeed) {
  RandomSource a(42);
  RandomSource b(42);
  for (int i = 0; i < 100; ++i) EXPECT_EQ(a.next_u64(), b.next_u64());
  EXPECT_NE(RandomSource(42).next_u64(), RandomSource(43).next_u64());
  EXPECT_NE(RandomSource(42).fork(1).next_u64(), RandomSource(42).fork(2).next_u64());
}

TEST(RandomSource, UniformBoundsAndSpread) {
  RandomSource rng(9);
  std::map<std::uint64_t, int> hist;
  for (int i = 0; i < 6000; ++i) {
    const auto v = rng.uniform(6);
    ASSERT_LT(v, 6u);
    ++hist[v];
  }
  for (const auto& [v, n] : hist) EXPECT_NEAR(n, 1000, 150) << v;
  for (int i = 0; i < 1000; ++i) {
    const auto v = rng.uniform_between(-3, 3);
    ASSERT_GE(v, -3);
    ASSERT_LE(v, 3);
    const double u = rng.uniform01();
    ASSERT_GE(u, 0.0);
    ASSERT_LT(u, 1.0);
  }
  const mpz_class bound("1000000000000000000000000");
  for (int i = 0; i < 100; ++i) ASSERT_LT(rng.below(bound), bound);
}

TEST(RandomSource, ShuffleIsPermutation) {
  RandomSource rng(2);
  std::vector<int> v{1, 2, 3, 4, 5, 6, 7};
  shuffle(v, rng);
  std::multiset<int> s(v.begin(), v.end());
  EXPECT_EQ(s, (std::multiset<int>{1, 2, 3, 4, 5, 6, 7}));
}

}  // namespace
}  // namespace tracekit::paillier
