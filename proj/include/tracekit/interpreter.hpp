// Copyright 2026 The tracekit Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <mutex>
#include <vector>

#include "tracekit/paillier_keys.hpp"
#include "tracekit/random.hpp"
#include "tracekit/wire.hpp"

namespace tracekit::interpreter {

/// Key custodian. Decrypts masked values; never logs them and never puts
/// private-key material on the wire.
class RiskInterpreter {
 public:
  RiskInterpreter(paillier::KeyPair keys, RandomSource shuffle_rng);

  const paillier::PublicKey& publish_key() const { return keys_.pub; }

  // MalformedCiphertext if c is not a unit below n^2.
  mpz_class decrypt_masked_risk(const paillier::Ciphertext& c) const;

  // Decrypts every entry, then applies a uniform Fisher-Yates permutation.
  // One malformed entry fails the whole request.
  std::vector<mpz_class> decrypt_shuffle(const std::vector<paillier::Ciphertext>& cs);

  // Serves PublishKey, DecryptRisk and DecryptShuffle.
  wire::Message handle(const wire::Message& request);

 private:
  paillier::KeyPair keys_;
  std::mutex rng_mutex_;
  RandomSource rng_;
};

}  // namespace tracekit::interpreter
