// Copyright 2026 The tracekit Authors
// SPDX-License-Identifier: Apache-2.0

#include "tracekit/interpreter.hpp"

namespace tracekit::interpreter {

RiskInterpreter::RiskInterpreter(paillier::KeyPair keys, RandomSource shuffle_rng)
    : keys_(std::move(keys)), rng_(std::move(shuffle_rng)) {}

mpz_class RiskInterpreter::decrypt_masked_risk(const paillier::Ciphertext& c) const {
  return paillier::decrypt(keys_.priv, c);
}

std::vector<mpz_class> RiskInterpreter::decrypt_shuffle(const std::vector<paillier::Ciphertext>& cs) {
  std::vector<mpz_class> out;
  out.reserve(cs.size());
  for (const auto& c : cs) out.push_back(paillier::decrypt(keys_.priv, c));
  std::lock_guard lock(rng_mutex_);
  shuffle(out, rng_);
  return out;
}

wire::Message RiskInterpreter::handle(const wire::Message& request) {
  try {
    if (const auto* m = std::get_if<wire::PublishKey>(&request)) {
      if (m->modulus) return wire::Error{wire::ErrorCode::bad_request, "PublishKey request must be empty"};
      return wire::PublishKey{keys_.pub.n()};
    }
    if (const auto* m = std::get_if<wire::DecryptRisk>(&request)) {
      return wire::DecryptResponse{{decrypt_masked_risk(m->value)}};
    }
    if (const auto* m = std::get_if<wire::DecryptShuffle>(&request)) {
      return wire::DecryptResponse{decrypt_shuffle(m->values)};
    }
    return wire::Error{wire::ErrorCode::unsupported,
                       "interpreter does not serve " + std::string(wire::kind_name(wire::kind_of(request)))};
  } catch (const std::exception& e) {
    return wire::error_from(e);
  }
}

}  // namespace tracekit::interpreter
