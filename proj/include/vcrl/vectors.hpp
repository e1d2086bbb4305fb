#pragma once

#include <json.hpp>

#include <cstdint>
#include <string>
#include <vector>

namespace vcrl {

/**
 * Cross-implementation test vectors, all binary fields hex encoded:
 * a batch with a revocation entry and its expansion, a base-CRL piece set
 * with its fingerprint, and a Δ piece with the key chain. Signatures use the
 * mock scheme so the output is a pure function of the seed.
 */
nlohmann::json make_vectors(std::uint64_t seed);

/// Recomputes every derived value from the stored inputs; returns one message per mismatch.
std::vector<std::string> check_vectors(const nlohmann::json& vectors);

} // namespace vcrl
