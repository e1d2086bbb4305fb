#pragma once

#include <vcrl/bytes.hpp>

#include <cstdint>
#include <random>

namespace vcrl {

/// splitmix64 finalizer; derives independent stream seeds from (base, stream).
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream);

/**
 * Deterministic pseudo-random source for simulations and test fixtures.
 * Not a CSPRNG: protocol secrets drawn from it are reproducible by design of
 * the experiments, which is what golden vectors and seed replays need.
 */
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next() { return engine_(); }
    /// Uniform in [0, 1) with 53 bits of resolution.
    double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
    /// Uniform integer in [0, n); n must be nonzero.
    std::uint64_t below(std::uint64_t n);
    bool chance(double p) { return uniform() < p; }
    double exponential(double mean);
    Digest digest();
    Bytes bytes(std::size_t n);

    std::mt19937_64& engine() { return engine_; }

private:
    std::mt19937_64 engine_;
};

} // namespace vcrl
