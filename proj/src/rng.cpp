#include <vcrl/rng.hpp>

#include <cmath>

namespace vcrl {

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream)
{
    std::uint64_t z = base + 0x9e3779b97f4a7c15ULL * (stream + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

std::uint64_t Rng::below(std::uint64_t n)
{
    if (n == 0) {
        throw ParameterError("Rng::below requires n > 0");
    }
    // rejection sampling keeps the result unbiased
    const std::uint64_t limit = (~std::uint64_t{0}) - ((~std::uint64_t{0}) % n);
    std::uint64_t v;
    do {
        v = next();
    } while (v >= limit);
    return v % n;
}

double Rng::exponential(double mean)
{
    return -mean * std::log1p(-uniform());
}

Digest Rng::digest()
{
    Digest d;
    auto& b = d.bytes();
    for (std::size_t i = 0; i < Digest::size; i += 8) {
        std::uint64_t v = next();
        for (std::size_t j = 0; j < 8; ++j) {
            b[i + j] = static_cast<std::uint8_t>(v >> (56 - 8 * j));
        }
    }
    return d;
}

Bytes Rng::bytes(std::size_t n)
{
    Bytes out(n);
    std::uint64_t v = 0;
    for (std::size_t i = 0; i < n; ++i) {
        if (i % 8 == 0) v = next();
        out[i] = static_cast<std::uint8_t>(v >> (56 - 8 * (i % 8)));
    }
    return out;
}

} // namespace vcrl
