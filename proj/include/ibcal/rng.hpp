#pragma once

#include <cstdint>
#include <string_view>

namespace ibcal {

/**
 * xoshiro256++ generator seeded through splitmix64.
 *
 * Sampling helpers are hand-rolled (no <random> distributions) so that
 * streams are byte-identical across standard library implementations and
 * across reruns. Every stateful consumer derives its own stream from
 * (master seed, purpose tag, index) via derive_seed, which keeps parallel
 * execution order-independent.
 */
class Rng {
public:
    explicit Rng(std::uint64_t seed);

    std::uint64_t next_u64();

    // Uniform double in [0, 1) with 53 random bits.
    double uniform();

    // Standard normal via Box-Muller; pairs are cached.
    double normal();

    // Gamma(shape, 1) via Marsaglia-Tsang, boosted for shape < 1.
    double gamma(double shape);

    // Unbiased integer in [0, bound).
    std::uint64_t below(std::uint64_t bound);

private:
    std::uint64_t s_[4];
    double cached_normal_ = 0.0;
    bool has_cached_ = false;
};

std::uint64_t splitmix64(std::uint64_t& state);

// Deterministic per-purpose stream seed.
std::uint64_t derive_seed(std::uint64_t master, std::string_view tag, std::uint64_t index);

}  // namespace ibcal
