#pragma once

#include <cstdint>
#include <random>

#include "tailmix/special.hpp"

namespace tailmix {

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t& state) {
    state += 0x9E3779B97F4A7C15ULL;
    std::uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

}  // namespace detail

/// Mixes a base seed with a stream id into an independent substream seed.
/// Used to give every replication / bootstrap iteration / observation its
/// own RNG stream, so parallel schedules cannot change results.
inline std::uint64_t substream_seed(std::uint64_t seed, std::uint64_t id) {
    std::uint64_t s = seed ^ (0x9E3779B97F4A7C15ULL * (id + 1));
    std::uint64_t a = detail::splitmix64(s);
    std::uint64_t b = detail::splitmix64(s);
    return a ^ (b << 1);
}

/// Deterministic random source. Uniform and normal variates are generated
/// through fixed bit-level recipes (53-bit mantissa uniforms, inverse-CDF
/// normals), so a given seed yields the same stream on every platform.
class Rng {
public:
    explicit Rng(std::uint64_t seed) {
        std::uint64_t s = seed;
        gen_.seed(detail::splitmix64(s));
    }

    static Rng stream(std::uint64_t seed, std::uint64_t id) {
        return Rng(substream_seed(seed, id));
    }

    std::uint64_t next_u64() { return gen_(); }

    /// Uniform on the open interval (0, 1); never returns 0 or 1.
    double uniform() {
        return (static_cast<double>(gen_() >> 11) + 0.5) * 0x1.0p-53;
    }

    /// Standard normal via inverse CDF of uniform().
    double normal() { return norm_quantile(uniform()); }

    /// Unbiased integer in [0, n).
    std::uint64_t below(std::uint64_t n) {
        const std::uint64_t limit = std::uint64_t(-1) - std::uint64_t(-1) % n;
        std::uint64_t x;
        do {
            x = gen_();
        } while (x >= limit);
        return x % n;
    }

private:
    std::mt19937_64 gen_;
};

}  // namespace tailmix
