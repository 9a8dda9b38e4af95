#pragma once

#include <cmath>
#include <cstdint>

namespace tefl {

// Deterministic xoshiro256++ generator seeded through splitmix64.
// Hand-rolled instead of <random> so that one seed yields one bit-identical
// stream on every platform and standard library. Gaussian draws use the
// Box-Muller transform with a one-value cache, which keeps the mapping from
// seed to stream fully specified by this header.
struct RngState {
    std::uint64_t s[4] = {1, 2, 3, 4};
    double cached_normal = 0.0;
    bool has_cached_normal = false;

    explicit RngState(std::uint64_t seed = 0) {
        std::uint64_t x = seed;
        for (int i = 0; i < 4; ++i) s[i] = splitmix64(x);
    }

    static std::uint64_t splitmix64(std::uint64_t& x) {
        x += 0x9e3779b97f4a7c15ull;
        std::uint64_t z = x;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
        return z ^ (z >> 31);
    }

    static std::uint64_t rotl(std::uint64_t v, int k) {
        return (v << k) | (v >> (64 - k));
    }

    std::uint64_t next_u64() {
        const std::uint64_t result = rotl(s[0] + s[3], 23) + s[0];
        const std::uint64_t t = s[1] << 17;
        s[2] ^= s[0];
        s[3] ^= s[1];
        s[1] ^= s[2];
        s[0] ^= s[3];
        s[2] ^= t;
        s[3] = rotl(s[3], 45);
        return result;
    }

    // Uniform in [0, 1): 53 mantissa bits of one 64-bit word.
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    // Uniform integer in [0, n). Rejection-free modulo is avoided so that the
    // distribution is exact; n must be positive.
    std::uint64_t uniform_below(std::uint64_t n) {
        const std::uint64_t threshold = (0 - n) % n;
        for (;;) {
            std::uint64_t r = next_u64();
            if (r >= threshold) return r % n;
        }
    }

    double normal() {
        if (has_cached_normal) {
            has_cached_normal = false;
            return cached_normal;
        }
        double u1 = uniform();
        while (u1 <= 0.0) u1 = uniform();
        const double u2 = uniform();
        const double mag = std::sqrt(-2.0 * std::log(u1));
        constexpr double two_pi = 6.283185307179586476925286766559;
        cached_normal = mag * std::sin(two_pi * u2);
        has_cached_normal = true;
        return mag * std::cos(two_pi * u2);
    }

    // Independent substream for worker k of a run seeded with `seed`.
    static RngState substream(std::uint64_t seed, std::uint64_t k) {
        std::uint64_t x = seed;
        std::uint64_t a = splitmix64(x);
        x = a ^ (k * 0x9e3779b97f4a7c15ull + 0x632be59bd9b4e019ull);
        return RngState(splitmix64(x));
    }
};

}  // namespace tefl
