#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace stopirl {

// splitmix64 step; used to mix seed components so that nearby
// (seed, env, state, trial) tuples give statistically unrelated streams.
inline std::uint64_t splitmix64(std::uint64_t& state) {
    state += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// Deterministic per-(environment, state, trial) seed derivation.
inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t env,
                                 std::uint64_t state, std::uint64_t trial,
                                 std::uint64_t stream = 0) {
    std::uint64_t s = base;
    std::uint64_t h = splitmix64(s);
    s ^= env * 0x9e3779b97f4a7c15ULL;
    h ^= splitmix64(s);
    s ^= state * 0xc2b2ae3d27d4eb4fULL;
    h ^= splitmix64(s);
    s ^= trial * 0x165667b19e3779f9ULL;
    h ^= splitmix64(s);
    s ^= stream * 0x27d4eb2f165667c5ULL;
    h ^= splitmix64(s);
    return h;
}

// Fixed-algorithm sampler: all transforms are hand-rolled so output streams
// are identical across standard library implementations.
struct rng {
    std::mt19937_64 eng;
    bool has_spare = false;
    double spare = 0.0;

    explicit rng(std::uint64_t seed) : eng(seed) {}

    // Uniform on [0, 1) with 53 random bits.
    double uniform01() {
        return static_cast<double>(eng() >> 11) * 0x1.0p-53;
    }

    // Standard normal via Box-Muller.
    double normal() {
        if (has_spare) {
            has_spare = false;
            return spare;
        }
        double u1 = uniform01();
        while (u1 <= 0.0) u1 = uniform01();
        const double u2 = uniform01();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double a = 6.283185307179586476925286766559 * u2;
        spare = r * std::sin(a);
        has_spare = true;
        return r * std::cos(a);
    }

    bool bernoulli(double p) { return uniform01() < p; }

    // Uniform integer in [0, n); n must be >= 1.
    std::uint64_t uniform_int(std::uint64_t n) {
        return static_cast<std::uint64_t>(uniform01() * static_cast<double>(n)) % n;
    }
};

}  // namespace stopirl
