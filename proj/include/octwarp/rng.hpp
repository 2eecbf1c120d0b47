// rng.hpp — small deterministic RNG utilities.
//
// std::random distributions are implementation defined, so anything that
// must reproduce bit-exactly across compilers is generated from these
// primitives instead. Counter-based access (key + counter -> sample) keeps
// per-voxel noise independent of thread scheduling.

#pragma once

#include <cmath>
#include <cstdint>

namespace octwarp {

inline uint64_t splitmix64(uint64_t x)
{
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

/// Sequential generator; next() advances the stream.
class Rng {
public:
    explicit Rng(uint64_t seed) : state_(seed) {}

    uint64_t next_u64()
    {
        state_ += 0x9e3779b97f4a7c15ull;
        uint64_t x = state_;
        x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
        x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
        return x ^ (x >> 31);
    }

    /// Uniform in [0,1) with 53 random bits.
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    /// Uniform in [lo,hi).
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Standard normal via Box-Muller.
    double normal()
    {
        double u1 = uniform();
        double u2 = uniform();
        if (u1 < 1e-300) u1 = 1e-300;
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586477 * u2);
    }

    /// Random integer in [0, n).
    uint64_t below(uint64_t n) { return next_u64() % n; }

private:
    uint64_t state_;
};

/// Stateless (key, counter) -> sample mapping for parallel-safe noise.
inline uint64_t counter_mix(uint64_t key, uint64_t counter)
{
    return splitmix64(key ^ splitmix64(counter));
}

inline double counter_uniform(uint64_t key, uint64_t counter)
{
    return static_cast<double>(counter_mix(key, counter) >> 11) * 0x1.0p-53;
}

inline double counter_normal(uint64_t key, uint64_t counter)
{
    double u1 = counter_uniform(key, 2 * counter);
    double u2 = counter_uniform(key, 2 * counter + 1);
    if (u1 < 1e-300) u1 = 1e-300;
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586477 * u2);
}

} // namespace octwarp
