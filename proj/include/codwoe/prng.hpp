#pragma once

#include <cmath>
#include <cstdint>

namespace codwoe {

// SplitMix64 (Steele, Lea & Flood 2014). The one generator used everywhere a
// seed appears: synthetic data, parameter init, dropout, shuffling, candidate
// sampling. Counter-based state update, so streams are reproducible across
// runs and platforms independent of library RNG implementations.
//
// Derived draws are pinned too:
//   uniform01  = (next_u64() >> 11) * 2^-53              (one raw draw)
//   normal     = Box-Muller                              (two raw draws)
//   below(n)   = next_u64() % n                          (one raw draw)
class SplitMix64 {
public:
    explicit SplitMix64(uint64_t seed) : state_(seed) {}

    uint64_t next_u64() {
        uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    // Uniform in [0, 1).
    double uniform01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

    // Standard normal; consumes exactly two raw draws per call.
    double normal() {
        double u1 = uniform01();
        double u2 = uniform01();
        if (u1 <= 0.0) u1 = 0x1.0p-53;
        constexpr double two_pi = 6.283185307179586476925286766559;
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(two_pi * u2);
    }

    // Uniform integer in [0, n). n == 0 returns 0. Plain modulo; the tiny
    // bias is irrelevant for fixture generation and keeps the stream pinned.
    uint64_t below(uint64_t n) { return n == 0 ? 0 : next_u64() % n; }

private:
    uint64_t state_;
};

} // namespace codwoe
