// SPDX-License-Identifier: Apache-2.0
#ifndef L2S_RNG_HPP
#define L2S_RNG_HPP

#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>
#include <random>

namespace l2s {

// Seeded random source for all simulation code. The engine is std::mt19937_64,
// whose output sequence is fixed by the C++ standard; every distribution
// transform below is written out explicitly rather than delegated to
// std::*_distribution, whose algorithms are implementation-defined. Identical
// seeds therefore give identical draws on any conforming platform.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    /// Uniform in (0, 1]: 53-bit mantissa, never returns 0.
    double uniform01() {
        return static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53;
    }

    /// Uniform in [lo, hi).
    double uniform(double lo, double hi) {
        return lo + (uniform01() - 0x1.0p-53) * (hi - lo);
    }

    /// Standard normal via Box-Muller. Draws a full pair per call.
    double normal() {
        const double r = std::sqrt(-2.0 * std::log(uniform01()));
        const double theta = 2.0 * std::numbers::pi * uniform01();
        return r * std::cos(theta);
    }

    /// Circularly-symmetric complex Gaussian with E|z|^2 = 1.
    std::complex<double> complex_normal_unit() {
        const double r = std::sqrt(-std::log(uniform01()));
        const double theta = 2.0 * std::numbers::pi * uniform01();
        return {r * std::cos(theta), r * std::sin(theta)};
    }

    /// Exponential with mean 1 (|CN(0,1)|^2 has this law).
    double exponential() { return -std::log(uniform01()); }

private:
    std::mt19937_64 engine_;
};

// Substream seeding rule: realization k of a run seeded with `master` uses
// splitmix64_mix(master + (k + 1) * 0x9E3779B97F4A7C15). Documented so that
// independently written tools can reproduce the same realizations.
inline std::uint64_t splitmix64_mix(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

inline std::uint64_t derive_stream(std::uint64_t master_seed, std::uint64_t index) {
    return splitmix64_mix(master_seed + (index + 1) * 0x9E3779B97F4A7C15ULL);
}

} // namespace l2s

#endif
