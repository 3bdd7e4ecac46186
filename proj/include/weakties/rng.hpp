#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace weakties::rng {

// All randomness in the library goes through mt19937_64 (fully specified by
// the standard) with the raw-bits-to-double mapping below, so seeded runs are
// reproducible across platforms. std::*_distribution is avoided on purpose:
// its output is implementation defined.

inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// Stable per-task seed derivation (walk sampling, per-kind trainers, ...).
inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t a, std::uint64_t b = 0) {
    std::uint64_t s = base;
    splitmix64(s);
    s ^= a * 0xff51afd7ed558ccdULL;
    splitmix64(s);
    s ^= b * 0xc4ceb9fe1a85ec53ULL;
    return splitmix64(s);
}

// Uniform in [0, 1), 53 random bits.
inline double uniform_double(std::mt19937_64& g) {
    return static_cast<double>(g() >> 11) * 0x1.0p-53;
}

inline std::size_t uniform_index(std::mt19937_64& g, std::size_t n) {
    std::size_t i = static_cast<std::size_t>(uniform_double(g) * static_cast<double>(n));
    return i < n ? i : n - 1;
}

// Gaussian via Box-Muller on the portable uniform.
inline double gaussian(std::mt19937_64& g) {
    double u1 = uniform_double(g);
    while (u1 <= 0.0) u1 = uniform_double(g);
    const double u2 = uniform_double(g);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * 3.14159265358979323846 * u2);
}

} // namespace weakties::rng
