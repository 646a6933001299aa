#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace kddsp {

using Rng = std::mt19937_64;

/// SplitMix64 finalizer; used to derive independent stream seeds.
constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Seed for the stream identified by a tuple of integers, e.g. (seed, generation, index).
/// Streams derived this way make parallel and serial execution draw identical numbers.
inline std::uint64_t derive_seed(std::initializer_list<std::uint64_t> parts) noexcept {
    std::uint64_t h = 0x6a09e667f3bcc909ULL;
    for (auto p : parts) h = mix64(h ^ mix64(p));
    return h;
}

inline Rng derive_rng(std::initializer_list<std::uint64_t> parts) { return Rng(derive_seed(parts)); }

/// Uniform double in [0,1) from the top 53 bits. Unlike std::uniform_real_distribution
/// the result is identical across standard library implementations.
inline double uniform01(Rng &rng) noexcept { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

/// Uniform double in the open interval (0,1).
inline double uniform_open01(Rng &rng) noexcept {
    double u;
    do {
        u = uniform01(rng);
    } while (u == 0.0);
    return u;
}

/// Uniform integer in [0, bound) by rejection (bound > 0).
inline std::uint64_t uniform_below(Rng &rng, std::uint64_t bound) noexcept {
    const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % bound);
    std::uint64_t x;
    do {
        x = rng();
    } while (x >= limit);
    return x % bound;
}

}  // namespace kddsp
