#pragma once

#include <cstdint>
#include <random>

namespace bsim {

// SplitMix64 finalizer. Spreads consecutive seeds (base + i) into unrelated
// generator states.
constexpr std::uint64_t mix_seed(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

// Seed of trial `index` in a run seeded with `base`.
constexpr std::uint64_t trial_seed(std::uint64_t base, std::uint64_t index) {
    return base + index;
}

using Rng = std::mt19937_64;

inline Rng make_rng(std::uint64_t seed) { return Rng(mix_seed(seed)); }

// Uniform double in [0, 1) from the top 53 bits; identical on every platform.
inline double uniform01(Rng& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

}  // namespace bsim
