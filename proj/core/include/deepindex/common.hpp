#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace deepindex {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Malformed input files (TSV, embeddings, checkpoints).
struct ParseError : Error {
    using Error::Error;
};

// Invalid configuration or arguments.
struct ConfigError : Error {
    using Error::Error;
};

// splitmix64 step; used to derive independent seeds from (seed, salt).
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt) {
    std::uint64_t z = seed + 0x9e3779b97f4a7c15ull * (salt + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

// Uniform double in [lo, hi). Scales raw engine output instead of
// std::uniform_real_distribution, whose sequence is implementation-defined.
inline double uniform(std::mt19937_64& rng, double lo, double hi) {
    const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
    return lo + u * (hi - lo);
}

// Standard normal via Box-Muller, same portability rationale as uniform().
inline double gaussian(std::mt19937_64& rng) {
    double u1 = uniform(rng, 0.0, 1.0);
    while (u1 <= 1e-300) u1 = uniform(rng, 0.0, 1.0);
    const double u2 = uniform(rng, 0.0, 1.0);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
}

inline std::size_t bounded(std::mt19937_64& rng, std::size_t n) {
    return static_cast<std::size_t>(rng() % n);
}

// Fisher-Yates with mt19937_64 so shuffles are reproducible everywhere
// (std::shuffle's draw pattern is implementation-defined).
template <typename T>
void seeded_shuffle(std::vector<T>& v, std::mt19937_64& rng) {
    for (std::size_t i = v.size(); i > 1; --i) {
        std::swap(v[i - 1], v[bounded(rng, i)]);
    }
}

}  // namespace deepindex
