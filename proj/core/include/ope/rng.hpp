#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <string_view>

namespace ope {

/// Deterministic RNG engine used throughout the toolkit. mt19937_64's output
/// sequence is fully specified by the standard, so results are reproducible
/// across platforms as long as all variate extraction goes through the
/// helpers below (never through std::uniform_*_distribution, whose output is
/// implementation-defined).
using RngEngine = std::mt19937_64;

/// One step of the splitmix64 sequence (Steele/Lea/Flood finalizer).
inline std::uint64_t splitmix64(std::uint64_t& state) {
    state += 0x9E3779B97F4A7C15ull;
    std::uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

/// Splittable seed derivation: folds `value` into `seed` and applies one
/// splitmix64 step. Chaining mix_seed calls over a tuple of values yields the
/// stream seed for that tuple; this is the stated seed-derivation scheme for
/// sweeps and per-episode streams.
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t value) {
    seed ^= value + 0x9E3779B97F4A7C15ull + (seed << 6) + (seed >> 2);
    return splitmix64(seed);
}

/// FNV-1a 64-bit hash, used for content hashes (policy/env signatures) and
/// for folding strings into seed chains.
inline std::uint64_t fnv1a64(std::string_view bytes) {
    std::uint64_t h = 0xCBF29CE484222325ull;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001B3ull;
    }
    return h;
}

/// Uniform double in [0, 1) from the top 53 bits of one engine draw.
inline double uniform_double(RngEngine& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

/// Uniform double in [lo, hi).
inline double uniform_double(RngEngine& rng, double lo, double hi) {
    return lo + (hi - lo) * uniform_double(rng);
}

/// Samples an index from an unnormalized nonnegative weight vector by a
/// cumulative walk. The caller guarantees the weights sum to ~1; the last
/// positive entry absorbs any floating-point shortfall.
inline std::size_t sample_categorical(std::span<const double> probs, RngEngine& rng) {
    const double u = uniform_double(rng);
    double cum = 0.0;
    std::size_t last_positive = 0;
    bool seen_positive = false;
    for (std::size_t i = 0; i < probs.size(); ++i) {
        if (probs[i] <= 0.0) continue;
        cum += probs[i];
        last_positive = i;
        seen_positive = true;
        if (u < cum) return i;
    }
    (void)seen_positive;
    return last_positive;
}

}  // namespace ope
