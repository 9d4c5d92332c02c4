#pragma once

#include <cstdint>
#include <random>

namespace tbss {

/// The engine behind every simulation draw.
using Rng = std::mt19937_64;

/// One step of the SplitMix64 sequence: advances `state`, returns the output.
inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

/// Seed of sub-stream `stream` of `master`. Distinct (master, stream) pairs
/// give unrelated seeds; the rule is fixed so results are reproducible.
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream) {
    std::uint64_t s = master;
    const std::uint64_t a = splitmix64(s);
    std::uint64_t t = a ^ (stream * 0xD1B54A32D192ED03ULL);
    splitmix64(t);
    return splitmix64(t);
}

inline Rng make_rng(std::uint64_t seed) { return Rng(seed); }

}  // namespace tbss
