#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

namespace dynqr {

/// SplitMix64 output for the given state.
[[nodiscard]] inline std::uint64_t splitmix64(std::uint64_t state) noexcept {
    std::uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

/// n pairwise-distinct child seeds. The SplitMix64 finaliser is a bijection, so
/// distinct states (master + k * golden gamma) give distinct seeds.
[[nodiscard]] inline std::vector<std::uint64_t> derive_seeds(std::uint64_t master, std::size_t n) {
    std::vector<std::uint64_t> seeds(n);
    std::uint64_t state = master;
    for (std::size_t i = 0; i < n; ++i) {
        state += 0x9E3779B97F4A7C15ULL;
        seeds[i] = splitmix64(state);
    }
    return seeds;
}

}  // namespace dynqr
