#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace setbp {

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

/// Independent sub-seed for a named random stream (and optional time index).
inline std::uint64_t derive_seed(std::uint64_t base, std::string_view stream, std::uint64_t index = 0) {
    std::uint64_t h = 0xCBF29CE484222325ULL;
    for (unsigned char c : stream) {
        h ^= c;
        h *= 0x100000001B3ULL;
    }
    return splitmix64(splitmix64(base ^ h) + index);
}

using Rng = std::mt19937_64;

inline Rng make_rng(std::uint64_t base, std::string_view stream, std::uint64_t index = 0) {
    return Rng(derive_seed(base, stream, index));
}

}  // namespace setbp
