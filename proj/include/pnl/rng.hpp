#pragma once

// Counter-based seed derivation: every (master seed, stream name, frequency)
// triple maps to an independent 64-bit seed, so adding a frequency or a seed
// to a run never perturbs the streams of the others.

#include <bit>
#include <cstdint>
#include <string_view>

namespace pnl {

inline constexpr std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline constexpr std::uint64_t fnv1a(std::string_view s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (char c : s) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001b3ULL;
    }
    return h;
}

inline std::uint64_t derive_seed(std::uint64_t master, std::string_view stream, double frequency_hz = 0.0) {
    std::uint64_t h = splitmix64(master);
    h = splitmix64(h ^ fnv1a(stream));
    h = splitmix64(h ^ std::bit_cast<std::uint64_t>(frequency_hz));
    return h;
}

}  // namespace pnl
