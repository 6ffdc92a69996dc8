#pragma once

#include <cstdint>
#include <random>

namespace qtrack {

// splitmix64 step; decorrelates seed material when deriving substreams.
inline std::uint64_t splitmix64(std::uint64_t& state) {
    state += 0x9e3779b97f4a7c15ull;
    std::uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

// Collapses (master, coordinates) into a single derived seed.
inline std::uint64_t splitmix_combine(std::uint64_t master, std::uint64_t a,
                                      std::uint64_t b = 0, std::uint64_t c = 0) {
    std::uint64_t s = master;
    std::uint64_t h = splitmix64(s);
    s ^= 0xd1342543de82ef95ull * (a + 1);
    h ^= splitmix64(s);
    s ^= 0x8cb92ba72f3d8dd7ull * (b + 1);
    h ^= splitmix64(s);
    s ^= 0xaef17502108ef2d9ull * (c + 1);
    h ^= splitmix64(s);
    return h;
}

// Deterministic substream derivation. Every Monte-Carlo loop in the project
// seeds its workers as make_stream(master, coordinate...), so results do not
// depend on thread count or execution order.
inline std::mt19937_64 make_stream(std::uint64_t master, std::uint64_t a,
                                   std::uint64_t b = 0, std::uint64_t c = 0) {
    return std::mt19937_64(splitmix_combine(master, a, b, c));
}

}  // namespace qtrack
