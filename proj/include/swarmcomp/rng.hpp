#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace sc {

// All randomness in a run flows from one seed through named substreams so
// that phases (compose/assess/evolve/null-models) stay independent and
// reorderable without breaking reproducibility.
inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

inline std::uint64_t stream_seed(std::uint64_t run_seed, std::string_view label,
                                 std::uint64_t a = 0, std::uint64_t b = 0) {
    std::uint64_t h = 0xCBF29CE484222325ULL;  // FNV-1a
    for (char c : label) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001B3ULL;
    }
    h = splitmix64(h ^ splitmix64(run_seed));
    h = splitmix64(h ^ splitmix64(a + 0x9E3779B97F4A7C15ULL));
    h = splitmix64(h ^ splitmix64(b + 0x2545F4914F6CDD1DULL));
    return h;
}

inline std::mt19937_64 make_rng(std::uint64_t run_seed, std::string_view label,
                                std::uint64_t a = 0, std::uint64_t b = 0) {
    return std::mt19937_64(stream_seed(run_seed, label, a, b));
}

}  // namespace sc
