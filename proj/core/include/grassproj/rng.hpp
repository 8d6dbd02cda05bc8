#pragma once

#include <cstdint>
#include <random>

namespace grassproj {

using Rng = std::mt19937_64;

/// SplitMix64 finalizer; used to derive independent per-task streams.
constexpr std::uint64_t mix_seed(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Stream for task `index` of a run seeded with `seed`.
inline Rng task_rng(std::uint64_t seed, std::uint64_t index) {
    return Rng(mix_seed(seed ^ mix_seed(index + 1)));
}

}  // namespace grassproj
