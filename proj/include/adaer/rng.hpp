#pragma once

#include <cstdint>
#include <random>

namespace adaer {

using Rng = std::mt19937_64;

/// SplitMix64 finalizer; used to derive independent sub-seeds from one run seed.
constexpr std::uint64_t mix_seed(std::uint64_t x) noexcept {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Sub-seed for a named purpose (data, init, shuffle, training) of one run seed.
constexpr std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) noexcept {
    return mix_seed(mix_seed(seed) ^ mix_seed(stream + 0x5851f42d4c957f2dULL));
}

namespace seed_stream {
inline constexpr std::uint64_t data = 1;
inline constexpr std::uint64_t test_data = 2;
inline constexpr std::uint64_t shuffle = 3;
inline constexpr std::uint64_t init = 4;
inline constexpr std::uint64_t train = 5;
inline constexpr std::uint64_t memory = 6;
} // namespace seed_stream

} // namespace adaer
