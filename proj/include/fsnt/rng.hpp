#pragma once

#include <cstdint>
#include <random>

namespace fsnt {

using Rng = std::mt19937_64;

// splitmix64 finalizer. Child seeds are derived as splitmix64(master + (i+1)·γ)
// with γ = 0x9E3779B97F4A7C15, which is the splitmix64 stream of `master`.
constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

constexpr std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) noexcept {
    return splitmix64(master + index * 0x9E3779B97F4A7C15ULL);
}

}  // namespace fsnt
