#pragma once

#include <cstdint>
#include <limits>
#include <random>
#include <span>

namespace rte::detail {

// SplitMix64 finalizer; used to derive independent per-replica seeds.
inline std::uint64_t mix64(std::uint64_t x) noexcept
{
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline std::uint64_t stream_seed(std::uint64_t seed, std::uint64_t stream) noexcept
{
    return mix64(mix64(seed) ^ mix64(stream + 0x632be59bd9b4e019ULL));
}

// std::mt19937_64 output is fully specified by the standard, but the
// std:: distributions are not. The helpers below keep every draw
// bit-identical across standard library implementations.

/// Uniform integer in [0, bound) by rejection (no modulo bias).
inline std::uint64_t uniform_below(std::mt19937_64& engine, std::uint64_t bound)
{
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max()
                              - std::numeric_limits<std::uint64_t>::max() % bound;
    std::uint64_t draw = engine();
    while (draw >= limit) draw = engine();
    return draw % bound;
}

/// Uniform double in [0, 1) with 53 random bits.
inline double uniform_unit(std::mt19937_64& engine)
{
    return static_cast<double>(engine() >> 11) * 0x1.0p-53;
}

template <typename T>
void fisher_yates(std::span<T> items, std::mt19937_64& engine)
{
    for (std::size_t i = items.size(); i > 1; --i) {
        const auto j = static_cast<std::size_t>(uniform_below(engine, i));
        std::swap(items[i - 1], items[j]);
    }
}

/// Draws an index from a probability vector (sums to 1).
template <typename Range>
std::size_t sample_categorical(const Range& probs, std::mt19937_64& engine)
{
    const double u = uniform_unit(engine);
    double cumulative = 0.0;
    std::size_t last_positive = 0;
    std::size_t i = 0;
    for (double p : probs) {
        if (p > 0.0) {
            cumulative += p;
            last_positive = i;
            if (u < cumulative) return i;
        }
        ++i;
    }
    return last_positive;
}

} // namespace rte::detail
