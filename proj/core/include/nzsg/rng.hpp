#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

namespace nzsg::rng {

// Counter-based generator: every draw is a pure function of
// (seed, stream, counter), so any path can be regenerated independently of
// evaluation order or worker count.

constexpr std::uint64_t mix64(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

constexpr std::uint64_t word(std::uint64_t seed, std::uint64_t stream, std::uint64_t counter) {
    return mix64(mix64(mix64(seed) ^ stream) ^ (counter * 0xd1b54a32d192ed03ULL));
}

/// Uniform in the open interval (0, 1).
constexpr double uniform(std::uint64_t seed, std::uint64_t stream, std::uint64_t counter) {
    return (static_cast<double>(word(seed, stream, counter) >> 11) + 0.5) * 0x1.0p-53;
}

/// Standard normal via Box-Muller on two consecutive counters.
inline double normal(std::uint64_t seed, std::uint64_t stream, std::uint64_t counter) {
    const double a = uniform(seed, stream, 2 * counter);
    const double b = uniform(seed, stream, 2 * counter + 1);
    return std::sqrt(-2.0 * std::log(a)) * std::cos(2.0 * std::numbers::pi * b);
}

/// Independent sub-seed for a named purpose (e.g. the second run of a paired
/// comparison).
constexpr std::uint64_t derive(std::uint64_t seed, std::uint64_t purpose) {
    return mix64(seed ^ mix64(purpose + 0x632be59bd9b4e019ULL));
}

}  // namespace nzsg::rng
