#pragma once

#include <cstdint>

namespace kvsched {

/// SplitMix64: 64-bit state, constants from Steele et al. Every randomized
/// path in the library (generators, sampling) draws from this so that a fixed
/// seed reproduces instances bit-for-bit across platforms.
class SplitMix64 {
public:
    explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next_u64() {
        std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    /// Uniform in [0, 1): top 53 bits scaled by 2^-53.
    double next_double() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    /// Uniform integer in [0, bound) by modulo reduction. The bias is
    /// negligible for the bounds used here (~1e5 at most) and the rule is
    /// simple enough to restate in any language.
    std::uint64_t next_below(std::uint64_t bound) {
        return next_u64() % bound;
    }

private:
    std::uint64_t state_;
};

}  // namespace kvsched
