#pragma once

#include <cstdint>

namespace chunkcache {

// Counter-based pseudo-random generator: the i-th output is a strong mix of
// (key, i), so streams are reproducible, cheap to fork, and independent of
// platform library state. Construction derives the key from (seed, stream);
// split() forks a statistically independent stream from the same seed.
class Rng {
public:
    explicit Rng(std::uint64_t seed, std::uint64_t stream = 0)
        : key_(mix(mix(seed + golden) ^ mix(stream + 0x1570bf0a3e5bd7e9ULL))) {}

    std::uint64_t next_u64() { return mix(key_ + (++counter_) * golden); }

    // Uniform in [0, 1), 53 random mantissa bits.
    double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    // Uniform integer in [0, n), n >= 1. Lemire multiply-shift; bias < 2^-64.
    std::uint64_t next_below(std::uint64_t n) {
        return static_cast<std::uint64_t>(
            (static_cast<unsigned __int128>(next_u64()) * n) >> 64);
    }

    // Uniform in [lo, hi).
    double next_in(double lo, double hi) { return lo + (hi - lo) * next_double(); }

    Rng split(std::uint64_t stream) const { return Rng(key_, stream); }

private:
    static constexpr std::uint64_t golden = 0x9e3779b97f4a7c15ULL;

    // splitmix64 finalizer
    static std::uint64_t mix(std::uint64_t z) {
        z ^= z >> 30;
        z *= 0xbf58476d1ce4e5b9ULL;
        z ^= z >> 27;
        z *= 0x94d049bb133111ebULL;
        z ^= z >> 31;
        return z;
    }

    std::uint64_t key_;
    std::uint64_t counter_ = 0;
};

}  // namespace chunkcache
