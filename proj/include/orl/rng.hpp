#pragma once

#include <cstdint>
#include <random>

namespace orl {

// Deterministic random source. All derived draws (reals, bounded ints) are
// implemented here rather than with std::*_distribution, whose output is
// implementation-defined; seeded streams must reproduce bit-for-bit.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    // Uniform in [0, 1) with 53-bit resolution.
    double canonical() {
        return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    }

    // Uniform integer in [0, n), n > 0.
    int below(int n) {
        const auto wide = static_cast<unsigned __int128>(engine_());
        return static_cast<int>((wide * static_cast<std::uint64_t>(n)) >> 64);
    }

    double uniform(double lo, double hi) {
        return lo + (hi - lo) * canonical();
    }

private:
    std::mt19937_64 engine_;
};

// SplitMix64 finalizer, used to derive well-separated stream seeds.
inline std::uint64_t split_mix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline std::uint64_t seed_combine(std::uint64_t a, std::uint64_t b) {
    return split_mix64(split_mix64(a) ^ (b + 0x9e3779b97f4a7c15ULL));
}

inline std::uint64_t seed_combine(std::uint64_t a, std::uint64_t b, std::uint64_t c) {
    return seed_combine(seed_combine(a, b), c);
}

} // namespace orl
