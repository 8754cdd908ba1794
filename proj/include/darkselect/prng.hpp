#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <string_view>

namespace darkselect {

// Deterministic PRNG used for mock noise and synthetic corpora. Hand-rolled
// (splitmix64 core) so that streams are identical across platforms and
// standard-library versions; std::normal_distribution gives no such promise.
class Prng {
public:
    explicit Prng(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next_u64() {
        std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    // Uniform in [0, 1). 53-bit mantissa.
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // i in [0, n). n must be > 0; modulo bias is irrelevant at our scales.
    std::uint64_t below(std::uint64_t n) { return next_u64() % n; }

    // Standard normal via Box-Muller, one value per call (the pair's second
    // half is discarded to keep the stream position independent of call site).
    double gaussian() {
        double u1 = uniform();
        double u2 = uniform();
        if (u1 < 1e-300) u1 = 1e-300;
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
    }

private:
    std::uint64_t state_;
};

inline std::uint64_t fnv1a64(std::string_view s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

// Stable per-key substream: same (seed, key) always yields the same stream.
inline Prng keyed_prng(std::uint64_t seed, std::string_view key) {
    return Prng(seed ^ fnv1a64(key));
}

}  // namespace darkselect
