#pragma once

#include <cmath>
#include <cstdint>

namespace tgnef {

// Deterministic RNG built on splitmix64. We avoid <random> distributions
// because their output is not pinned by the standard; every draw here is
// bit-reproducible across platforms and compilers.
inline uint64_t splitmix64(uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// Mix an arbitrary number of 64-bit words into one seed.
inline uint64_t mix64(uint64_t a) { return splitmix64(a); }
template <typename... Rest>
uint64_t mix64(uint64_t a, Rest... rest) {
    return splitmix64(a ^ 0x9e3779b97f4a7c15ULL ^ (mix64(rest...) << 1 | 1));
}

class Rng {
public:
    explicit Rng(uint64_t seed = 0) : state_(splitmix64(seed ^ 0x853c49e6748fea9bULL)) {}

    uint64_t next_u64() {
        state_ = splitmix64(state_);
        return state_;
    }

    // Uniform in [0, 1).
    double next_double() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    // Uniform integer in [0, n). n must be > 0.
    uint64_t next_below(uint64_t n) {
        // Rejection-free modulo bias is negligible for n << 2^64, but we
        // keep exactness via rejection to make frequency tests clean.
        uint64_t threshold = (~n + 1) % n;  // = 2^64 mod n
        for (;;) {
            uint64_t r = next_u64();
            if (r >= threshold) return r % n;
        }
    }

    // Uniform in [lo, hi).
    double next_range(double lo, double hi) { return lo + (hi - lo) * next_double(); }

    // Standard normal via Box-Muller (the cached pair is not recycled so
    // every draw maps to a fixed number of raw outputs).
    double next_gaussian() {
        double u1 = next_double();
        double u2 = next_double();
        if (u1 < 1e-300) u1 = 1e-300;
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
    }

private:
    uint64_t state_;
};

inline uint64_t float_bits(double x) {
    union {
        double d;
        uint64_t u;
    } pun;
    pun.d = x;
    return pun.u;
}

}  // namespace tgnef
