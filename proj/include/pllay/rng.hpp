#pragma once

#include <cstdint>
#include <vector>

namespace pllay {

// Portable 64-bit PRNG (xorshift64* with the multiplier from Vigna's
// "An experimental exploration of Marsaglia's xorshift generators").
// All dataset generation and parameter initialization goes through this
// generator so that seeded runs are bit-reproducible across platforms.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(splitmix64(seed)) {
        if (state_ == 0) state_ = 0x9E3779B97F4A7C15ULL;
    }

    std::uint64_t next_u64() {
        std::uint64_t x = state_;
        x ^= x >> 12;
        x ^= x << 25;
        x ^= x >> 27;
        state_ = x;
        return x * 0x2545F4914F6CDD1DULL;
    }

    // Uniform in [0, 1), 53-bit mantissa.
    double uniform01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

    // Uniform index in [0, n); n must be > 0.
    std::size_t uniform_index(std::size_t n) {
        // Floor of u01*n is portable and unbiased enough for test-scale n.
        auto i = static_cast<std::size_t>(uniform01() * static_cast<double>(n));
        return i >= n ? n - 1 : i;
    }

    bool bernoulli(double p) { return uniform01() < p; }

    // Fisher-Yates permutation of {0, ..., n-1}.
    std::vector<std::size_t> permutation(std::size_t n) {
        std::vector<std::size_t> perm(n);
        for (std::size_t i = 0; i < n; ++i) perm[i] = i;
        for (std::size_t i = n; i > 1; --i) {
            std::size_t j = uniform_index(i);
            std::swap(perm[i - 1], perm[j]);
        }
        return perm;
    }

    // splitmix64 (Steele et al.); used for seeding and stream derivation.
    static std::uint64_t splitmix64(std::uint64_t x) {
        x += 0x9E3779B97F4A7C15ULL;
        x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
        x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
        return x ^ (x >> 31);
    }

private:
    std::uint64_t state_;
};

// Per-item stream derivation: hash the (seed, index) pair so parallel
// generation of item i never depends on how many items precede it.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
    return Rng::splitmix64(seed ^ Rng::splitmix64(stream));
}

}  // namespace pllay
