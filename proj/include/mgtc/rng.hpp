#pragma once

#include <cstdint>
#include <numeric>
#include <vector>

namespace mgtc {

// splitmix64 (Steele, Lea, Flood 2014). Pinned here so golden masks stay
// stable across platforms and language ports.
class SplitMix64 {
public:
    explicit SplitMix64(uint64_t seed) : state_(seed) {}

    uint64_t next() {
        uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    // Unbiased bounded draw via rejection sampling.
    uint64_t next_below(uint64_t bound) {
        uint64_t threshold = (0 - bound) % bound;
        for (;;) {
            uint64_t r = next();
            if (r >= threshold) return r % bound;
        }
    }

    // Uniform double in [0, 1) from the top 53 bits.
    double next_double() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

private:
    uint64_t state_;
};

// First k entries of a Fisher-Yates shuffle of [0, n): a uniform k-subset.
inline std::vector<long> sample_without_replacement(long n, long k, SplitMix64& rng) {
    std::vector<long> idx(n);
    std::iota(idx.begin(), idx.end(), 0L);
    for (long i = 0; i < k; ++i) {
        long j = i + static_cast<long>(rng.next_below(static_cast<uint64_t>(n - i)));
        std::swap(idx[i], idx[j]);
    }
    idx.resize(k);
    return idx;
}

}  // namespace mgtc
