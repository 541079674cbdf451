#pragma once

#include <cstdint>

namespace bpinr {

// Counter-based generator: draw i of a stream with seed s is
// splitmix64_finalize(s + (i+1) * 0x9E3779B97F4A7C15). Output depends only on
// (seed, index), so streams are reproducible across platforms and independent
// of how draws are batched.
class SplitMix64 {
public:
    explicit SplitMix64(std::uint64_t seed) : seed_(seed) {}

    std::uint64_t at(std::uint64_t index) const {
        std::uint64_t z = seed_ + (index + 1) * 0x9E3779B97F4A7C15ULL;
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    std::uint64_t next() { return at(counter_++); }

    // uniform in [0,1), 53 mantissa bits
    double next_unit() { return double(next() >> 11) * 0x1.0p-53; }

    double next_uniform(double lo, double hi) { return lo + (hi - lo) * next_unit(); }

    // uniform integer in [0, bound)
    std::uint64_t next_below(std::uint64_t bound) { return bound ? next() % bound : 0; }

    std::uint64_t seed() const { return seed_; }

private:
    std::uint64_t seed_ = 0;
    std::uint64_t counter_ = 0;
};

// Derives an independent stream seed, e.g. per layer or per experiment run.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
    return SplitMix64(seed ^ 0xA5A5A5A55A5A5A5AULL).at(stream);
}

} // namespace bpinr
