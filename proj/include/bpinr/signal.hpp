#pragma once

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace bpinr {

inline std::size_t shape_size(const std::vector<std::size_t>& shape) {
    std::size_t n = 1;
    for (std::size_t e : shape) n *= e;
    return n;
}

// Maximum level of an n-bit code, 2^n - 1.
inline std::uint64_t max_level(int bit_depth) {
    return (std::uint64_t(1) << bit_depth) - 1;
}

// An n-bit digital signal on a d-dimensional grid, samples row-major.
struct DigitalSignal {
    std::vector<std::size_t> shape;
    int bit_depth = 8;
    std::vector<std::uint32_t> samples;

    DigitalSignal() = default;

    DigitalSignal(std::vector<std::size_t> shape_, int bit_depth_, std::vector<std::uint32_t> samples_)
        : shape(std::move(shape_)), bit_depth(bit_depth_), samples(std::move(samples_)) {
        validate();
    }

    void validate() const {
        if (bit_depth < 1 || bit_depth > 32)
            throw std::invalid_argument("bit depth must be in [1,32], got " + std::to_string(bit_depth));
        if (shape.empty()) throw std::invalid_argument("signal shape is empty");
        for (std::size_t e : shape)
            if (e == 0) throw std::invalid_argument("signal shape has a zero extent");
        if (samples.size() != shape_size(shape))
            throw std::invalid_argument("sample count " + std::to_string(samples.size()) +
                                        " does not match shape product " + std::to_string(shape_size(shape)));
        const std::uint64_t top = max_level(bit_depth);
        for (std::uint32_t s : samples)
            if (s > top)
                throw std::invalid_argument("sample " + std::to_string(s) + " exceeds max level " +
                                            std::to_string(top));
    }

    std::size_t size() const { return samples.size(); }

    bool operator==(const DigitalSignal&) const = default;
};

// LSB-first stack of k-bit planes; k = 1 gives bit-planes.
struct QuantizedStack {
    int plane_bits = 1;       // k
    int source_bit_depth = 8; // n
    std::vector<std::size_t> shape;
    std::vector<std::vector<std::uint32_t>> planes; // planes[i] is the i-th least significant

    int plane_count() const { return int(planes.size()); }
};

// Nearest level of the uniform n-bit code on [0,1], returned as the integer
// level in [0, 2^n - 1]. Exact midpoints round half away from zero; inputs
// outside [0,1] are clamped first.
inline std::uint32_t quantize(double value, int bits) {
    if (bits < 1 || bits > 32)
        throw std::invalid_argument("quantize: bits must be in [1,32], got " + std::to_string(bits));
    if (!std::isfinite(value)) throw std::invalid_argument("quantize: non-finite input");
    const double top = double(max_level(bits));
    value = std::clamp(value, 0.0, 1.0);
    long long level = std::llround(value * top); // llround: halfway away from zero
    if (level < 0) level = 0;
    if (double(level) > top) level = (long long)top;
    return std::uint32_t(level);
}

// Error ceiling of n-bit quantization, 1 / (2 (2^n - 1)).
inline double epsilon(int bits) {
    if (bits < 1) throw std::invalid_argument("epsilon: bits must be >= 1, got " + std::to_string(bits));
    return 1.0 / (2.0 * (std::ldexp(1.0, bits) - 1.0));
}

// Normalized value of an integer level, level / (2^n - 1).
inline double normalized_level(std::uint64_t level, int bits) {
    return double(level) / double(max_level(bits));
}

inline std::vector<double> normalize(const DigitalSignal& signal) {
    std::vector<double> out(signal.samples.size());
    const double top = double(max_level(signal.bit_depth));
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = double(signal.samples[i]) / top;
    return out;
}

// Splits an n-bit signal into n/k planes of k bits each, least significant
// plane first: plane i holds (sample >> k*i) mod 2^k.
inline QuantizedStack decompose(const DigitalSignal& signal, int plane_bits) {
    const int n = signal.bit_depth;
    if (plane_bits < 1 || n % plane_bits != 0)
        throw std::invalid_argument("plane bits " + std::to_string(plane_bits) +
                                    " does not divide bit depth " + std::to_string(n));
    const int m = n / plane_bits;
    const std::uint32_t mask = std::uint32_t(max_level(plane_bits));
    QuantizedStack stack;
    stack.plane_bits = plane_bits;
    stack.source_bit_depth = n;
    stack.shape = signal.shape;
    stack.planes.resize(m);
    for (int i = 0; i < m; ++i) {
        auto& plane = stack.planes[i];
        plane.resize(signal.samples.size());
        const int shift = plane_bits * i;
        for (std::size_t s = 0; s < plane.size(); ++s) plane[s] = (signal.samples[s] >> shift) & mask;
    }
    return stack;
}

// Integer-exact inverse of decompose: sample = sum_i (2^k)^i * plane_i.
inline DigitalSignal recompose(const QuantizedStack& stack) {
    const int k = stack.plane_bits;
    const int m = stack.plane_count();
    if (k < 1 || m < 1) throw std::invalid_argument("recompose: empty or invalid stack");
    if (k * m != stack.source_bit_depth)
        throw std::invalid_argument("recompose: plane bits * plane count != source bit depth");
    const std::size_t count = shape_size(stack.shape);
    const std::uint32_t top = std::uint32_t(max_level(k));
    std::vector<std::uint32_t> samples(count, 0);
    for (int i = 0; i < m; ++i) {
        const auto& plane = stack.planes[i];
        if (plane.size() != count)
            throw std::invalid_argument("recompose: plane " + std::to_string(i) + " has wrong sample count");
        const int shift = k * i;
        for (std::size_t s = 0; s < count; ++s) {
            if (plane[s] > top)
                throw std::invalid_argument("recompose: plane " + std::to_string(i) + " holds value " +
                                            std::to_string(plane[s]) + " >= 2^" + std::to_string(k));
            samples[s] |= plane[s] << shift;
        }
    }
    return DigitalSignal(stack.shape, stack.source_bit_depth, std::move(samples));
}

// The 32 binary planes of IEEE-754 binary32 bit patterns: indices 0-22
// mantissa (LSB first), 23-30 exponent, 31 sign.
struct Fp32PlaneStack {
    std::size_t length = 0;
    std::array<std::vector<std::uint8_t>, 32> planes;
};

inline Fp32PlaneStack fp32_decompose(std::span<const float> samples) {
    Fp32PlaneStack stack;
    stack.length = samples.size();
    for (auto& plane : stack.planes) plane.resize(samples.size());
    for (std::size_t s = 0; s < samples.size(); ++s) {
        const std::uint32_t bits = std::bit_cast<std::uint32_t>(samples[s]);
        for (int j = 0; j < 32; ++j) stack.planes[j][s] = std::uint8_t((bits >> j) & 1u);
    }
    return stack;
}

inline std::vector<float> fp32_recompose(const Fp32PlaneStack& stack) {
    for (int j = 0; j < 32; ++j) {
        if (stack.planes[j].size() != stack.length)
            throw std::invalid_argument("fp32 stack: plane " + std::to_string(j) + " has wrong length");
        for (std::uint8_t v : stack.planes[j])
            if (v > 1) throw std::invalid_argument("fp32 stack: plane entry outside {0,1}");
    }
    std::vector<float> out(stack.length);
    for (std::size_t s = 0; s < stack.length; ++s) {
        std::uint32_t bits = 0;
        for (int j = 0; j < 32; ++j) bits |= std::uint32_t(stack.planes[j][s]) << j;
        out[s] = std::bit_cast<float>(bits);
    }
    return out;
}

} // namespace bpinr
