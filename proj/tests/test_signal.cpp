#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <bit>
#include <cmath>
#include <vector>

#include "bpinr/rng.hpp"
#include "bpinr/signal.hpp"

using namespace bpinr;

namespace {

// Independent oracle: scan every level of the n-bit code for the L1-nearest
// one, resolving exact ties away from zero.
std::uint32_t quantize_by_enumeration(double value, int bits) {
    const std::uint64_t top = max_level(bits);
    double best_dist = std::numeric_limits<double>::infinity();
    std::uint64_t best = 0;
    for (std::uint64_t level = 0; level <= top; ++level) {
        const double dist = std::abs(value - double(level) / double(top));
        if (dist < best_dist || (dist == best_dist && level > best)) {
            best_dist = dist;
            best = level;
        }
    }
    return std::uint32_t(best);
}

// Independent oracle: the worst quantization error is attained at a midpoint
// between adjacent levels; scan every midpoint and take the distance to the
// nearer neighbour.
double epsilon_by_bruteforce(int bits) {
    const std::uint64_t top = max_level(bits);
    double worst = 0.0;
    for (std::uint64_t level = 0; level < top; ++level) {
        const double mid = (double(level) + 0.5) / double(top);
        const double err = std::min(std::abs(mid - double(level) / double(top)),
                                    std::abs(mid - double(level + 1) / double(top)));
        worst = std::max(worst, err);
    }
    return worst;
}

DigitalSignal random_signal(SplitMix64& rng, int bit_depth, std::vector<std::size_t> shape) {
    std::vector<std::uint32_t> samples(shape_size(shape));
    for (auto& s : samples) s = std::uint32_t(rng.next() & max_level(bit_depth));
    return DigitalSignal(std::move(shape), bit_depth, std::move(samples));
}

} // namespace

TEST_CASE("quantize nearest-level examples") {
    CHECK(quantize(0.3, 1) == 0);
    CHECK(quantize(0.4, 2) == 1);
    // tie case: 127.5/255 sits exactly between levels 127 and 128
    CHECK(quantize_by_enumeration(127.5 / 255.0, 8) == 128);
    CHECK(std::abs(127.5 / 255.0 - 127.0 / 255.0) == std::abs(127.5 / 255.0 - 128.0 / 255.0));
    CHECK(quantize(127.5 / 255.0, 8) == 128);
}

TEST_CASE("quantize agrees with the enumeration oracle") {
    SplitMix64 rng(11);
    for (int bits : {1, 2, 4, 8}) {
        for (int i = 0; i < 200; ++i) {
            const double v = rng.next_unit();
            CHECK(quantize(v, bits) == quantize_by_enumeration(v, bits));
        }
    }
}

TEST_CASE("quantize rejects bad input") {
    CHECK_THROWS_AS(quantize(0.5, 0), std::invalid_argument);
    CHECK_THROWS_AS(quantize(0.5, 33), std::invalid_argument);
    CHECK_THROWS_AS(quantize(std::nan(""), 8), std::invalid_argument);
    CHECK(quantize(-0.25, 8) == 0);  // clamped
    CHECK(quantize(1.25, 8) == 255); // clamped
}

TEST_CASE("epsilon closed form vs brute force") {
    CHECK(epsilon(1) == 0.5);
    CHECK(epsilon(8) == doctest::Approx(1.0 / 510.0).epsilon(1e-15));
    CHECK(epsilon(16) == doctest::Approx(1.0 / 131070.0).epsilon(1e-15));
    CHECK(epsilon(8) == doctest::Approx(epsilon_by_bruteforce(8)).epsilon(1e-12));
    CHECK(epsilon(16) == doctest::Approx(epsilon_by_bruteforce(16)).epsilon(1e-12));
    CHECK_THROWS_AS(epsilon(0), std::invalid_argument);
}

TEST_CASE("quantize-normalize error stays within the ceiling") {
    SplitMix64 rng(42);
    for (int bits : {1, 2, 3, 8, 12, 16}) {
        for (int i = 0; i < 500; ++i) {
            const double v = rng.next_unit();
            const double back = normalized_level(quantize(v, bits), bits);
            CHECK(std::abs(back - v) <= epsilon(bits) + 1e-15);
        }
    }
}

TEST_CASE("decompose bit-plane examples") {
    DigitalSignal sig({1}, 8, {181});

    auto k1 = decompose(sig, 1);
    std::vector<std::uint32_t> expected{1, 0, 1, 0, 1, 1, 0, 1}; // LSB first
    REQUIRE(k1.plane_count() == 8);
    for (int i = 0; i < 8; ++i) CHECK(k1.planes[i][0] == expected[i]);

    auto k4 = decompose(sig, 4);
    REQUIRE(k4.plane_count() == 2);
    CHECK(k4.planes[0][0] == 5);
    CHECK(k4.planes[1][0] == 11);

    auto k8 = decompose(sig, 8);
    REQUIRE(k8.plane_count() == 1);
    CHECK(k8.planes[0][0] == 181);

    CHECK_THROWS_AS(decompose(sig, 3), std::invalid_argument);
}

TEST_CASE("recompose examples and rejection") {
    QuantizedStack stack;
    stack.plane_bits = 4;
    stack.source_bit_depth = 8;
    stack.shape = {1};
    stack.planes = {{5}, {11}};
    CHECK(recompose(stack).samples[0] == 181);

    stack.planes = {{5}, {16}}; // 16 >= 2^4
    CHECK_THROWS_WITH_AS(recompose(stack), doctest::Contains("plane 1"), std::invalid_argument);
}

TEST_CASE("decompose/recompose roundtrip is the identity") {
    SplitMix64 rng(7);
    for (int trial = 0; trial < 1000; ++trial) {
        DigitalSignal sig = random_signal(rng, 16, {4, 5});
        for (int k : {1, 2, 4, 8, 16}) {
            auto stack = decompose(sig, k);
            CHECK(recompose(stack) == sig);
        }
    }
}

TEST_CASE("k=1 planes are binary, k=n is the identity stack") {
    SplitMix64 rng(19);
    DigitalSignal sig = random_signal(rng, 8, {6, 6});
    auto k1 = decompose(sig, 1);
    for (const auto& plane : k1.planes)
        for (auto v : plane) CHECK(v <= 1);
    auto kn = decompose(sig, 8);
    CHECK(kn.planes[0] == sig.samples);
}

TEST_CASE("normalize maps levels onto [0,1]") {
    DigitalSignal sig({3}, 8, {255, 0, 85});
    auto norm = normalize(sig);
    CHECK(norm[0] == 1.0);
    CHECK(norm[1] == 0.0);
    CHECK(norm[2] == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
}

TEST_CASE("fp32 plane layout of known values") {
    std::vector<float> vals{1.0f, 0.0f, -0.0f};
    auto stack = fp32_decompose(vals);

    // 1.0f = 0x3F800000: bits 23..29 set, bit 30 and bit 22 clear, sign clear
    const std::uint32_t one_bits = std::bit_cast<std::uint32_t>(1.0f);
    CHECK(one_bits == 0x3F800000u);
    for (int j = 0; j < 32; ++j) CHECK(stack.planes[j][0] == ((one_bits >> j) & 1u));

    for (int j = 0; j < 32; ++j) CHECK(stack.planes[j][1] == 0);

    for (int j = 0; j < 31; ++j) CHECK(stack.planes[j][2] == 0);
    CHECK(stack.planes[31][2] == 1); // sign of -0.0f
}

TEST_CASE("fp32 roundtrip preserves every bit pattern") {
    SplitMix64 rng(3);
    std::vector<float> vals;
    for (int i = 0; i < 10000; ++i) vals.push_back(std::bit_cast<float>(std::uint32_t(rng.next())));
    // adversarial patterns: NaN payloads, infinities, signed zeros, denormals
    for (std::uint32_t p : {0x7FC00001u, 0xFFC12345u, 0x7F800000u, 0xFF800000u, 0x80000000u, 0x00000000u,
                            0x00000001u, 0x807FFFFFu})
        vals.push_back(std::bit_cast<float>(p));

    auto stack = fp32_decompose(vals);
    auto back = fp32_recompose(stack);
    REQUIRE(back.size() == vals.size());
    for (std::size_t i = 0; i < vals.size(); ++i)
        CHECK(std::bit_cast<std::uint32_t>(back[i]) == std::bit_cast<std::uint32_t>(vals[i]));
}

TEST_CASE("fp32 roundtrip over exhaustive 16-bit subsamples") {
    // every pattern of the top 16 bits (sign, exponent, mantissa head) and
    // every pattern of the low 16 mantissa bits, each against two fixed
    // values of the other half
    std::vector<float> vals;
    vals.reserve(4 << 16);
    for (std::uint32_t hi = 0; hi < 0x10000; ++hi) {
        vals.push_back(std::bit_cast<float>(hi << 16));
        vals.push_back(std::bit_cast<float>((hi << 16) | 0xA5C3u));
    }
    for (std::uint32_t lo = 0; lo < 0x10000; ++lo) {
        vals.push_back(std::bit_cast<float>(lo));
        vals.push_back(std::bit_cast<float>(0x5A7E0000u | lo));
    }
    auto back = fp32_recompose(fp32_decompose(vals));
    REQUIRE(back.size() == vals.size());
    std::size_t mismatches = 0;
    for (std::size_t i = 0; i < vals.size(); ++i)
        mismatches +=
            std::bit_cast<std::uint32_t>(back[i]) != std::bit_cast<std::uint32_t>(vals[i]);
    CHECK(mismatches == 0);
}

TEST_CASE("signal invariants are enforced") {
    CHECK_THROWS_AS(DigitalSignal({2}, 8, {256, 0}), std::invalid_argument);
    CHECK_THROWS_AS(DigitalSignal({2}, 8, {1}), std::invalid_argument);
    CHECK_THROWS_AS(DigitalSignal({0}, 8, {}), std::invalid_argument);
    CHECK_THROWS_AS(DigitalSignal({1}, 0, {0}), std::invalid_argument);
    CHECK_THROWS_AS(DigitalSignal({1}, 33, {0}), std::invalid_argument);
}
