#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "bpinr/metrics.hpp"
#include "bpinr/rng.hpp"
#include "bpinr/signal.hpp"

using namespace bpinr;

namespace {

DigitalSignal random_signal(SplitMix64& rng, int bit_depth, std::vector<std::size_t> shape) {
    std::vector<std::uint32_t> samples(shape_size(shape));
    for (auto& s : samples) s = std::uint32_t(rng.next() & max_level(bit_depth));
    return DigitalSignal(std::move(shape), bit_depth, std::move(samples));
}

// Naive double-loop references, kept deliberately independent of the library
// implementations.
double ber_by_loop(const DigitalSignal& a, const DigitalSignal& b) {
    long wrong = 0;
    for (std::size_t i = 0; i < a.samples.size(); ++i)
        for (int j = 0; j < a.bit_depth; ++j)
            wrong += int(((a.samples[i] >> j) & 1u) != ((b.samples[i] >> j) & 1u));
    return double(wrong) / (double(a.bit_depth) * double(a.samples.size()));
}

double rmse_by_loop(const DigitalSignal& a, const DigitalSignal& b) {
    double acc = 0;
    for (std::size_t i = 0; i < a.samples.size(); ++i) {
        const double d = double(a.samples[i]) - double(b.samples[i]);
        acc += d * d;
    }
    return std::sqrt(acc / double(a.samples.size()));
}

} // namespace

TEST_CASE("ber examples") {
    DigitalSignal a({1}, 8, {181});
    CHECK(ber(a, a) == 0.0);
    DigitalSignal b({1}, 8, {182}); // 10110101 vs 10110110 differ in 2 bits
    CHECK(ber(a, b) == doctest::Approx(0.25));
    CHECK(ber(b, a) == doctest::Approx(0.25)); // symmetric
}

TEST_CASE("ber matches the naive per-bit loop") {
    SplitMix64 rng(5);
    for (int trial = 0; trial < 50; ++trial) {
        auto a = random_signal(rng, 12, {7, 3});
        auto b = random_signal(rng, 12, {7, 3});
        CHECK(ber(a, b) == doctest::Approx(ber_by_loop(a, b)).epsilon(1e-12));
        if (ber(a, b) == 0.0)
            CHECK(a == b);
        else
            CHECK(a != b);
    }
}

TEST_CASE("ber rejects mismatched signals") {
    DigitalSignal a({2}, 8, {0, 1});
    DigitalSignal b({2}, 4, {0, 1});
    DigitalSignal c({1, 2}, 8, {0, 1});
    CHECK_THROWS_AS(ber(a, b), std::invalid_argument);
    CHECK_THROWS_AS(ber(a, c), std::invalid_argument);
}

TEST_CASE("psnr examples") {
    DigitalSignal a({1}, 8, {0});
    DigitalSignal b({1}, 8, {255});
    CHECK(std::isinf(psnr(a, a)));
    CHECK(psnr(a, b) == doctest::Approx(0.0).epsilon(1e-12));

    DigitalSignal c({2}, 8, {0, 0});
    DigitalSignal d({2}, 8, {255, 0});
    CHECK(psnr(c, d) == doctest::Approx(10.0 * std::log10(2.0)).epsilon(1e-12)); // ~3.0103 dB
}

TEST_CASE("psnr strictly decreases as mse grows") {
    DigitalSignal base({4}, 8, {10, 20, 30, 40});
    double prev = std::numeric_limits<double>::infinity();
    for (std::uint32_t off : {1u, 2u, 5u, 9u}) {
        DigitalSignal other({4}, 8, {10 + off, 20 + off, 30 + off, 40 + off});
        const double p = psnr(base, other);
        CHECK(p < prev);
        prev = p;
    }
}

TEST_CASE("rmse examples and oracle") {
    DigitalSignal a({3}, 8, {7, 7, 7});
    DigitalSignal b({3}, 8, {8, 8, 8});
    CHECK(rmse(a, a) == 0.0);
    CHECK(rmse(a, b) == doctest::Approx(1.0));

    SplitMix64 rng(9);
    for (int trial = 0; trial < 50; ++trial) {
        auto x = random_signal(rng, 16, {5, 4});
        auto y = random_signal(rng, 16, {5, 4});
        CHECK(rmse(x, y) == doctest::Approx(rmse_by_loop(x, y)).epsilon(1e-12));
    }
}

TEST_CASE("ssim basics") {
    SplitMix64 rng(13);
    auto a = random_signal(rng, 8, {16, 16});
    CHECK(ssim(a, a) == doctest::Approx(1.0).epsilon(1e-12));

    auto b = random_signal(rng, 8, {16, 16});
    const double s = ssim(a, b);
    CHECK(s >= -1.0);
    CHECK(s <= 1.0);
    CHECK(s < 1.0);

    auto tiny = random_signal(rng, 8, {8, 8});
    CHECK_THROWS_AS(ssim(tiny, tiny), std::invalid_argument);
    auto one_d = random_signal(rng, 8, {32});
    CHECK_THROWS_AS(ssim(one_d, one_d), std::invalid_argument);
}

TEST_CASE("ssim averages channels") {
    SplitMix64 rng(14);
    auto rgb = random_signal(rng, 8, {12, 12, 3});
    CHECK(ssim(rgb, rgb) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("per-plane ber examples") {
    SplitMix64 rng(21);
    auto a = random_signal(rng, 8, {6, 6});
    auto same = per_plane_ber(a, a);
    for (double v : same) CHECK(v == 0.0);

    // flip only the MSB plane everywhere
    DigitalSignal flipped = a;
    for (auto& s : flipped.samples) s ^= 0x80u;
    auto prof = per_plane_ber(a, flipped);
    for (int i = 0; i < 7; ++i) CHECK(prof[i] == 0.0);
    CHECK(prof[7] == 1.0);
}

TEST_CASE("per-plane mean equals total ber") {
    SplitMix64 rng(22);
    for (int trial = 0; trial < 20; ++trial) {
        auto a = random_signal(rng, 8, {5, 5});
        auto b = random_signal(rng, 8, {5, 5});
        auto prof = per_plane_ber(a, b);
        double mean = 0;
        for (double v : prof) mean += v;
        mean /= double(prof.size());
        CHECK(mean == doctest::Approx(ber(a, b)).epsilon(1e-12));
    }
}

TEST_CASE("metric report wires the pieces together") {
    SplitMix64 rng(23);
    auto a = random_signal(rng, 8, {16, 16});
    auto r = metric_report(a, a);
    CHECK(r.ber == 0.0);
    CHECK(r.rmse == 0.0);
    CHECK(std::isinf(r.psnr));
    REQUIRE(r.ssim.has_value());
    CHECK(*r.ssim == doctest::Approx(1.0));
    CHECK(r.per_plane_ber.size() == 8);

    auto small = random_signal(rng, 8, {3});
    auto r2 = metric_report(small, small);
    CHECK_FALSE(r2.ssim.has_value());
}
