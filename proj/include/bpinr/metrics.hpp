#pragma once

#include <bit>
#include <cmath>
#include <limits>
#include <optional>
#include <stdexcept>
#include <vector>

#include "bpinr/signal.hpp"

namespace bpinr {

struct MetricReport {
    double psnr = 0.0; // +infinity when identical
    double rmse = 0.0; // integer scale
    double ber = 0.0;
    std::optional<double> ssim; // absent when the shape cannot carry an 11x11 window
    std::vector<double> per_plane_ber;
};

namespace detail {

inline void check_comparable(const DigitalSignal& a, const DigitalSignal& b) {
    if (a.shape != b.shape || a.bit_depth != b.bit_depth)
        throw std::invalid_argument("signals differ in shape or bit depth");
}

} // namespace detail

// Fraction of differing bits over all samples and all n bit positions.
inline double ber(const DigitalSignal& a, const DigitalSignal& b) {
    detail::check_comparable(a, b);
    const std::uint32_t mask = std::uint32_t(max_level(a.bit_depth));
    std::uint64_t wrong = 0;
    for (std::size_t i = 0; i < a.samples.size(); ++i)
        wrong += std::popcount((a.samples[i] ^ b.samples[i]) & mask);
    return double(wrong) / (double(a.bit_depth) * double(a.samples.size()));
}

// BER restricted to each bit-plane, LSB first; the mean of the entries equals
// ber(a, b).
inline std::vector<double> per_plane_ber(const DigitalSignal& a, const DigitalSignal& b) {
    detail::check_comparable(a, b);
    std::vector<double> out(a.bit_depth, 0.0);
    for (std::size_t i = 0; i < a.samples.size(); ++i) {
        std::uint32_t diff = a.samples[i] ^ b.samples[i];
        for (int j = 0; j < a.bit_depth; ++j) out[j] += double((diff >> j) & 1u);
    }
    for (double& v : out) v /= double(a.samples.size());
    return out;
}

inline double mse_integer(const DigitalSignal& a, const DigitalSignal& b) {
    detail::check_comparable(a, b);
    double acc = 0.0;
    for (std::size_t i = 0; i < a.samples.size(); ++i) {
        double d = double(a.samples[i]) - double(b.samples[i]);
        acc += d * d;
    }
    return acc / double(a.samples.size());
}

inline double rmse(const DigitalSignal& a, const DigitalSignal& b) {
    return std::sqrt(mse_integer(a, b));
}

// 10 log10(peak^2 / MSE) with peak = 2^n - 1 on the integer scale, all
// channels jointly; +infinity when the signals are identical.
inline double psnr(const DigitalSignal& a, const DigitalSignal& b) {
    const double mse = mse_integer(a, b);
    if (mse == 0.0) return std::numeric_limits<double>::infinity();
    const double peak = double(max_level(a.bit_depth));
    return 10.0 * std::log10(peak * peak / mse);
}

namespace detail {

inline std::vector<double> gaussian_window_11() {
    std::vector<double> w(11);
    const double sigma = 1.5;
    double sum = 0.0;
    for (int i = 0; i < 11; ++i) {
        double d = i - 5;
        w[i] = std::exp(-d * d / (2.0 * sigma * sigma));
        sum += w[i];
    }
    for (double& v : w) v /= sum;
    return w;
}

} // namespace detail

// Structural similarity with the standard 11x11 Gaussian window (sigma 1.5,
// K1 = 0.01, K2 = 0.03), integer scale, per channel then averaged. Requires a
// (H, W) or (H, W, C) shape with H, W >= 11.
inline double ssim(const DigitalSignal& a, const DigitalSignal& b) {
    detail::check_comparable(a, b);
    if (a.shape.size() != 2 && a.shape.size() != 3)
        throw std::invalid_argument("ssim requires a (H,W) or (H,W,C) signal");
    const std::size_t h = a.shape[0];
    const std::size_t w = a.shape[1];
    const std::size_t c = a.shape.size() == 3 ? a.shape[2] : 1;
    if (h < 11 || w < 11)
        throw std::invalid_argument("ssim requires extents >= 11, got " + std::to_string(h) + "x" +
                                    std::to_string(w));
    const double range = double(max_level(a.bit_depth));
    const double c1 = (0.01 * range) * (0.01 * range);
    const double c2 = (0.03 * range) * (0.03 * range);
    const std::vector<double> win = detail::gaussian_window_11();

    double total = 0.0;
    for (std::size_t ch = 0; ch < c; ++ch) {
        auto at = [&](const DigitalSignal& s, std::size_t y, std::size_t x) {
            return double(s.samples[(y * w + x) * c + ch]);
        };
        double acc = 0.0;
        std::size_t count = 0;
        for (std::size_t y = 0; y + 11 <= h; ++y) {
            for (std::size_t x = 0; x + 11 <= w; ++x) {
                double mu_a = 0, mu_b = 0, aa = 0, bb = 0, ab = 0;
                for (int i = 0; i < 11; ++i) {
                    for (int j = 0; j < 11; ++j) {
                        const double wt = win[i] * win[j];
                        const double va = at(a, y + i, x + j);
                        const double vb = at(b, y + i, x + j);
                        mu_a += wt * va;
                        mu_b += wt * vb;
                        aa += wt * va * va;
                        bb += wt * vb * vb;
                        ab += wt * va * vb;
                    }
                }
                // shared rounding paths keep ssim(a,a) exactly 1 even when the
                // compiler contracts multiply-adds
                const double mu_aa = mu_a * mu_a;
                const double mu_bb = mu_b * mu_b;
                const double mu_ab = mu_a * mu_b;
                const double var_a = aa - mu_aa;
                const double var_b = bb - mu_bb;
                const double cov = ab - mu_ab;
                const double lum_num = (mu_ab + mu_ab) + c1;
                const double lum_den = (mu_aa + mu_bb) + c1;
                const double con_num = (cov + cov) + c2;
                const double con_den = (var_a + var_b) + c2;
                acc += (lum_num * con_num) / (lum_den * con_den);
                ++count;
            }
        }
        total += acc / double(count);
    }
    return total / double(c);
}

inline MetricReport metric_report(const DigitalSignal& a, const DigitalSignal& b) {
    MetricReport r;
    r.ber = ber(a, b);
    r.rmse = rmse(a, b);
    r.psnr = psnr(a, b);
    r.per_plane_ber = per_plane_ber(a, b);
    if ((a.shape.size() == 2 || a.shape.size() == 3) && a.shape[0] >= 11 && a.shape[1] >= 11)
        r.ssim = ssim(a, b);
    return r;
}

} // namespace bpinr
