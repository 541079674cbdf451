#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <future>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "bpinr/bigint.hpp"
#include "bpinr/metrics.hpp"
#include "bpinr/network.hpp"
#include "bpinr/rng.hpp"
#include "bpinr/signal.hpp"
#include "bpinr/ternary.hpp"
#include "bpinr/training.hpp"

namespace bpinr {

// Architecture knob shared by the experiments: hidden width, hidden depth
// and the activation; input/output widths are derived from the signal.
struct NetSpec {
    int width = 128;
    int depth = 3;
    ActivationKind activation = ActivationKind::sine();
};

// ------------------------------------------------------- hypothesis sweep --

enum class SweepMode { BitAxis, ParallelPerPlane };

struct SweepRecord {
    int k = 1;
    double epsilon_k = 0.0;
    BigUint bound_factor;                        // (2^(k+1)-2)^(2d)
    std::vector<std::optional<long>> iterations; // per seed, nullopt = hit the cap
    double median_iterations = 0.0;              // +inf once half the seeds cap
    bool all_capped = false;
};

struct SweepResult {
    std::vector<SweepRecord> records;
    bool ordering_nondecreasing = false;
};

namespace detail {

inline double median_with_caps(const std::vector<std::optional<long>>& values) {
    std::vector<double> v;
    for (const auto& x : values) v.push_back(x ? double(*x) : std::numeric_limits<double>::infinity());
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

// Width for one of m parallel per-plane nets so that the group's total
// parameter count approximates the single bit-axis net of the given spec.
inline int parallel_width(const NetSpec& spec, int input_dim, int output_dim, int m) {
    auto params = [&](int w) {
        long long p = (long long)(input_dim)*w + w;
        for (int i = 0; i < spec.depth - 1; ++i) p += (long long)w * w + w;
        p += (long long)w * output_dim + output_dim;
        return p;
    };
    const long long target = params(spec.width);
    int best = 1;
    long long best_err = std::numeric_limits<long long>::max();
    for (int w = 1; w <= spec.width; ++w) {
        const long long err = std::llabs((long long)m * params(w) - target);
        if (err < best_err) {
            best_err = err;
            best = w;
        }
    }
    return best;
}

} // namespace detail

// Fits the same signal at every k in ks with a constant-parameter network
// and records iterations-to-lossless per seed. The verdict is whether the
// per-k medians are nondecreasing; a k whose every seed capped is excluded.
inline SweepResult hypothesis_sweep(const DigitalSignal& signal, const std::vector<int>& ks,
                                    const NetSpec& spec, const TrainConfig& config,
                                    const std::vector<std::uint64_t>& seeds,
                                    SweepMode mode = SweepMode::BitAxis, int threads = 1) {
    if (seeds.size() < 3) throw std::invalid_argument("hypothesis_sweep: need >= 3 seeds");
    const int n = signal.bit_depth;
    for (int k : ks)
        if (k < 1 || n % k != 0)
            throw std::invalid_argument("hypothesis_sweep: k " + std::to_string(k) +
                                        " does not divide bit depth " + std::to_string(n));
    const std::size_t channels = signal.shape.size() >= 3 ? signal.shape.back() : 1;
    const int spatial = int(signal.shape.size()) - (channels > 1 ? 1 : 0);

    auto run_one = [&](int k, std::uint64_t seed) -> std::optional<long> {
        const int m = n / k;
        TrainConfig cfg = config;
        cfg.seed = seed;
        if (mode == SweepMode::BitAxis) {
            Mlp<float> net = init_mlp<float>(spatial + 1, spec.width, spec.depth, int(channels),
                                             spec.activation, derive_seed(seed, std::uint64_t(k)));
            TrainReport rep = fit(signal, k, net, cfg);
            return rep.iteration_at_lossless;
        }
        // parallel per-plane nets, total parameter budget split across planes
        const int w = detail::parallel_width(spec, spatial, int(channels), m);
        const QuantizedStack stack = decompose(signal, k);
        long worst = 0;
        for (int plane = 0; plane < m; ++plane) {
            DigitalSignal plane_signal(signal.shape, k, std::vector<std::uint32_t>(stack.planes[plane]));
            Mlp<float> net = init_mlp<float>(spatial, w, spec.depth, int(channels), spec.activation,
                                             derive_seed(seed, std::uint64_t(k) * 97 + plane));
            TrainReport rep = fit(plane_signal, k, net, cfg);
            if (!rep.iteration_at_lossless) return std::nullopt;
            worst = std::max(worst, *rep.iteration_at_lossless);
        }
        return worst;
    };

    SweepResult result;
    const int d_bound = spatial + (mode == SweepMode::BitAxis ? 1 : 0);
    for (int k : ks) {
        SweepRecord rec;
        rec.k = k;
        rec.epsilon_k = epsilon(k);
        rec.bound_factor = BigUint::pow((std::uint64_t(1) << (k + 1)) - 2, unsigned(2 * d_bound));
        rec.iterations.resize(seeds.size());
        result.records.push_back(std::move(rec));
    }

    struct Job {
        std::size_t record;
        std::size_t seed_index;
    };
    std::vector<Job> jobs;
    for (std::size_t r = 0; r < ks.size(); ++r)
        for (std::size_t s = 0; s < seeds.size(); ++s) jobs.push_back({r, s});

    if (threads <= 1) {
        for (const Job& j : jobs)
            result.records[j.record].iterations[j.seed_index] = run_one(ks[j.record], seeds[j.seed_index]);
    } else {
        std::size_t next = 0;
        while (next < jobs.size()) {
            std::vector<std::pair<Job, std::future<std::optional<long>>>> batch;
            for (int t = 0; t < threads && next < jobs.size(); ++t, ++next) {
                const Job j = jobs[next];
                batch.emplace_back(j, std::async(std::launch::async, run_one, ks[j.record],
                                                 seeds[j.seed_index]));
            }
            for (auto& [j, fut] : batch) result.records[j.record].iterations[j.seed_index] = fut.get();
        }
    }

    for (auto& rec : result.records) {
        rec.median_iterations = detail::median_with_caps(rec.iterations);
        rec.all_capped =
            std::none_of(rec.iterations.begin(), rec.iterations.end(), [](const auto& v) { return bool(v); });
    }
    result.ordering_nondecreasing = true;
    double prev = -std::numeric_limits<double>::infinity();
    for (const auto& rec : result.records) {
        if (rec.all_capped) continue;
        if (rec.median_iterations < prev) result.ordering_nondecreasing = false;
        prev = rec.median_iterations;
    }
    return result;
}

// ------------------------------------------------------------ bit bias ----

struct BiasProfile {
    std::vector<long> iterations;
    std::vector<std::vector<double>> ber;               // [checkpoint][plane], LSB first
    std::vector<std::optional<double>> lsb_correlation; // per checkpoint, absent when undefined
};

namespace detail {

inline std::vector<double> ranks_with_ties(const std::vector<double>& v) {
    std::vector<std::size_t> order(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
    std::vector<double> rank(v.size());
    std::size_t i = 0;
    while (i < v.size()) {
        std::size_t j = i;
        while (j + 1 < v.size() && v[order[j + 1]] == v[order[i]]) ++j;
        const double mean_rank = 0.5 * double(i + j) + 1.0;
        for (std::size_t t = i; t <= j; ++t) rank[order[t]] = mean_rank;
        i = j + 1;
    }
    return rank;
}

inline std::optional<double> spearman(const std::vector<double>& x, const std::vector<double>& y) {
    const std::vector<double> rx = ranks_with_ties(x);
    const std::vector<double> ry = ranks_with_ties(y);
    const double n = double(x.size());
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += rx[i];
        my += ry[i];
    }
    mx /= n;
    my /= n;
    double sxx = 0, syy = 0, sxy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxx += (rx[i] - mx) * (rx[i] - mx);
        syy += (ry[i] - my) * (ry[i] - my);
        sxy += (rx[i] - mx) * (ry[i] - my);
    }
    if (sxx == 0.0 || syy == 0.0) return std::nullopt; // constant input, undefined
    return sxy / std::sqrt(sxx * syy);
}

} // namespace detail

// Per-checkpoint Spearman correlation between how close a plane sits to the
// LSB (rank 0 at the MSB) and that plane's BER: positive means the least
// significant planes are the worse-fitted ones.
inline BiasProfile bias_profile(const TrainReport& report) {
    if (report.checkpoints.empty()) throw std::invalid_argument("bias_profile: report has no checkpoints");
    BiasProfile profile;
    for (const auto& rec : report.checkpoints) {
        if (rec.per_plane_ber.empty())
            throw std::invalid_argument("bias_profile: report lacks per-plane BER traces");
        profile.iterations.push_back(rec.iteration);
        profile.ber.push_back(rec.per_plane_ber);
        const std::size_t m = rec.per_plane_ber.size();
        std::vector<double> lsb_rank(m);
        for (std::size_t i = 0; i < m; ++i) lsb_rank[i] = double(m - 1 - i); // plane i is LSB-first
        profile.lsb_correlation.push_back(detail::spearman(lsb_rank, rec.per_plane_ber));
    }
    return profile;
}

// ----------------------------------------------------- bit-frequency image --

// Named bit-axis frequency specs from the bit-spectral-bias experiment; a
// plain integer is taken as the literal 16-bit band value.
inline std::uint32_t bitfreq_value(const std::string& spec) {
    if (spec == "dc-low") return 0;
    if (spec == "dc-high") return 65535;
    if (spec == "alternating") return 43690;     // 1010101010101010
    if (spec == "alternating-low") return 21845; // 0101010101010101
    std::size_t used = 0;
    unsigned long v;
    try {
        v = std::stoul(spec, &used);
    } catch (const std::exception&) {
        throw std::invalid_argument("unknown bit-frequency spec '" + spec + "'");
    }
    if (used != spec.size()) throw std::invalid_argument("unknown bit-frequency spec '" + spec + "'");
    if (v > 65535)
        throw std::invalid_argument("bit-frequency value " + std::to_string(v) + " exceeds 16 bits");
    return std::uint32_t(v);
}

// 16-bit image of constant-valued vertical bands, one per requested value.
inline DigitalSignal make_bitfreq_image(std::size_t width, std::size_t height,
                                        const std::vector<std::uint32_t>& band_values) {
    if (width == 0 || height == 0) throw std::invalid_argument("make_bitfreq_image: empty extents");
    if (band_values.empty()) throw std::invalid_argument("make_bitfreq_image: no bands");
    for (std::uint32_t v : band_values)
        if (v > 65535)
            throw std::invalid_argument("band value " + std::to_string(v) + " exceeds 16 bits");
    std::vector<std::uint32_t> samples(width * height);
    const std::size_t bands = band_values.size();
    for (std::size_t y = 0; y < height; ++y)
        for (std::size_t x = 0; x < width; ++x)
            samples[y * width + x] = band_values[x * bands / width];
    return DigitalSignal({height, width}, 16, std::move(samples));
}

// ------------------------------------------------------ bit-depth expansion --

struct ExpansionResult {
    DigitalSignal predicted;     // all 16 planes from the network
    DigitalSignal zero_pad;      // ZP baseline
    DigitalSignal bit_replicate; // BR baseline
    MetricReport predicted_report, zero_pad_report, bit_replicate_report;
    TrainReport fit_report;
    bool trained_lossless = false;
    bool msb_planes_exact = false;
};

// Trains on the top m_train bit-planes of a 16-bit signal with the bit axis
// mapped against the full 16-plane depth, then predicts the unseen low planes
// by evaluating their bit coordinates. ZP appends zero LSBs, BR repeats the
// MSB pattern downward.
template <typename T = float>
ExpansionResult expand_bit_depth(const DigitalSignal& signal16, int m_train, const NetSpec& spec,
                                 const TrainConfig& config) {
    if (signal16.bit_depth != 16)
        throw std::invalid_argument("expand_bit_depth: signal must be 16-bit");
    if (m_train >= 16) throw std::invalid_argument("expand_bit_depth: nothing to predict");
    if (m_train < 1) throw std::invalid_argument("expand_bit_depth: need >= 1 training plane");

    const std::size_t channels = signal16.shape.size() >= 3 ? signal16.shape.back() : 1;
    const int spatial = int(signal16.shape.size()) - (channels > 1 ? 1 : 0);

    TrainConfig cfg = config;
    cfg.plane_subset.clear();
    for (int i = 16 - m_train; i < 16; ++i) cfg.plane_subset.push_back(i);
    cfg.bit_coord_depth = 16;

    Mlp<T> net = init_mlp<T>(spatial + 1, spec.width, spec.depth, int(channels), spec.activation,
                             derive_seed(cfg.seed, 0x657870ULL));

    ExpansionResult result;
    result.fit_report = fit(signal16, 1, net, cfg);
    result.trained_lossless = result.fit_report.iteration_at_lossless.has_value();

    PredictedPlanes all = predict_planes(net, signal16, 1, cfg.loss, {}, 16);
    result.predicted = recompose(all.stack);

    const int shift = 16 - m_train;
    std::vector<std::uint32_t> zp(signal16.size()), br(signal16.size());
    for (std::size_t i = 0; i < signal16.size(); ++i) {
        const std::uint32_t msb = signal16.samples[i] >> shift;
        zp[i] = msb << shift;
        std::uint32_t rep = 0;
        int filled = 0;
        while (filled < 16) {
            const int place = 16 - filled - m_train;
            if (place >= 0)
                rep |= msb << place;
            else
                rep |= msb >> -place;
            filled += m_train;
        }
        br[i] = rep;
    }
    result.zero_pad = DigitalSignal(signal16.shape, 16, std::move(zp));
    result.bit_replicate = DigitalSignal(signal16.shape, 16, std::move(br));

    result.predicted_report = metric_report(result.predicted, signal16);
    result.zero_pad_report = metric_report(result.zero_pad, signal16);
    result.bit_replicate_report = metric_report(result.bit_replicate, signal16);

    const QuantizedStack truth = decompose(signal16, 1);
    const QuantizedStack pred = decompose(result.predicted, 1);
    result.msb_planes_exact = true;
    for (int p = 16 - m_train; p < 16; ++p)
        if (truth.planes[p] != pred.planes[p]) result.msb_planes_exact = false;
    return result;
}

// -------------------------------------------------------------- fp32 audio --

struct AudioFitResult {
    TrainReport report;
    bool exact = false;
    std::vector<float> reconstructed;
    DigitalSignal pattern_signal; // the 32-bit patterns the network fits
};

// Decomposes the samples' IEEE-754 bit patterns into 32 binary planes and
// fits them over (time, bit) coordinates; the verdict compares reassembled
// bit patterns, not float values.
template <typename T = float>
AudioFitResult fit_audio_fp32(const std::vector<float>& samples, const NetSpec& spec,
                              const TrainConfig& config, Mlp<T>* trained = nullptr) {
    if (samples.empty()) throw std::invalid_argument("fit_audio_fp32: empty sample sequence");
    AudioFitResult result;
    const Fp32PlaneStack planes = fp32_decompose(samples);
    std::vector<std::uint32_t> patterns(samples.size());
    for (std::size_t i = 0; i < samples.size(); ++i) {
        std::uint32_t bits = 0;
        for (int j = 0; j < 32; ++j) bits |= std::uint32_t(planes.planes[j][i]) << j;
        patterns[i] = bits;
    }
    result.pattern_signal = DigitalSignal({samples.size()}, 32, std::move(patterns));

    Mlp<T> net = init_mlp<T>(2, spec.width, spec.depth, 1, spec.activation,
                             derive_seed(config.seed, 0x617564ULL));
    result.report = fit(result.pattern_signal, 1, net, config);

    VerifyResult verify = verify_lossless(net, result.pattern_signal, 1, config.loss);
    Fp32PlaneStack out;
    out.length = samples.size();
    for (int j = 0; j < 32; ++j) {
        out.planes[j].resize(samples.size());
        for (std::size_t i = 0; i < samples.size(); ++i)
            out.planes[j][i] = std::uint8_t((verify.reconstructed.samples[i] >> j) & 1u);
    }
    result.reconstructed = fp32_recompose(out);
    result.exact = verify.lossless;
    if (trained) *trained = std::move(net);
    return result;
}

// ------------------------------------------------------------ ternary INR --

struct TernaryFitResult {
    TernaryMlp<float> net;
    TrainReport report;
    std::size_t packed_2bit_bytes = 0; // actual 2-bit packing of the weights
    std::size_t packed_log3_bytes = 0; // log2(3)-bit information-theoretic size
};

// Trains a bias-free ternary network (GELU activations) on a single binary
// plane with straight-through gradients.
inline TernaryFitResult fit_ternary(const DigitalSignal& plane, const NetSpec& spec,
                                    const TrainConfig& config) {
    if (plane.bit_depth != 1) throw std::invalid_argument("fit_ternary: target must be a binary plane");
    const std::size_t channels = plane.shape.size() >= 3 ? plane.shape.back() : 1;
    const int spatial = int(plane.shape.size()) - (channels > 1 ? 1 : 0);

    TernaryFitResult result;
    result.net = init_ternary_mlp<float>(spatial, spec.width, spec.depth, int(channels), spec.activation,
                                         derive_seed(config.seed, 0x746572ULL));
    result.report = fit(plane, 1, result.net, config);
    const std::size_t params = result.net.param_count();
    result.packed_2bit_bytes = (params + 3) / 4;
    result.packed_log3_bytes = std::size_t(std::ceil(double(params) * std::log2(3.0) / 8.0));
    return result;
}

// ------------------------------------------------------------- test data ---

// Band-limited synthetic crop: a handful of random low-frequency plane waves
// plus a gentle gradient, stretched over most of the code range. Stands in
// for the natural-image crops of the desk-scale experiments.
inline DigitalSignal make_smooth_image(std::size_t height, std::size_t width, int bit_depth,
                                       std::uint64_t seed) {
    SplitMix64 rng(seed);
    struct Wave {
        double fx, fy, phase, amp;
    };
    std::vector<Wave> waves;
    for (int j = 0; j < 6; ++j) {
        const double freq = rng.next_uniform(0.5, 3.0);
        const double theta = rng.next_uniform(0.0, 2.0 * 3.14159265358979323846);
        waves.push_back({freq * std::cos(theta), freq * std::sin(theta),
                         rng.next_uniform(0.0, 2.0 * 3.14159265358979323846),
                         rng.next_uniform(0.3, 1.0) / (1.0 + freq)});
    }
    std::vector<double> field(height * width);
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (std::size_t y = 0; y < height; ++y)
        for (std::size_t x = 0; x < width; ++x) {
            const double u = height > 1 ? double(y) / double(height - 1) : 0.0;
            const double v = width > 1 ? double(x) / double(width - 1) : 0.0;
            double val = 0.3 * u + 0.2 * v;
            for (const Wave& wv : waves)
                val += wv.amp * std::sin(2.0 * 3.14159265358979323846 * (wv.fx * u + wv.fy * v) + wv.phase);
            field[y * width + x] = val;
            lo = std::min(lo, val);
            hi = std::max(hi, val);
        }
    std::vector<std::uint32_t> samples(field.size());
    const double span = hi > lo ? hi - lo : 1.0;
    for (std::size_t i = 0; i < field.size(); ++i) {
        const double unit = 0.02 + 0.96 * (field[i] - lo) / span;
        samples[i] = quantize(unit, bit_depth);
    }
    return DigitalSignal({height, width}, bit_depth, std::move(samples));
}

// Smooth crop plus uniform sensor-like noise of the given LSB amplitude, so
// the low bit-planes carry the noise-dominated statistics of natural images.
inline DigitalSignal make_textured_image(std::size_t height, std::size_t width, int bit_depth,
                                         std::uint64_t seed, double noise_lsb) {
    DigitalSignal base = make_smooth_image(height, width, bit_depth, seed);
    SplitMix64 rng(derive_seed(seed, 0x6e6f697365ULL));
    const double top = double(max_level(bit_depth));
    for (auto& s : base.samples) {
        const double v = double(s) / top + noise_lsb / top * (rng.next_unit() * 2.0 - 1.0);
        s = quantize(v, bit_depth);
    }
    return base;
}

// Piecewise-smooth crop: the band-limited field overlaid with random
// axis-aligned rectangles (sharp luminance steps) and mild noise. The mix of
// flat regions, edges and texture mirrors a natural photograph crop.
inline DigitalSignal make_edged_image(std::size_t height, std::size_t width, int bit_depth,
                                      std::uint64_t seed, int rectangles, double noise_lsb) {
    SplitMix64 rng(seed);
    DigitalSignal base = make_smooth_image(height, width, bit_depth, derive_seed(seed, 1));
    const double top = double(max_level(bit_depth));
    std::vector<double> field(base.samples.size());
    for (std::size_t i = 0; i < field.size(); ++i) field[i] = double(base.samples[i]) / top;
    for (int r = 0; r < rectangles; ++r) {
        const std::size_t y0 = rng.next_below(height), x0 = rng.next_below(width);
        const std::size_t y1 = y0 + 2 + rng.next_below(std::max<std::size_t>(height / 3, 1));
        const std::size_t x1 = x0 + 2 + rng.next_below(std::max<std::size_t>(width / 3, 1));
        const double delta = rng.next_uniform(-0.3, 0.3);
        for (std::size_t y = y0; y < std::min(y1, height); ++y)
            for (std::size_t x = x0; x < std::min(x1, width); ++x) field[y * width + x] += delta;
    }
    for (std::size_t i = 0; i < field.size(); ++i) {
        const double v = field[i] + noise_lsb / top * (rng.next_unit() * 2.0 - 1.0);
        base.samples[i] = quantize(v, bit_depth);
    }
    return base;
}

// Short float32 test clip: a pure tone with a tiny second harmonic.
inline std::vector<float> make_sine_clip(std::size_t length, double cycles, float amplitude) {
    std::vector<float> out(length);
    for (std::size_t i = 0; i < length; ++i) {
        const double t = double(i) / double(length);
        out[i] = amplitude * float(std::sin(2.0 * 3.14159265358979323846 * cycles * t) +
                                   0.25 * std::sin(4.0 * 3.14159265358979323846 * cycles * t));
    }
    return out;
}

// The same clip quantized through 16-bit PCM and lifted back to float32, the
// way recorded audio reaches the FP32 domain (sample = k / 32768 is exact in
// binary32, so the trailing mantissa bits are zero).
inline std::vector<float> make_pcm_sine_clip(std::size_t length, double cycles, float amplitude) {
    std::vector<float> out = make_sine_clip(length, cycles, amplitude);
    for (float& v : out) {
        const double pcm = std::clamp(std::round(double(v) * 32767.0), -32768.0, 32767.0);
        v = float(pcm / 32768.0);
    }
    return out;
}

} // namespace bpinr
