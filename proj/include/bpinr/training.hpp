#pragma once

#include <algorithm>
#include <bit>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "bpinr/metrics.hpp"
#include "bpinr/network.hpp"
#include "bpinr/rng.hpp"
#include "bpinr/signal.hpp"
#include "bpinr/ternary.hpp"

namespace bpinr {

enum class Loss { Bce, Mse, Mae };

inline const char* loss_name(Loss l) {
    switch (l) {
        case Loss::Bce: return "bce";
        case Loss::Mse: return "mse";
        case Loss::Mae: return "mae";
    }
    return "?";
}

struct DecaySchedule {
    double factor = 0.01;
    int every_n_steps = 20000;
};

struct TrainConfig {
    Loss loss = Loss::Bce;
    double learning_rate = 1e-4;
    int max_iterations = 20000;
    int check_interval = 50; // iterations between lossless checks
    int batch_size = 0;      // 0 = full batch
    std::uint64_t seed = 0;
    std::optional<DecaySchedule> lr_decay;

    // Plane selection for partial fits (bit-depth expansion). Empty subset
    // means all planes; bit_coord_depth 0 means the plane count itself.
    std::vector<int> plane_subset;
    int bit_coord_depth = 0;

    void validate() const {
        if (learning_rate <= 0) throw std::invalid_argument("learning rate must be positive");
        if (check_interval < 1) throw std::invalid_argument("check interval must be >= 1");
        if (max_iterations < 1) throw std::invalid_argument("max iterations must be >= 1");
    }
};

struct CheckpointRecord {
    long iteration = 0;
    double loss = 0.0;
    double ber = 0.0;
    double psnr = 0.0;
    std::vector<double> per_plane_ber; // one entry per fitted plane, LSB first
};

struct TrainReport {
    std::vector<CheckpointRecord> checkpoints;
    std::optional<long> iteration_at_lossless;
    double wall_seconds = 0.0;
    TrainConfig config;
    int plane_count = 0;
};

// Bit-axis coordinate of plane index i when the full depth spans n_map
// planes: -1 + 2 i / (n_map - 1). Keeping n_map fixed while training on a
// subset of planes leaves unseen plane indices at in-range coordinates, which
// is what bit-depth expansion queries.
inline double bit_coordinate(int plane_index, int n_map) {
    if (n_map <= 1) return -1.0;
    return -1.0 + 2.0 * double(plane_index) / double(n_map - 1);
}

// Batch of coordinates covering a spatial grid, one copy per requested
// plane; the bit coordinate is the last column. Spatial axes are mapped
// linearly onto [-1,1].
struct CoordinateGrid {
    Eigen::MatrixXd coords;
    std::size_t pixels = 0;
    std::vector<int> plane_indices;
    int bit_coord_depth = 0;
    bool has_bit_axis = true;

    std::size_t rows() const { return std::size_t(coords.rows()); }
};

namespace detail {

inline double axis_coordinate(std::size_t index, std::size_t extent) {
    if (extent <= 1) return 0.0;
    return -1.0 + 2.0 * double(index) / double(extent - 1);
}

} // namespace detail

inline CoordinateGrid make_grid_for_planes(const std::vector<std::size_t>& shape,
                                           const std::vector<int>& plane_indices, int n_map,
                                           bool with_bit_axis = true) {
    if (shape.empty()) throw std::invalid_argument("make_grid: empty shape");
    for (std::size_t e : shape)
        if (e == 0) throw std::invalid_argument("make_grid: zero extent");
    if (plane_indices.empty()) throw std::invalid_argument("make_grid: no planes requested");
    for (int i : plane_indices)
        if (i < 0 || i >= n_map)
            throw std::invalid_argument("make_grid: plane index " + std::to_string(i) +
                                        " outside bit depth " + std::to_string(n_map));

    const std::size_t pixels = shape_size(shape);
    const int d = int(shape.size());
    const int cols = d + (with_bit_axis ? 1 : 0);
    CoordinateGrid grid;
    grid.pixels = pixels;
    grid.plane_indices = plane_indices;
    grid.bit_coord_depth = n_map;
    grid.has_bit_axis = with_bit_axis;
    grid.coords.resize(Eigen::Index(pixels * plane_indices.size()), cols);

    std::vector<double> spatial(pixels * d);
    std::vector<std::size_t> idx(d, 0);
    for (std::size_t p = 0; p < pixels; ++p) {
        for (int a = 0; a < d; ++a) spatial[p * d + a] = detail::axis_coordinate(idx[a], shape[a]);
        for (int a = d - 1; a >= 0; --a) {
            if (++idx[a] < shape[a]) break;
            idx[a] = 0;
        }
    }
    for (std::size_t pi = 0; pi < plane_indices.size(); ++pi) {
        const double bit = bit_coordinate(plane_indices[pi], n_map);
        for (std::size_t p = 0; p < pixels; ++p) {
            const Eigen::Index row = Eigen::Index(pi * pixels + p);
            for (int a = 0; a < d; ++a) grid.coords(row, a) = spatial[p * d + a];
            if (with_bit_axis) grid.coords(row, d) = bit;
        }
    }
    return grid;
}

inline CoordinateGrid make_grid(const std::vector<std::size_t>& shape, int bit_planes,
                                int bit_depth_for_mapping) {
    if (bit_planes < 1) throw std::invalid_argument("make_grid: need >= 1 plane");
    if (bit_depth_for_mapping < bit_planes)
        throw std::invalid_argument("make_grid: mapping depth " + std::to_string(bit_depth_for_mapping) +
                                    " smaller than plane count " + std::to_string(bit_planes));
    std::vector<int> planes(bit_planes);
    for (int i = 0; i < bit_planes; ++i) planes[i] = i;
    return make_grid_for_planes(shape, planes, bit_depth_for_mapping);
}

// Loss value and gradient with respect to the predictions; reductions are
// means over all batch elements. BCE treats predictions as logits and applies
// the logistic squashing internally.
template <typename T>
std::pair<double, Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic>> loss_eval(
    Loss kind, const Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic>& pred,
    const Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic>& target) {
    using Matrix = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic>;
    if (pred.rows() != target.rows() || pred.cols() != target.cols())
        throw std::invalid_argument("loss_eval: prediction/target shape mismatch");
    const double inv_n = 1.0 / double(pred.size());
    Matrix grad(pred.rows(), pred.cols());
    double loss = 0.0;
    switch (kind) {
        case Loss::Bce: {
            for (Eigen::Index i = 0; i < target.size(); ++i) {
                const double t = double(target(i));
                if (t != 0.0 && t != 1.0)
                    throw std::invalid_argument("BCE requires binary targets, got " + std::to_string(t));
            }
            for (Eigen::Index i = 0; i < pred.size(); ++i) {
                const double z = double(pred(i));
                const double t = double(target(i));
                loss += std::max(z, 0.0) - z * t + std::log1p(std::exp(-std::abs(z)));
                const double sig = 1.0 / (1.0 + std::exp(-z));
                grad(i) = T((sig - t) * inv_n);
            }
            break;
        }
        case Loss::Mse: {
            for (Eigen::Index i = 0; i < pred.size(); ++i) {
                const double d = double(pred(i)) - double(target(i));
                loss += d * d;
                grad(i) = T(2.0 * d * inv_n);
            }
            break;
        }
        case Loss::Mae: {
            for (Eigen::Index i = 0; i < pred.size(); ++i) {
                const double d = double(pred(i)) - double(target(i));
                loss += std::abs(d);
                grad(i) = T((d > 0 ? 1.0 : (d < 0 ? -1.0 : 0.0)) * inv_n);
            }
            break;
        }
    }
    return {loss * inv_n, std::move(grad)};
}

// Bias-corrected Adam with beta1 = 0.9, beta2 = 0.999, eps = 1e-8.
template <typename T>
struct AdamState {
    using Matrix = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic>;
    using Vector = Eigen::Matrix<T, Eigen::Dynamic, 1>;
    struct Moments {
        Matrix m_w, v_w;
        Vector m_b, v_b;
    };
    std::vector<Moments> layers;
    long step = 0;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

template <typename T>
AdamState<T> make_adam_state(const Mlp<T>& net) {
    AdamState<T> state;
    for (const auto& l : net.layers) {
        typename AdamState<T>::Moments mo;
        mo.m_w = AdamState<T>::Matrix::Zero(l.weight.rows(), l.weight.cols());
        mo.v_w = mo.m_w;
        if (l.has_bias) {
            mo.m_b = AdamState<T>::Vector::Zero(l.bias.size());
            mo.v_b = mo.m_b;
        }
        state.layers.push_back(std::move(mo));
    }
    return state;
}

template <typename T>
AdamState<T> make_adam_state(const TernaryMlp<T>& net) {
    AdamState<T> state;
    for (const auto& l : net.layers) {
        typename AdamState<T>::Moments mo;
        mo.m_w = AdamState<T>::Matrix::Zero(l.shadow.rows(), l.shadow.cols());
        mo.v_w = mo.m_w;
        state.layers.push_back(std::move(mo));
    }
    return state;
}

namespace detail {

template <typename T, typename Param, typename Grad, typename Mom>
void adam_update(Param&& param, const Grad& grad, Mom& m, Mom& v, double lr, double beta1, double beta2,
                 double eps, double bc1, double bc2) {
    m = (T(beta1) * m + T(1 - beta1) * grad).eval();
    v = (T(beta2) * v.array() + T(1 - beta2) * grad.array().square()).matrix().eval();
    param -= (T(lr) * (m.array() / T(bc1)) / ((v.array() / T(bc2)).sqrt() + T(eps))).matrix();
}

template <typename T>
void check_finite_grad(const MlpGradients<T>& grads, bool biases) {
    for (std::size_t l = 0; l < grads.layers.size(); ++l) {
        if (!grads.layers[l].weight.allFinite())
            throw std::runtime_error("non-finite gradient in layer " + std::to_string(l) + " weights");
        if (biases && grads.layers[l].bias.size() && !grads.layers[l].bias.allFinite())
            throw std::runtime_error("non-finite gradient in layer " + std::to_string(l) + " bias");
    }
}

} // namespace detail

template <typename T>
void adam_step(AdamState<T>& state, Mlp<T>& net, const MlpGradients<T>& grads, double lr) {
    if (grads.layers.size() != net.layers.size())
        throw std::invalid_argument("adam_step: gradient layout does not match parameters");
    detail::check_finite_grad(grads, true);
    ++state.step;
    const double bc1 = 1.0 - std::pow(state.beta1, double(state.step));
    const double bc2 = 1.0 - std::pow(state.beta2, double(state.step));
    for (std::size_t l = 0; l < net.layers.size(); ++l) {
        auto& mo = state.layers[l];
        detail::adam_update<T>(net.layers[l].weight, grads.layers[l].weight, mo.m_w, mo.v_w, lr,
                               state.beta1, state.beta2, state.eps, bc1, bc2);
        if (net.layers[l].has_bias)
            detail::adam_update<T>(net.layers[l].bias, grads.layers[l].bias, mo.m_b, mo.v_b, lr,
                                   state.beta1, state.beta2, state.eps, bc1, bc2);
    }
}

template <typename T>
void adam_step(AdamState<T>& state, TernaryMlp<T>& net, const MlpGradients<T>& grads, double lr) {
    if (grads.layers.size() != net.layers.size())
        throw std::invalid_argument("adam_step: gradient layout does not match parameters");
    detail::check_finite_grad(grads, false);
    ++state.step;
    const double bc1 = 1.0 - std::pow(state.beta1, double(state.step));
    const double bc2 = 1.0 - std::pow(state.beta2, double(state.step));
    for (std::size_t l = 0; l < net.layers.size(); ++l) {
        auto& mo = state.layers[l];
        detail::adam_update<T>(net.layers[l].shadow, grads.layers[l].weight, mo.m_w, mo.v_w, lr,
                               state.beta1, state.beta2, state.eps, bc1, bc2);
    }
}

// Network output -> k-bit level. BCE-trained nets emit logits, squashed
// through the logistic before quantization (for k = 1 this thresholds the
// logit at zero, matching the quantizer's tie rule at 1/2); regression nets
// are clamped to [0,1] and quantized directly.
template <typename T>
std::uint32_t prediction_level(T pred, int plane_bits, Loss loss) {
    double v = double(pred);
    if (loss == Loss::Bce) v = 1.0 / (1.0 + std::exp(-v));
    return quantize(std::isfinite(v) ? v : 0.0, plane_bits);
}

namespace detail {

struct FitLayout {
    std::vector<std::size_t> spatial_shape;
    std::size_t channels = 1;
    bool has_bit_axis = true;
};

// Deduces which trailing axis carries channels from the network's output
// width, and whether the network owns a bit axis, from its input width.
template <typename Model>
FitLayout deduce_layout(const DigitalSignal& signal, const Model& net, std::size_t plane_count) {
    FitLayout layout;
    const std::size_t c = std::size_t(net.output_dim());
    if (c > 1) {
        if (signal.shape.size() < 2 || signal.shape.back() != c)
            throw std::invalid_argument("network emits " + std::to_string(c) +
                                        " channels but the signal's last extent is not " + std::to_string(c));
        layout.spatial_shape.assign(signal.shape.begin(), signal.shape.end() - 1);
        layout.channels = c;
    } else {
        layout.spatial_shape = signal.shape;
        layout.channels = 1;
    }
    const int d = int(layout.spatial_shape.size());
    if (net.input_dim == d + 1) {
        layout.has_bit_axis = true;
    } else if (net.input_dim == d && plane_count == 1) {
        layout.has_bit_axis = false;
    } else {
        throw std::invalid_argument("network input dim " + std::to_string(net.input_dim) +
                                    " does not match " + std::to_string(d) + " spatial axes (+1 bit axis)");
    }
    return layout;
}

} // namespace detail

struct PredictedPlanes {
    QuantizedStack stack;              // fitted planes only, others zero
    std::vector<int> plane_indices;    // which planes were predicted
    std::uint64_t wrong_bits = 0;      // vs ground truth, fitted planes only
    std::vector<double> per_plane_ber; // per fitted plane
};

// Runs the network over the full grid of the requested planes and quantizes
// the outputs into plane levels.
template <typename Model>
PredictedPlanes predict_planes(Model& net, const DigitalSignal& signal, int plane_bits, Loss loss,
                               const std::vector<int>& plane_indices, int bit_coord_depth) {
    using T = typename Model::Scalar;
    const int k = plane_bits;
    const int n = signal.bit_depth;
    if (k < 1 || n % k != 0)
        throw std::invalid_argument("plane bits " + std::to_string(k) + " does not divide bit depth " +
                                    std::to_string(n));
    const int m = n / k;
    std::vector<int> planes = plane_indices;
    if (planes.empty())
        for (int i = 0; i < m; ++i) planes.push_back(i);
    const int n_map = bit_coord_depth > 0 ? bit_coord_depth : m;

    detail::FitLayout layout = detail::deduce_layout(signal, net, planes.size());
    CoordinateGrid grid =
        make_grid_for_planes(layout.spatial_shape, planes, n_map, layout.has_bit_axis);
    Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic> coords = grid.coords.template cast<T>();
    auto pred = forward(net, coords);

    const QuantizedStack truth = decompose(signal, k);
    PredictedPlanes out;
    out.plane_indices = planes;
    out.stack.plane_bits = k;
    out.stack.source_bit_depth = n;
    out.stack.shape = signal.shape;
    out.stack.planes.assign(m, std::vector<std::uint32_t>(signal.size(), 0));

    const std::size_t pixels = grid.pixels;
    const std::size_t channels = layout.channels;
    out.per_plane_ber.resize(planes.size(), 0.0);
    for (std::size_t pi = 0; pi < planes.size(); ++pi) {
        const int plane = planes[pi];
        std::uint64_t wrong = 0;
        for (std::size_t p = 0; p < pixels; ++p) {
            for (std::size_t c = 0; c < channels; ++c) {
                const std::uint32_t level =
                    prediction_level(pred(Eigen::Index(pi * pixels + p), Eigen::Index(c)), k, loss);
                const std::size_t s = p * channels + c;
                out.stack.planes[plane][s] = level;
                wrong += std::popcount(level ^ truth.planes[plane][s]);
            }
        }
        out.wrong_bits += wrong;
        out.per_plane_ber[pi] = double(wrong) / (double(k) * double(signal.size()));
    }
    return out;
}

struct VerifyResult {
    bool lossless = false;
    double ber = 0.0;
    DigitalSignal reconstructed;
};

// Quantizes the network's per-plane predictions, reassembles the integer
// signal and compares it to the ground truth sample by sample. Lossless iff
// every sample matches iff BER = 0.
template <typename Model>
VerifyResult verify_lossless(Model& net, const DigitalSignal& signal, int plane_bits,
                             Loss loss = Loss::Bce) {
    auto planes = predict_planes(net, signal, plane_bits, loss, {}, 0);
    VerifyResult result;
    result.reconstructed = recompose(planes.stack);
    result.ber = ber(result.reconstructed, signal);
    result.lossless = result.ber == 0.0;
    return result;
}

// The epsilon-band route of the same criterion: the reassembled normalized
// prediction must sit within epsilon(n) of the normalized ground truth at
// every grid point. Equivalent to the integer-exact route because both values
// live on the 1/(2^n - 1) grid.
template <typename Model>
bool lossless_band_check(Model& net, const DigitalSignal& signal, int plane_bits, Loss loss = Loss::Bce) {
    auto planes = predict_planes(net, signal, plane_bits, loss, {}, 0);
    const DigitalSignal recon = recompose(planes.stack);
    const double eps = epsilon(signal.bit_depth);
    const double top = double(max_level(signal.bit_depth));
    for (std::size_t i = 0; i < signal.size(); ++i) {
        const double diff = std::abs(double(recon.samples[i]) - double(signal.samples[i])) / top;
        if (diff > eps) return false;
    }
    return true;
}

// Full fit loop: decompose, iterate Adam on the selected loss over the
// coordinate grid, check for lossless reconstruction every check_interval
// iterations and stop early once every trained plane is exact.
template <typename Model>
TrainReport fit(const DigitalSignal& signal, int plane_bits, Model& net, const TrainConfig& cfg) {
    using T = typename Model::Scalar;
    using Matrix = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic>;
    cfg.validate();
    const auto t0 = std::chrono::steady_clock::now();

    const int k = plane_bits;
    const int n = signal.bit_depth;
    if (k < 1 || n % k != 0)
        throw std::invalid_argument("plane bits " + std::to_string(k) + " does not divide bit depth " +
                                    std::to_string(n));
    const int m = n / k;
    std::vector<int> planes = cfg.plane_subset;
    if (planes.empty())
        for (int i = 0; i < m; ++i) planes.push_back(i);
    for (int p : planes)
        if (p < 0 || p >= m)
            throw std::invalid_argument("plane subset index " + std::to_string(p) + " outside 0.." +
                                        std::to_string(m - 1));
    const int n_map = cfg.bit_coord_depth > 0 ? cfg.bit_coord_depth : m;

    const detail::FitLayout layout = detail::deduce_layout(signal, net, planes.size());
    const CoordinateGrid grid =
        make_grid_for_planes(layout.spatial_shape, planes, n_map, layout.has_bit_axis);
    const Matrix coords = grid.coords.template cast<T>();

    const QuantizedStack stack = decompose(signal, k);
    const std::size_t pixels = grid.pixels;
    const std::size_t channels = layout.channels;
    const double plane_top = double(max_level(k));
    Matrix targets(coords.rows(), Eigen::Index(channels));
    for (std::size_t pi = 0; pi < planes.size(); ++pi)
        for (std::size_t p = 0; p < pixels; ++p)
            for (std::size_t c = 0; c < channels; ++c) {
                const std::uint32_t level = stack.planes[planes[pi]][p * channels + c];
                targets(Eigen::Index(pi * pixels + p), Eigen::Index(c)) =
                    k == 1 ? T(level) : T(double(level) / plane_top);
            }

    TrainReport report;
    report.config = cfg;
    report.plane_count = n; // per-plane traces use the k=1 basis

    auto state = make_adam_state(net);
    double lr = cfg.learning_rate;
    SplitMix64 batch_rng(derive_seed(cfg.seed, 0x6261746368ULL));
    std::vector<Eigen::Index> batch_rows;

    ForwardTrace<T> trace;
    const std::uint64_t total_bits = std::uint64_t(k) * planes.size() * pixels * channels;
    for (long it = 1; it <= cfg.max_iterations; ++it) {
        double loss_value;
        if (cfg.batch_size > 0 && std::size_t(cfg.batch_size) < std::size_t(coords.rows())) {
            batch_rows.resize(cfg.batch_size);
            for (auto& r : batch_rows)
                r = Eigen::Index(batch_rng.next_below(std::uint64_t(coords.rows())));
            Matrix bc(cfg.batch_size, coords.cols()), bt(cfg.batch_size, targets.cols());
            for (int i = 0; i < cfg.batch_size; ++i) {
                bc.row(i) = coords.row(batch_rows[i]);
                bt.row(i) = targets.row(batch_rows[i]);
            }
            auto pred = forward(net, bc, &trace);
            auto [lv, grad] = loss_eval(cfg.loss, pred, bt);
            loss_value = lv;
            if (!std::isfinite(loss_value))
                throw std::runtime_error("non-finite loss at iteration " + std::to_string(it));
            adam_step(state, net, backward(net, trace, grad), lr);
        } else {
            auto pred = forward(net, coords, &trace);
            auto [lv, grad] = loss_eval(cfg.loss, pred, targets);
            loss_value = lv;
            if (!std::isfinite(loss_value))
                throw std::runtime_error("non-finite loss at iteration " + std::to_string(it));
            adam_step(state, net, backward(net, trace, grad), lr);
        }
        if (cfg.lr_decay && it % cfg.lr_decay->every_n_steps == 0) lr *= cfg.lr_decay->factor;

        if (it % cfg.check_interval == 0 || it == cfg.max_iterations) {
            auto pred = forward(net, coords);
            CheckpointRecord rec;
            rec.iteration = it;
            rec.loss = loss_value;
            std::uint64_t wrong = 0;
            // partial recomposition over the fitted planes only
            std::vector<std::uint64_t> truth_part(signal.size(), 0), pred_part(signal.size(), 0);
            for (std::size_t pi = 0; pi < planes.size(); ++pi) {
                std::uint64_t plane_wrong = 0;
                const int shift = k * planes[pi];
                for (std::size_t p = 0; p < pixels; ++p)
                    for (std::size_t c = 0; c < channels; ++c) {
                        const std::size_t s = p * channels + c;
                        const std::uint32_t level = prediction_level(
                            pred(Eigen::Index(pi * pixels + p), Eigen::Index(c)), k, cfg.loss);
                        const std::uint32_t truth = stack.planes[planes[pi]][s];
                        plane_wrong += std::popcount(level ^ truth);
                        truth_part[s] |= std::uint64_t(truth) << shift;
                        pred_part[s] |= std::uint64_t(level) << shift;
                    }
                wrong += plane_wrong;
            }
            rec.ber = double(wrong) / double(total_bits);
            // per-plane trace on the k=1 basis (the bit-bias instrument);
            // bits outside the trained planes report zero
            rec.per_plane_ber.assign(std::size_t(n), 0.0);
            for (std::size_t s = 0; s < signal.size(); ++s) {
                const std::uint64_t diff = truth_part[s] ^ pred_part[s];
                for (int j = 0; j < n; ++j) rec.per_plane_ber[std::size_t(j)] += double((diff >> j) & 1u);
            }
            for (double& v : rec.per_plane_ber) v /= double(signal.size());
            double mse = 0.0;
            for (std::size_t s = 0; s < signal.size(); ++s) {
                const double d = double(pred_part[s]) - double(truth_part[s]);
                mse += d * d;
            }
            mse /= double(signal.size());
            const double peak = double(max_level(n));
            rec.psnr = mse == 0.0 ? std::numeric_limits<double>::infinity()
                                  : 10.0 * std::log10(peak * peak / mse);
            report.checkpoints.push_back(rec);
            if (wrong == 0) {
                report.iteration_at_lossless = it;
                break;
            }
        }
    }
    report.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return report;
}

} // namespace bpinr
