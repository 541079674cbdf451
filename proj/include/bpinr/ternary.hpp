#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "bpinr/network.hpp"
#include "bpinr/rng.hpp"

namespace bpinr {

// Fully connected layer with ternary weights: y = beta * gamma * Wq * xq with
// Wq in {-1,0,1}, beta the mean absolute shadow weight and gamma the
// per-sample absmax of the input. Bias terms are detached.
template <typename T>
struct TernaryLayer {
    using Matrix = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic>;

    Matrix shadow;                                              // trained full-precision weights
    Eigen::Matrix<std::int8_t, Eigen::Dynamic, Eigen::Dynamic> quantized; // {-1,0,1}
    T beta = T(0);
};

// Recomputes beta = ||W||_1 / (d_in d_out) and the round-clip ternary view
// Wq = clamp(round(W / (beta + 1e-8)), -1, 1) from the current shadow weights.
template <typename T>
void ternary_quantize(TernaryLayer<T>& layer) {
    const auto rows = layer.shadow.rows();
    const auto cols = layer.shadow.cols();
    if (rows == 0 || cols == 0) throw std::invalid_argument("ternary_quantize: empty layer");
    if (!layer.shadow.allFinite()) throw std::invalid_argument("ternary_quantize: non-finite shadow weights");
    layer.beta = layer.shadow.array().abs().sum() / T(rows * cols);
    const double scale = 1.0 / (double(layer.beta) + 1e-8);
    layer.quantized.resize(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r)
        for (Eigen::Index c = 0; c < cols; ++c) {
            double q = std::round(double(layer.shadow(r, c)) * scale);
            layer.quantized(r, c) = std::int8_t(q < -1 ? -1 : (q > 1 ? 1 : q));
        }
}

// Quantized forward path. Each input row is scaled to unit absmax (gamma),
// snapped to the symmetric 8-bit grid, pushed through the ternary weights and
// rescaled; a zero row yields a zero output row.
template <typename T>
Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic> ternary_forward(
    const TernaryLayer<T>& layer, const Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic>& x) {
    using Matrix = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic>;
    if (x.cols() != layer.shadow.cols())
        throw std::invalid_argument("ternary_forward: input width mismatch");
    Matrix wq = layer.quantized.template cast<T>();
    Matrix out(x.rows(), layer.shadow.rows());
    Eigen::Matrix<T, Eigen::Dynamic, 1> xq(x.cols());
    for (Eigen::Index r = 0; r < x.rows(); ++r) {
        const T gamma = x.row(r).array().abs().maxCoeff();
        if (gamma == T(0)) {
            out.row(r).setZero();
            continue;
        }
        for (Eigen::Index c = 0; c < x.cols(); ++c) {
            double level = std::round(127.0 * double(x(r, c)) / double(gamma));
            level = level < -127 ? -127 : (level > 127 ? 127 : level);
            xq(c) = T(level / 127.0);
        }
        out.row(r).noalias() = (layer.beta * gamma) * (wq * xq).transpose();
    }
    return out;
}

// Ternary coordinate network: GELU by default, no biases anywhere. Shadow
// weights carry the training state; the quantized view is refreshed before
// every forward pass.
template <typename T>
struct TernaryMlp {
    using Scalar = T;
    using Matrix = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic>;

    std::vector<TernaryLayer<T>> layers;
    ActivationKind activation = ActivationKind::gelu();
    int input_dim = 0;
    std::uint64_t seed = 0;
    bool frozen = false; // frozen nets keep their stored (Wq, beta) as-is

    int output_dim() const { return int(layers.back().shadow.rows()); }

    std::size_t param_count() const {
        std::size_t n = 0;
        for (const auto& l : layers) n += std::size_t(l.shadow.size());
        return n;
    }
};

template <typename T>
TernaryMlp<T> init_ternary_mlp(int input_dim, int hidden_dim, int depth, int output_dim,
                               const ActivationKind& act, std::uint64_t seed) {
    if (input_dim < 1 || hidden_dim < 1 || depth < 1 || output_dim < 1)
        throw std::invalid_argument("init_ternary_mlp: all dimensions must be >= 1");
    TernaryMlp<T> net;
    net.activation = act;
    net.input_dim = input_dim;
    net.seed = seed;

    std::vector<int> dims;
    dims.push_back(encoded_dim(act, input_dim));
    for (int i = 0; i < depth; ++i) dims.push_back(hidden_dim);
    dims.push_back(output_dim);

    SplitMix64 rng(seed);
    for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
        const double bound = std::sqrt(6.0 / dims[l]);
        TernaryLayer<T> layer;
        layer.shadow.resize(dims[l + 1], dims[l]);
        for (Eigen::Index r = 0; r < layer.shadow.rows(); ++r)
            for (Eigen::Index c = 0; c < layer.shadow.cols(); ++c)
                layer.shadow(r, c) = T(rng.next_uniform(-bound, bound));
        ternary_quantize(layer);
        net.layers.push_back(std::move(layer));
    }
    return net;
}

template <typename T>
Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic> forward(
    TernaryMlp<T>& net, const Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic>& coords,
    ForwardTrace<T>* trace = nullptr) {
    using Matrix = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic>;
    if (int(coords.cols()) != net.input_dim)
        throw std::invalid_argument("ternary forward: coordinate dimension mismatch");
    Matrix x = encode_coords(net.activation, coords);
    if (trace) {
        trace->encoded = x;
        trace->pre.clear();
        trace->post.clear();
    }
    for (std::size_t l = 0; l < net.layers.size(); ++l) {
        if (!net.frozen) ternary_quantize(net.layers[l]);
        Matrix z = ternary_forward(net.layers[l], x);
        const bool last = l + 1 == net.layers.size();
        if (trace) trace->pre.push_back(z);
        if (!last) {
            detail::apply_activation(net.activation, z);
            if (trace) trace->post.push_back(z);
        }
        x = std::move(z);
    }
    return x;
}

// Straight-through gradients: both quantizers are treated as identity, so the
// backward pass is that of the plain linear map y = W x on the shadow weights.
template <typename T, typename Derived>
MlpGradients<T> backward(const TernaryMlp<T>& net, const ForwardTrace<T>& trace,
                         const Eigen::MatrixBase<Derived>& output_grad) {
    using Matrix = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic>;
    const std::size_t n_layers = net.layers.size();
    if (trace.pre.size() != n_layers)
        throw std::invalid_argument("ternary backward: trace does not match the network");
    MlpGradients<T> grads;
    grads.layers.resize(n_layers);
    Matrix g = output_grad;
    for (std::size_t l = n_layers; l-- > 0;) {
        const Matrix& input = l == 0 ? trace.encoded : trace.post[l - 1];
        grads.layers[l].weight.noalias() = g.transpose() * input;
        if (l > 0) {
            Matrix gx;
            gx.noalias() = g * net.layers[l].shadow;
            g = gx.cwiseProduct(detail::activation_grad(net.activation, trace.pre[l - 1]));
        }
    }
    return grads;
}

} // namespace bpinr
