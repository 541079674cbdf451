#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "bpinr/rng.hpp"

namespace bpinr {

enum class Activation { Sine, ReluPosEnc, Gauss, Gelu, Tanh, Relu };

// Activation selector plus its parameter. ReluPosEnc expands every input
// coordinate into (sin(2^j pi x), cos(2^j pi x)) for j = 0..num_frequencies-1
// before the first layer and applies ReLU between layers.
struct ActivationKind {
    Activation kind = Activation::Sine;
    double omega0 = 30.0;      // sine frequency
    int num_frequencies = 10;  // positional-encoding octaves
    double gauss_scale = 10.0; // exp(-(s x)^2)

    static ActivationKind sine(double w0 = 30.0) {
        if (w0 <= 0) throw std::invalid_argument("sine omega0 must be positive");
        ActivationKind a;
        a.kind = Activation::Sine;
        a.omega0 = w0;
        return a;
    }
    static ActivationKind relu_pos_enc(int freqs = 10) {
        if (freqs < 1) throw std::invalid_argument("positional encoding needs >= 1 frequency");
        ActivationKind a;
        a.kind = Activation::ReluPosEnc;
        a.num_frequencies = freqs;
        return a;
    }
    static ActivationKind gauss(double scale = 10.0) {
        if (scale <= 0) throw std::invalid_argument("gauss scale must be positive");
        ActivationKind a;
        a.kind = Activation::Gauss;
        a.gauss_scale = scale;
        return a;
    }
    static ActivationKind gelu() { return {Activation::Gelu}; }
    static ActivationKind tanh() { return {Activation::Tanh}; }
    static ActivationKind relu() { return {Activation::Relu}; }

    const char* name() const {
        switch (kind) {
            case Activation::Sine: return "sine";
            case Activation::ReluPosEnc: return "relu+pe";
            case Activation::Gauss: return "gauss";
            case Activation::Gelu: return "gelu";
            case Activation::Tanh: return "tanh";
            case Activation::Relu: return "relu";
        }
        return "?";
    }
};

// Width of the coordinate vector the first layer actually sees.
inline int encoded_dim(const ActivationKind& act, int input_dim) {
    return act.kind == Activation::ReluPosEnc ? input_dim * 2 * act.num_frequencies : input_dim;
}

// Coordinate MLP. The activation is applied after every layer except the
// last; precision is the scalar type T (float or double).
template <typename T>
struct Mlp {
    using Scalar = T;
    using Matrix = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic>;
    using Vector = Eigen::Matrix<T, Eigen::Dynamic, 1>;

    struct Layer {
        Matrix weight; // d_out x d_in
        Vector bias;   // d_out, empty when detached
        bool has_bias = true;
    };

    std::vector<Layer> layers;
    ActivationKind activation;
    int input_dim = 0; // coordinate dimension before encoding
    std::uint64_t seed = 0;

    int output_dim() const { return int(layers.back().weight.rows()); }

    std::size_t param_count() const {
        std::size_t n = 0;
        for (const auto& l : layers) n += std::size_t(l.weight.size()) + (l.has_bias ? l.bias.size() : 0);
        return n;
    }
};

// SIREN-style init: first layer uniform in [-1/d_in, 1/d_in], deeper layers
// uniform in [-sqrt(6/d_in)/w0, +sqrt(6/d_in)/w0]; other activations use the
// w0 = 1 bound throughout. Biases start at zero. Bit-reproducible per seed.
template <typename T>
Mlp<T> init_mlp(int input_dim, int hidden_dim, int depth, int output_dim, const ActivationKind& act,
                std::uint64_t seed) {
    if (input_dim < 1 || hidden_dim < 1 || depth < 1 || output_dim < 1)
        throw std::invalid_argument("init_mlp: all dimensions must be >= 1");
    Mlp<T> net;
    net.activation = act;
    net.input_dim = input_dim;
    net.seed = seed;

    std::vector<int> dims;
    dims.push_back(encoded_dim(act, input_dim));
    for (int i = 0; i < depth; ++i) dims.push_back(hidden_dim);
    dims.push_back(output_dim);

    SplitMix64 rng(seed);
    const bool sine = act.kind == Activation::Sine;
    for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
        const int d_in = dims[l];
        const int d_out = dims[l + 1];
        double bound;
        if (sine && l == 0)
            bound = 1.0 / d_in;
        else
            bound = std::sqrt(6.0 / d_in) / (sine ? act.omega0 : 1.0);
        typename Mlp<T>::Layer layer;
        layer.weight.resize(d_out, d_in);
        for (int r = 0; r < d_out; ++r)
            for (int c = 0; c < d_in; ++c) layer.weight(r, c) = T(rng.next_uniform(-bound, bound));
        layer.bias = Mlp<T>::Vector::Zero(d_out);
        layer.has_bias = true;
        net.layers.push_back(std::move(layer));
    }
    return net;
}

namespace detail {

template <typename T>
void apply_activation(const ActivationKind& act, Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic>& z) {
    switch (act.kind) {
        case Activation::Sine: {
            const T w0 = T(act.omega0);
            z = (z.array() * w0).sin().matrix();
            break;
        }
        case Activation::ReluPosEnc:
        case Activation::Relu:
            z = z.array().max(T(0)).matrix();
            break;
        case Activation::Gauss: {
            const T s = T(act.gauss_scale);
            z = (-(z.array() * s).square()).exp().matrix();
            break;
        }
        case Activation::Gelu:
            z = z.unaryExpr([](T v) {
                return T(0.5 * double(v) * (1.0 + std::erf(double(v) * 0.7071067811865475244)));
            });
            break;
        case Activation::Tanh:
            z = z.array().tanh().matrix();
            break;
    }
}

// Derivative of the activation evaluated at the pre-activation z.
template <typename T>
Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic> activation_grad(
    const ActivationKind& act, const Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic>& z) {
    using Mat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic>;
    switch (act.kind) {
        case Activation::Sine: {
            const T w0 = T(act.omega0);
            return Mat(((z.array() * w0).cos() * w0).matrix());
        }
        case Activation::ReluPosEnc:
        case Activation::Relu:
            return Mat((z.array() > T(0)).template cast<T>().matrix());
        case Activation::Gauss: {
            const T s = T(act.gauss_scale);
            auto sz = z.array() * s;
            return Mat((T(-2) * s * sz * (-sz.square()).exp()).matrix());
        }
        case Activation::Gelu:
            // Phi(z) + z phi(z) with the exact Gaussian CDF/PDF
            return Mat(z.unaryExpr([](T v) {
                const double x = double(v);
                const double cdf = 0.5 * (1.0 + std::erf(x * 0.7071067811865475244));
                const double pdf = 0.3989422804014326779 * std::exp(-0.5 * x * x);
                return T(cdf + x * pdf);
            }));
        case Activation::Tanh: {
            auto t = z.array().tanh();
            return Mat((T(1) - t.square()).matrix());
        }
    }
    return Mat();
}

} // namespace detail

// Positional-encoding expansion for ReluPosEnc nets; other kinds pass the
// coordinates through unchanged.
template <typename T>
Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic> encode_coords(
    const ActivationKind& act, const Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic>& coords) {
    if (act.kind != Activation::ReluPosEnc) return coords;
    const int d = int(coords.cols());
    const int f = act.num_frequencies;
    Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic> out(coords.rows(), d * 2 * f);
    const T pi = T(3.14159265358979323846);
    for (int c = 0; c < d; ++c) {
        for (int j = 0; j < f; ++j) {
            const T freq = T(std::ldexp(1.0, j)) * pi;
            out.col(c * 2 * f + 2 * j) = (coords.col(c).array() * freq).sin();
            out.col(c * 2 * f + 2 * j + 1) = (coords.col(c).array() * freq).cos();
        }
    }
    return out;
}

// Per-layer intermediates kept for the backward pass.
template <typename T>
struct ForwardTrace {
    using Matrix = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic>;
    Matrix encoded;           // input to layer 0
    std::vector<Matrix> pre;  // pre-activation per layer
    std::vector<Matrix> post; // activated output per non-final layer
};

// Batched forward pass; rows of coords are input points.
template <typename T>
Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic> forward(
    const Mlp<T>& net, const Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic>& coords,
    ForwardTrace<T>* trace = nullptr) {
    using Matrix = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic>;
    if (int(coords.cols()) != net.input_dim)
        throw std::invalid_argument("forward: coords have " + std::to_string(coords.cols()) +
                                    " columns, network expects " + std::to_string(net.input_dim));
    Matrix x = encode_coords(net.activation, coords);
    if (trace) {
        trace->encoded = x;
        trace->pre.clear();
        trace->post.clear();
    }
    for (std::size_t l = 0; l < net.layers.size(); ++l) {
        const auto& layer = net.layers[l];
        Matrix z;
        z.noalias() = x * layer.weight.transpose();
        if (layer.has_bias) z.rowwise() += layer.bias.transpose();
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

// Gradient block per layer, mirroring the parameter layout.
template <typename T>
struct MlpGradients {
    using Matrix = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic>;
    using Vector = Eigen::Matrix<T, Eigen::Dynamic, 1>;
    struct Layer {
        Matrix weight;
        Vector bias;
    };
    std::vector<Layer> layers;
};

// Exact reverse-mode gradients of every parameter given d(loss)/d(output).
template <typename T, typename Derived>
MlpGradients<T> backward(const Mlp<T>& net, const ForwardTrace<T>& trace,
                         const Eigen::MatrixBase<Derived>& output_grad) {
    using Matrix = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic>;
    const std::size_t n_layers = net.layers.size();
    if (trace.pre.size() != n_layers)
        throw std::invalid_argument("backward: trace does not match the network");
    if (output_grad.rows() != trace.encoded.rows() ||
        output_grad.cols() != net.layers.back().weight.rows())
        throw std::invalid_argument("backward: output gradient shape mismatch");

    MlpGradients<T> grads;
    grads.layers.resize(n_layers);
    Matrix g = output_grad;
    for (std::size_t l = n_layers; l-- > 0;) {
        const Matrix& input = l == 0 ? trace.encoded : trace.post[l - 1];
        grads.layers[l].weight.noalias() = g.transpose() * input;
        if (net.layers[l].has_bias) grads.layers[l].bias = g.colwise().sum().transpose();
        if (l > 0) {
            Matrix gx;
            gx.noalias() = g * net.layers[l].weight;
            g = gx.cwiseProduct(detail::activation_grad(net.activation, trace.pre[l - 1]));
        }
    }
    return grads;
}

template <typename T>
std::size_t param_count(const Mlp<T>& net) {
    return net.param_count();
}

} // namespace bpinr
