#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "bpinr/bigint.hpp"
#include "bpinr/signal.hpp"

namespace bpinr {

// Inputs of the explicit parameter bound: signal dimension d, bit precision
// n, Lipschitz constant L (L1 metric) and the domain interval [a, b].
struct BoundQuery {
    int d = 2;
    int n = 8;
    double lipschitz = 1.0;
    double a = -1.0;
    double b = 1.0;

    void validate() const {
        if (d < 1) throw std::invalid_argument("bound query: dimension must be >= 1");
        if (n < 1 || n > 62) throw std::invalid_argument("bound query: bit precision must be in [1,62]");
        if (lipschitz < 0) throw std::invalid_argument("bound query: Lipschitz constant must be >= 0");
        if (b < a) throw std::invalid_argument("bound query: domain ends out of order");
    }
};

// Coefficient of the bound: 9 (3 d max{L(b-a), 1})^(2d) d^2.
inline double coefficient(const BoundQuery& q) {
    q.validate();
    const double base = 3.0 * q.d * std::max(q.lipschitz * (q.b - q.a), 1.0);
    return 9.0 * std::pow(base, 2.0 * q.d) * double(q.d) * double(q.d);
}

struct UpperBound {
    BigUint relative_factor;  // exact (2^(n+1) - 2)^(2d)
    double coeff = 0.0;       // the coefficient above
    double absolute = 0.0;    // coeff * relative_factor, in floating point
    bool absolute_overflow = false;
};

// Parameter upper bound: coefficient * (2^(n+1) - 2)^(2d). The relative
// factor is kept as an exact big integer (it passes 64 bits already at
// d = 2, n = 16); the absolute product is floating point with an explicit
// saturation flag.
inline UpperBound upper_bound(const BoundQuery& q) {
    q.validate();
    UpperBound out;
    const std::uint64_t base = (std::uint64_t(1) << (q.n + 1)) - 2;
    out.relative_factor = BigUint::pow(base, unsigned(2 * q.d));
    out.coeff = coefficient(q);
    out.absolute = out.coeff * out.relative_factor.to_double();
    out.absolute_overflow = !std::isfinite(out.absolute);
    return out;
}

// Informative companions of the theorem statement, reported as-is and not
// verified structurally (the constructions below are the executable part).
// Layer count: d (log2(max{3dL(b-a)/2, 1}) + log2(1/eps)) + 2.
inline double layer_count_bound(const BoundQuery& q, double eps) {
    q.validate();
    if (eps <= 0) throw std::invalid_argument("layer_count_bound: eps must be positive");
    const double inner = std::max(3.0 * q.d * q.lipschitz * (q.b - q.a) / 2.0, 1.0);
    return q.d * (std::log2(inner) + std::log2(1.0 / eps)) + 2.0;
}

// Channels of layer i: eps^-d d (3 (3dL(b-a))^d / 2^i + 1).
inline double channel_bound(const BoundQuery& q, double eps, int layer_index) {
    q.validate();
    if (eps <= 0) throw std::invalid_argument("channel_bound: eps must be positive");
    if (layer_index < 0) throw std::invalid_argument("channel_bound: layer index must be >= 0");
    const double base = std::pow(3.0 * q.d * q.lipschitz * (q.b - q.a), double(q.d));
    return std::pow(eps, -double(q.d)) * q.d * (3.0 * base / std::ldexp(1.0, layer_index) + 1.0);
}

// Lipschitz estimate of a grid signal under the L1 metric: max over
// axis-adjacent sample pairs of |delta normalized value| / |delta coordinate|
// with every axis mapped onto [a, b].
inline double lipschitz_estimate(const DigitalSignal& signal, double a, double b) {
    if (b <= a) throw std::invalid_argument("lipschitz_estimate: domain ends out of order");
    bool has_pair = false;
    const double top = double(max_level(signal.bit_depth));
    std::vector<std::size_t> strides(signal.shape.size(), 1);
    for (std::size_t ax = signal.shape.size() - 1; ax-- > 0;)
        strides[ax] = strides[ax + 1] * signal.shape[ax + 1];
    double best = 0.0;
    for (std::size_t ax = 0; ax < signal.shape.size(); ++ax) {
        const std::size_t extent = signal.shape[ax];
        if (extent < 2) continue;
        has_pair = true;
        const double step = (b - a) / double(extent - 1);
        const std::size_t stride = strides[ax];
        for (std::size_t s = 0; s < signal.size(); ++s) {
            const std::size_t pos = (s / stride) % extent;
            if (pos + 1 >= extent) continue;
            const double dv =
                std::abs(double(signal.samples[s + stride]) - double(signal.samples[s])) / top;
            best = std::max(best, dv / step);
        }
    }
    if (!has_pair)
        throw std::invalid_argument("lipschitz_estimate: signal has no axis with >= 2 samples");
    return best;
}

// Feed-forward net of affine layers with ReLU between consecutive layers and
// no activation after the last; evaluated exactly in double.
struct ReluNet {
    struct Layer {
        Eigen::MatrixXd w;
        Eigen::VectorXd b;
    };
    std::vector<Layer> layers;

    int input_dim() const { return int(layers.front().w.cols()); }
    int output_dim() const { return int(layers.back().w.rows()); }
    std::size_t depth() const { return layers.size(); }

    std::size_t param_count() const {
        std::size_t n = 0;
        for (const auto& l : layers) n += std::size_t(l.w.size()) + std::size_t(l.b.size());
        return n;
    }

    Eigen::VectorXd eval(const Eigen::VectorXd& x) const {
        if (x.size() != layers.front().w.cols())
            throw std::invalid_argument("ReluNet: input dimension mismatch");
        Eigen::VectorXd v = x;
        for (std::size_t l = 0; l < layers.size(); ++l) {
            v = (layers[l].w * v + layers[l].b).eval();
            if (l + 1 < layers.size()) v = v.cwiseMax(0.0);
        }
        return v;
    }

    double eval_scalar(const Eigen::VectorXd& x) const {
        Eigen::VectorXd v = eval(x);
        if (v.size() != 1) throw std::logic_error("ReluNet: output is not scalar");
        return v(0);
    }
};

namespace annops {

inline ReluNet affine(const Eigen::MatrixXd& w, const Eigen::VectorXd& b) {
    ReluNet net;
    net.layers.push_back({w, b});
    return net;
}

inline ReluNet affine(const Eigen::MatrixXd& w) {
    return affine(w, Eigen::VectorXd::Zero(w.rows()));
}

// Two affine layers with the ReLU between them kept explicit (composing two
// single-layer nets would merge the affines instead).
inline ReluNet two_layer(const Eigen::MatrixXd& w1, const Eigen::MatrixXd& w2) {
    ReluNet net;
    net.layers.push_back({w1, Eigen::VectorXd::Zero(w1.rows())});
    net.layers.push_back({w2, Eigen::VectorXd::Zero(w2.rows())});
    return net;
}

// Sequential composition g after f. The adjoining affine maps are merged so
// that ReLU sits strictly between affine layers, as in the source formalism.
inline ReluNet compose(const ReluNet& g, const ReluNet& f) {
    if (g.input_dim() != f.output_dim())
        throw std::invalid_argument("compose: dimension mismatch");
    ReluNet net;
    for (std::size_t l = 0; l + 1 < f.layers.size(); ++l) net.layers.push_back(f.layers[l]);
    ReluNet::Layer merged;
    merged.w = g.layers.front().w * f.layers.back().w;
    merged.b = g.layers.front().w * f.layers.back().b + g.layers.front().b;
    net.layers.push_back(std::move(merged));
    for (std::size_t l = 1; l < g.layers.size(); ++l) net.layers.push_back(g.layers[l]);
    return net;
}

// Parallel stacking (block-diagonal affines). All parts must share a depth;
// pad shorter parts with identity_net first.
inline ReluNet parallel(const std::vector<ReluNet>& parts) {
    if (parts.empty()) throw std::invalid_argument("parallel: no parts");
    const std::size_t depth = parts.front().depth();
    for (const auto& p : parts)
        if (p.depth() != depth) throw std::invalid_argument("parallel: depth mismatch between parts");
    ReluNet net;
    for (std::size_t l = 0; l < depth; ++l) {
        Eigen::Index rows = 0, cols = 0;
        for (const auto& p : parts) {
            rows += p.layers[l].w.rows();
            cols += p.layers[l].w.cols();
        }
        ReluNet::Layer layer;
        layer.w = Eigen::MatrixXd::Zero(rows, cols);
        layer.b = Eigen::VectorXd::Zero(rows);
        Eigen::Index r0 = 0, c0 = 0;
        for (const auto& p : parts) {
            const auto& pl = p.layers[l];
            layer.w.block(r0, c0, pl.w.rows(), pl.w.cols()) = pl.w;
            layer.b.segment(r0, pl.b.size()) = pl.b;
            r0 += pl.w.rows();
            c0 += pl.w.cols();
        }
        net.layers.push_back(std::move(layer));
    }
    return net;
}

// Exact identity on R^d as a ReLU net of the requested depth, built from
// x = relu(x) - relu(-x).
inline ReluNet identity_net(int d, std::size_t depth) {
    if (depth < 1) throw std::invalid_argument("identity_net: depth must be >= 1");
    Eigen::MatrixXd eye = Eigen::MatrixXd::Identity(d, d);
    Eigen::MatrixXd up(2 * d, d);
    up << eye, -eye;
    Eigen::MatrixXd down(d, 2 * d);
    down << eye, -eye;
    ReluNet net = affine(eye);
    while (net.depth() < depth) net = compose(two_layer(up, down), net);
    return net;
}

// K-fold repetition x -> [x; x; ...; x].
inline ReluNet repeat(int d, int copies) {
    Eigen::MatrixXd w(Eigen::Index(d) * copies, d);
    for (int i = 0; i < copies; ++i) w.block(Eigen::Index(d) * i, 0, d, d) = Eigen::MatrixXd::Identity(d, d);
    return affine(w);
}

} // namespace annops

// |x| = relu(x) + relu(-x), stacked over d inputs via the Kronecker block
// pattern; computes the L1 norm exactly with a 2-layer net.
inline ReluNet build_l1_net(int d) {
    if (d < 1) throw std::invalid_argument("build_l1_net: dimension must be >= 1");
    Eigen::MatrixXd w1 = Eigen::MatrixXd::Zero(2 * d, d);
    for (int i = 0; i < d; ++i) {
        w1(2 * i, i) = 1.0;
        w1(2 * i + 1, i) = -1.0;
    }
    Eigen::MatrixXd w2 = Eigen::MatrixXd::Ones(1, 2 * d);
    return annops::two_layer(w1, w2);
}

// max(x1, x2) = relu(x1 - x2) + relu(x2) - relu(-x2) as a 2-layer net.
inline ReluNet build_max2_net() {
    Eigen::MatrixXd w1(3, 2);
    w1 << 1, -1, 0, 1, 0, -1;
    Eigen::MatrixXd w2(1, 3);
    w2 << 1, 1, -1;
    return annops::two_layer(w1, w2);
}

// Exact d-ary maximum by recursive pairing: even d runs d/2 parallel pair
// blocks, odd d carries the last lane through an identity block.
inline ReluNet build_max_net(int d) {
    if (d < 2) throw std::invalid_argument("build_max_net: dimension must be >= 2");
    if (d == 2) return build_max2_net();
    std::vector<ReluNet> parts;
    const int pairs = d / 2;
    for (int i = 0; i < pairs; ++i) parts.push_back(build_max2_net());
    if (d % 2 == 1) parts.push_back(annops::identity_net(1, 2));
    const int reduced = pairs + (d % 2);
    ReluNet stage = annops::parallel(parts);
    if (reduced == 1) return stage;
    return annops::compose(build_max_net(reduced), stage);
}

// Max-convolution net Phi(x) = max_k (y_k - L ||x - x_k||_1), assembled from
// repetition, per-sample L1 blocks, the -L/+y affine stage and the max net.
inline ReluNet build_maxconv_net(const std::vector<Eigen::VectorXd>& points,
                                 const std::vector<double>& values, double lipschitz) {
    if (points.empty()) throw std::invalid_argument("build_maxconv_net: empty sample list");
    if (points.size() != values.size())
        throw std::invalid_argument("build_maxconv_net: points/values size mismatch");
    if (lipschitz < 0) throw std::invalid_argument("build_maxconv_net: negative Lipschitz constant");
    const int d = int(points.front().size());
    const int K = int(points.size());

    std::vector<ReluNet> lanes;
    for (int k = 0; k < K; ++k) {
        if (points[k].size() != d) throw std::invalid_argument("build_maxconv_net: ragged sample points");
        ReluNet shift = annops::affine(Eigen::MatrixXd::Identity(d, d), -points[k]);
        lanes.push_back(annops::compose(build_l1_net(d), shift));
    }
    ReluNet body = annops::compose(annops::parallel(lanes), annops::repeat(d, K));
    Eigen::MatrixXd scale = -lipschitz * Eigen::MatrixXd::Identity(K, K);
    Eigen::VectorXd y = Eigen::Map<const Eigen::VectorXd>(values.data(), K);
    body = annops::compose(annops::affine(scale, y), body);
    if (K == 1) return body;
    return annops::compose(build_max_net(K), body);
}

// Sup over a dense probe grid of the min L1 distance to any grid point. The
// probe grid is an even lattice of probes_per_axis points per axis including
// the domain endpoints.
inline double covering_radius(const std::vector<Eigen::VectorXd>& points, double a, double b,
                              int probes_per_axis = 512) {
    if (points.empty()) throw std::invalid_argument("covering_radius: no points");
    if (probes_per_axis < 2) throw std::invalid_argument("covering_radius: need >= 2 probes per axis");
    const int d = int(points.front().size());
    std::vector<int> idx(d, 0);
    Eigen::VectorXd probe(d);
    double radius = 0.0;
    while (true) {
        for (int ax = 0; ax < d; ++ax)
            probe(ax) = a + (b - a) * double(idx[ax]) / double(probes_per_axis - 1);
        double nearest = std::numeric_limits<double>::infinity();
        for (const auto& p : points) nearest = std::min(nearest, (probe - p).lpNorm<1>());
        radius = std::max(radius, nearest);
        int ax = d - 1;
        while (ax >= 0 && ++idx[ax] == probes_per_axis) idx[ax--] = 0;
        if (ax < 0) break;
    }
    return radius;
}

} // namespace bpinr
