#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numeric>
#include <vector>

#include "bpinr/network.hpp"
#include "bpinr/rng.hpp"
#include "bpinr/ternary.hpp"
#include "bpinr/training.hpp"

using namespace bpinr;

namespace {

// Scalar re-implementation of the forward pass, no Eigen, used as the oracle.
std::vector<double> naive_forward(const Mlp<double>& net, const std::vector<double>& coord) {
    std::vector<double> x;
    if (net.activation.kind == Activation::ReluPosEnc) {
        for (double c : coord)
            for (int j = 0; j < net.activation.num_frequencies; ++j) {
                const double f = std::ldexp(1.0, j) * 3.14159265358979323846;
                x.push_back(std::sin(f * c));
                x.push_back(std::cos(f * c));
            }
    } else {
        x = coord;
    }
    for (std::size_t l = 0; l < net.layers.size(); ++l) {
        const auto& layer = net.layers[l];
        std::vector<double> z(layer.weight.rows(), 0.0);
        for (Eigen::Index r = 0; r < layer.weight.rows(); ++r) {
            double acc = layer.has_bias ? layer.bias(r) : 0.0;
            for (Eigen::Index c = 0; c < layer.weight.cols(); ++c) acc += layer.weight(r, c) * x[c];
            z[std::size_t(r)] = acc;
        }
        if (l + 1 < net.layers.size()) {
            for (double& v : z) {
                switch (net.activation.kind) {
                    case Activation::Sine: v = std::sin(net.activation.omega0 * v); break;
                    case Activation::ReluPosEnc:
                    case Activation::Relu: v = std::max(v, 0.0); break;
                    case Activation::Gauss: {
                        const double s = net.activation.gauss_scale * v;
                        v = std::exp(-s * s);
                        break;
                    }
                    case Activation::Gelu:
                        v = 0.5 * v * (1.0 + std::erf(v * 0.7071067811865475244));
                        break;
                    case Activation::Tanh: v = std::tanh(v); break;
                }
            }
        }
        x = std::move(z);
    }
    return x;
}

double probe_objective(const Mlp<double>& net, const Eigen::MatrixXd& coords,
                       const Eigen::MatrixXd& mix) {
    auto out = forward(net, coords);
    return (out.array() * mix.array()).sum();
}

} // namespace

TEST_CASE("param count examples") {
    // one 2->3 layer with bias
    Mlp<double> tiny = init_mlp<double>(2, 3, 1, 3, ActivationKind::relu(), 0);
    tiny.layers.pop_back();
    CHECK(tiny.param_count() == 9);

    // default architecture: 5 hidden layers of 512, input 3, scalar output
    Mlp<float> big = init_mlp<float>(3, 512, 5, 1, ActivationKind::sine(30.0), 0);
    const std::size_t expected = std::size_t(3 * 512 + 512) + 4 * (512 * 512 + 512) + (512 * 1 + 1);
    CHECK(expected == 1053185);
    CHECK(big.param_count() == expected);

    // bias-detached ternary stack counts weights only
    TernaryMlp<float> tern = init_ternary_mlp<float>(3, 256, 4, 1, ActivationKind::gelu(), 0);
    const std::size_t weights_only = std::size_t(3 * 256) + 3 * (256 * 256) + 256;
    CHECK(tern.param_count() == weights_only);
}

TEST_CASE("init is deterministic and respects the sine bounds") {
    auto a = init_mlp<double>(3, 32, 3, 1, ActivationKind::sine(30.0), 1234);
    auto b = init_mlp<double>(3, 32, 3, 1, ActivationKind::sine(30.0), 1234);
    for (std::size_t l = 0; l < a.layers.size(); ++l) {
        CHECK(a.layers[l].weight == b.layers[l].weight);
        CHECK(a.layers[l].bias == b.layers[l].bias);
        CHECK(a.layers[l].bias.isZero());
    }
    auto c = init_mlp<double>(3, 32, 3, 1, ActivationKind::sine(30.0), 1235);
    CHECK(a.layers[0].weight != c.layers[0].weight);

    CHECK(a.layers[0].weight.array().abs().maxCoeff() <= 1.0 / 3.0);
    const double deep_bound = std::sqrt(6.0 / 32.0) / 30.0;
    for (std::size_t l = 1; l < a.layers.size(); ++l)
        CHECK(a.layers[l].weight.array().abs().maxCoeff() <= deep_bound);

    CHECK_THROWS_AS(init_mlp<double>(0, 4, 1, 1, ActivationKind::relu(), 0), std::invalid_argument);
}

TEST_CASE("forward trivial cases") {
    auto net = init_mlp<double>(2, 4, 1, 1, ActivationKind::tanh(), 7);
    for (auto& l : net.layers) {
        l.weight.setZero();
        l.bias.setZero();
    }
    Eigen::MatrixXd coords = Eigen::MatrixXd::Random(6, 2);
    CHECK(forward(net, coords).isZero());

    // single linear layer with identity weights reproduces the input
    Mlp<double> id;
    id.activation = ActivationKind::relu();
    id.input_dim = 3;
    Mlp<double>::Layer layer;
    layer.weight = Eigen::MatrixXd::Identity(3, 3);
    layer.bias = Eigen::VectorXd::Zero(3);
    id.layers.push_back(layer);
    Eigen::MatrixXd pts = Eigen::MatrixXd::Random(5, 3);
    CHECK((forward(id, pts) - pts).cwiseAbs().maxCoeff() < 1e-15);

    CHECK_THROWS_AS(forward(net, Eigen::MatrixXd(Eigen::MatrixXd::Random(3, 5))), std::invalid_argument);
}

TEST_CASE("forward matches the naive scalar oracle") {
    SplitMix64 rng(99);
    for (auto act : {ActivationKind::sine(30.0), ActivationKind::relu_pos_enc(4),
                     ActivationKind::gauss(10.0), ActivationKind::gelu(), ActivationKind::tanh(),
                     ActivationKind::relu()}) {
        auto net = init_mlp<double>(2, 8, 2, 2, act, rng.next());
        // non-zero biases to exercise that path
        for (auto& l : net.layers)
            for (Eigen::Index i = 0; i < l.bias.size(); ++i) l.bias(i) = rng.next_uniform(-0.2, 0.2);
        for (int p = 0; p < 10; ++p) {
            Eigen::MatrixXd coord(1, 2);
            coord << rng.next_uniform(-1, 1), rng.next_uniform(-1, 1);
            auto fast = forward(net, coord);
            auto slow = naive_forward(net, {coord(0, 0), coord(0, 1)});
            for (int c = 0; c < 2; ++c)
                CHECK(fast(0, c) == doctest::Approx(slow[std::size_t(c)]).epsilon(1e-12));
        }
    }
}

TEST_CASE("forward is permutation-equivariant over the batch") {
    SplitMix64 rng(17);
    auto net = init_mlp<double>(3, 16, 2, 2, ActivationKind::sine(30.0), 55);
    Eigen::MatrixXd coords = Eigen::MatrixXd::Random(20, 3);
    auto out = forward(net, coords);
    std::vector<int> perm(20);
    std::iota(perm.begin(), perm.end(), 0);
    for (int i = 19; i > 0; --i) std::swap(perm[std::size_t(i)], perm[rng.next_below(std::uint64_t(i + 1))]);
    Eigen::MatrixXd shuffled(20, 3);
    for (int i = 0; i < 20; ++i) shuffled.row(i) = coords.row(perm[std::size_t(i)]);
    auto out2 = forward(net, shuffled);
    // SIMD tails of the vectorized activations differ from full packets at
    // the last-ulp level, so equivariance holds to ~1e-15, not bitwise
    for (int i = 0; i < 20; ++i)
        CHECK((out2.row(i) - out.row(perm[std::size_t(i)])).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("backward trivial cases") {
    auto net = init_mlp<double>(2, 4, 2, 1, ActivationKind::tanh(), 3);
    Eigen::MatrixXd coords = Eigen::MatrixXd::Random(5, 2);
    ForwardTrace<double> trace;
    forward(net, coords, &trace);
    // constant loss: zero upstream gradient
    auto grads = backward(net, trace, Eigen::MatrixXd::Zero(5, 1).eval());
    for (const auto& g : grads.layers) {
        CHECK(g.weight.isZero());
        CHECK(g.bias.isZero());
    }

    // 1-parameter net, quadratic loss L = (w x)^2 -> dL/dw = 2 w x^2
    Mlp<double> one;
    one.activation = ActivationKind::relu();
    one.input_dim = 1;
    Mlp<double>::Layer layer;
    layer.weight = Eigen::MatrixXd::Constant(1, 1, 0.7);
    layer.bias = Eigen::VectorXd::Zero(1);
    layer.has_bias = false;
    one.layers.push_back(layer);
    Eigen::MatrixXd x(1, 1);
    x << 1.3;
    ForwardTrace<double> t1;
    auto y = forward(one, x, &t1);
    Eigen::MatrixXd up(1, 1);
    up << 2.0 * y(0, 0); // d/dy of y^2
    auto g1 = backward(one, t1, up);
    CHECK(g1.layers[0].weight(0, 0) == doctest::Approx(2.0 * 0.7 * 1.3 * 1.3).epsilon(1e-14));
}

TEST_CASE("backward matches central finite differences for every activation") {
    SplitMix64 rng(2024);
    for (auto act : {ActivationKind::sine(30.0), ActivationKind::relu_pos_enc(3),
                     ActivationKind::gauss(10.0), ActivationKind::gelu(), ActivationKind::tanh(),
                     ActivationKind::relu()}) {
        auto net = init_mlp<double>(2, 6, 3, 2, act, rng.next());
        for (auto& l : net.layers)
            for (Eigen::Index i = 0; i < l.bias.size(); ++i) l.bias(i) = rng.next_uniform(-0.1, 0.1);

        Eigen::MatrixXd coords(4, 2);
        for (int i = 0; i < coords.size(); ++i) coords(i) = rng.next_uniform(-1, 1);
        Eigen::MatrixXd mix(4, 2);
        for (int i = 0; i < mix.size(); ++i) mix(i) = rng.next_uniform(-1, 1);

        ForwardTrace<double> trace;
        forward(net, coords, &trace);
        auto grads = backward(net, trace, mix);

        for (int probe = 0; probe < 30; ++probe) {
            const std::size_t l = rng.next_below(net.layers.size());
            auto& layer = net.layers[l];
            const bool probe_bias = rng.next_below(4) == 0;
            double* param;
            double analytic;
            if (probe_bias) {
                const Eigen::Index i = Eigen::Index(rng.next_below(std::uint64_t(layer.bias.size())));
                param = &layer.bias(i);
                analytic = grads.layers[l].bias(i);
            } else {
                const Eigen::Index i = Eigen::Index(rng.next_below(std::uint64_t(layer.weight.size())));
                param = &layer.weight.data()[i];
                analytic = grads.layers[l].weight.data()[i];
            }
            const double saved = *param;
            const double h = 1e-5 * std::max(1.0, std::abs(saved));
            *param = saved + h;
            const double up = probe_objective(net, coords, mix);
            *param = saved - h;
            const double down = probe_objective(net, coords, mix);
            *param = saved;
            const double fd = (up - down) / (2 * h);
            // denominator floor: below ~1e-4 the FD cancellation noise (~1e-11
            // at this step size) swamps any relative comparison
            const double err = std::abs(analytic - fd) / std::max({std::abs(analytic), std::abs(fd), 1e-4});
            CHECK(err < 1e-5);
        }
    }
}

TEST_CASE("ternary quantization rule") {
    TernaryLayer<double> layer;
    layer.shadow.resize(1, 3);
    layer.shadow << 0.4, -0.05, -0.6;
    ternary_quantize(layer);
    CHECK(layer.beta == doctest::Approx(0.35).epsilon(1e-12));
    CHECK(layer.quantized(0, 0) == 1);
    CHECK(layer.quantized(0, 1) == 0);
    CHECK(layer.quantized(0, 2) == -1);

    layer.shadow.setZero();
    ternary_quantize(layer);
    CHECK(layer.beta == 0.0);
    CHECK(layer.quantized.cwiseAbs().maxCoeff() == 0);

    // fixed point of the rule: W = beta * {1,-1,1}
    layer.shadow << 0.5, -0.5, 0.5;
    ternary_quantize(layer);
    CHECK(layer.beta == doctest::Approx(0.5));
    CHECK(layer.quantized(0, 0) == 1);
    CHECK(layer.quantized(0, 1) == -1);
    CHECK(layer.quantized(0, 2) == 1);

    // beta recomputed from current shadow weights to machine precision
    SplitMix64 rng(31);
    layer.shadow.resize(4, 5);
    for (Eigen::Index i = 0; i < layer.shadow.size(); ++i)
        layer.shadow.data()[i] = rng.next_uniform(-2, 2);
    ternary_quantize(layer);
    CHECK(layer.beta ==
          doctest::Approx(layer.shadow.array().abs().sum() / 20.0).epsilon(1e-15));
    CHECK(layer.quantized.cwiseAbs().maxCoeff() <= 1);
}

TEST_CASE("ternary forward scaling") {
    const int d = 4;
    TernaryLayer<double> layer;
    layer.shadow = double(d) * Eigen::MatrixXd::Identity(d, d); // beta = 1, quantized = I
    ternary_quantize(layer);
    CHECK(layer.beta == doctest::Approx(1.0));

    SplitMix64 rng(8);
    Eigen::MatrixXd x(3, d);
    for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = rng.next_uniform(-1, 1);
    auto y = ternary_forward(layer, x);
    for (Eigen::Index r = 0; r < x.rows(); ++r) {
        const double gamma = x.row(r).cwiseAbs().maxCoeff();
        for (int c = 0; c < d; ++c)
            CHECK(std::abs(y(r, c) - x(r, c)) <= gamma / 254.0 + 1e-12);
    }

    Eigen::MatrixXd zero = Eigen::MatrixXd::Zero(2, d);
    CHECK(ternary_forward(layer, zero).isZero());
}

TEST_CASE("ternary STE solves a separable 2-point task") {
    TernaryMlp<float> net = init_ternary_mlp<float>(2, 4, 1, 1, ActivationKind::gelu(), 77);
    Eigen::MatrixXf x(2, 2);
    x << 1.0f, 0.5f, -1.0f, 0.2f;
    Eigen::MatrixXf t(2, 1);
    t << 1.0f, 0.0f;

    auto state = make_adam_state(net);
    for (int it = 0; it < 500; ++it) {
        ForwardTrace<float> trace;
        auto pred = forward(net, x, &trace);
        auto [loss, grad] = loss_eval(Loss::Bce, pred, t);
        adam_step(state, net, backward(net, trace, grad), 0.02);
    }
    auto pred = forward(net, x); // quantized path
    CHECK(pred(0, 0) >= 0.0f);
    CHECK(pred(1, 0) < 0.0f);
}
