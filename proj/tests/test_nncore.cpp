#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "oracles.hpp"
#include "soc/nn.hpp"

using soc::Tensor;

TEST_CASE("selu matches the closed form") {
    CHECK(soc::selu(0.0) == 0.0);
    // lambda * 1 and lambda * alpha * (e^-1 - 1), computed independently.
    const double at_one = soc::kSeluLambda;
    const double at_minus_one = soc::kSeluLambda * soc::kSeluAlpha * (std::exp(-1.0) - 1.0);
    CHECK_THAT(soc::selu(1.0), Catch::Matchers::WithinAbs(at_one, 1e-12));
    CHECK_THAT(soc::selu(1.0), Catch::Matchers::WithinAbs(1.05070099, 1e-6));
    CHECK_THAT(soc::selu(-1.0), Catch::Matchers::WithinAbs(at_minus_one, 1e-12));
    CHECK_THAT(soc::selu(-1.0), Catch::Matchers::WithinAbs(-1.11133073, 1e-6));
}

TEST_CASE("selu is continuous at zero") {
    CHECK(std::abs(soc::selu(1e-9) - soc::selu(-1e-9)) < 1e-8);
}

TEST_CASE("selu applies elementwise to tensors") {
    Tensor<double> x({2, 2});
    x[0] = 1.0; x[1] = -1.0; x[2] = 0.0; x[3] = 2.5;
    const Tensor<double> y = soc::selu(x);
    for (std::size_t i = 0; i < x.size(); ++i) CHECK(y[i] == soc::selu(x[i]));
}

TEST_CASE("softmax symmetry cases") {
    const auto half = soc::softmax(std::vector<double>{0.0, 0.0});
    CHECK(half[0] == 0.5);
    CHECK(half[1] == 0.5);
    const auto thirds = soc::softmax(std::vector<double>{1.0, 1.0, 1.0});
    for (double p : thirds) CHECK_THAT(p, Catch::Matchers::WithinAbs(1.0 / 3.0, 1e-12));
}

TEST_CASE("softmax of [2,0]") {
    const double expected = std::exp(2.0) / (std::exp(2.0) + 1.0);
    const auto probs = soc::softmax(std::vector<double>{2.0, 0.0});
    CHECK_THAT(probs[0], Catch::Matchers::WithinAbs(expected, 1e-12));
    CHECK_THAT(probs[0], Catch::Matchers::WithinAbs(0.88080, 1e-5));
    CHECK_THAT(probs[1], Catch::Matchers::WithinAbs(0.11920, 1e-5));
}

TEST_CASE("softmax outputs a distribution on random vectors") {
    soc::Rng rng(11);
    for (int trial = 0; trial < 1000; ++trial) {
        const std::size_t n = 2 + rng.below(6);
        std::vector<double> logits(n);
        for (double& v : logits) v = rng.uniform(-30.0, 30.0);
        const auto probs = soc::softmax(logits);
        double sum = 0.0;
        for (double p : probs) {
            CHECK(p > 0.0);
            CHECK(p < 1.0 + 1e-12);
            sum += p;
        }
        CHECK_THAT(sum, Catch::Matchers::WithinAbs(1.0, 1e-6));
    }
}

TEST_CASE("softmax shift invariance") {
    // Max subtraction makes shifted logits produce identical arithmetic.
    const std::vector<double> base{0.3, -1.2, 2.4};
    std::vector<double> shifted = base;
    for (double& v : shifted) v += 5.0;
    const auto a = soc::softmax(base);
    const auto b = soc::softmax(shifted);
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK_THAT(a[i], Catch::Matchers::WithinAbs(b[i], 1e-15));
    }
}

TEST_CASE("softmax rejects bad input") {
    CHECK_THROWS_AS(soc::softmax(std::vector<double>{}), soc::input_error);
    CHECK_THROWS_AS(soc::softmax(std::vector<double>{1.0, std::nan("")}),
                    soc::numeric_error);
}

namespace {

soc::LstmWeights<double> lstm_weights(std::size_t hidden, std::size_t input_dim,
                                      double fill = 0.0) {
    soc::LstmWeights<double> w;
    w.w_x = Tensor<double>({4 * hidden, input_dim}, fill);
    w.w_h = Tensor<double>({4 * hidden, hidden}, fill);
    w.b = Tensor<double>({4 * hidden});
    return w;
}

}  // namespace

TEST_CASE("lstm_step with all zeros yields zero state") {
    const auto w = lstm_weights(3, 2);
    const auto [h, c] = soc::lstm_step<double>({0.0, 0.0}, {0.0, 0.0, 0.0},
                                               {0.0, 0.0, 0.0}, w);
    for (double v : h) CHECK(v == 0.0);
    for (double v : c) CHECK(v == 0.0);
}

TEST_CASE("lstm_step saturated forget gate preserves the cell") {
    auto w = lstm_weights(2, 2);
    for (std::size_t j = 2; j < 4; ++j) w.b[j] = 30.0;  // forget-gate bias block
    const std::vector<double> c_prev{0.7, -0.4};
    const auto [h, c] = soc::lstm_step<double>({0.0, 0.0}, {0.0, 0.0}, c_prev, w);
    CHECK_THAT(c[0], Catch::Matchers::WithinAbs(0.7, 1e-9));
    CHECK_THAT(c[1], Catch::Matchers::WithinAbs(-0.4, 1e-9));
}

TEST_CASE("lstm_step matches the scalar-loop oracle") {
    soc::Rng rng(23);
    for (int trial = 0; trial < 20; ++trial) {
        const std::size_t hidden = 1 + rng.below(5);
        const std::size_t input_dim = 1 + rng.below(5);
        auto w = lstm_weights(hidden, input_dim);
        for (std::size_t i = 0; i < w.w_x.size(); ++i) w.w_x[i] = rng.uniform(-1.0, 1.0);
        for (std::size_t i = 0; i < w.w_h.size(); ++i) w.w_h[i] = rng.uniform(-1.0, 1.0);
        for (std::size_t i = 0; i < w.b.size(); ++i) w.b[i] = rng.uniform(-1.0, 1.0);
        std::vector<double> x(input_dim), h_prev(hidden), c_prev(hidden);
        for (double& v : x) v = rng.uniform(-2.0, 2.0);
        for (double& v : h_prev) v = rng.uniform(-1.0, 1.0);
        for (double& v : c_prev) v = rng.uniform(-2.0, 2.0);

        const auto [h, c] = soc::lstm_step(x, h_prev, c_prev, w);
        oracle::Vec h_ref, c_ref;
        oracle::lstm_step(x, h_prev, c_prev, oracle::to_mat(w.w_x), oracle::to_mat(w.w_h),
                          oracle::to_vec(w.b), h_ref, c_ref);
        for (std::size_t j = 0; j < hidden; ++j) {
            CHECK_THAT(h[j], Catch::Matchers::WithinAbs(h_ref[j], 1e-12));
            CHECK_THAT(c[j], Catch::Matchers::WithinAbs(c_ref[j], 1e-12));
            CHECK(std::abs(h[j]) < 1.0);
        }
    }
}

TEST_CASE("lstm_step rejects inconsistent shapes") {
    const auto w = lstm_weights(3, 2);
    CHECK_THROWS_AS(soc::lstm_step<double>({0.0, 0.0, 0.0}, {0.0, 0.0, 0.0},
                                           {0.0, 0.0, 0.0}, w),
                    soc::config_error);
}

TEST_CASE("conv1d_maxpool hand example") {
    // Single all-ones filter of width 2 over rows [1,2],[3,4]: one window,
    // response 1+2+3+4 = 10.
    Tensor<double> seq({2, 2});
    seq(0, 0) = 1.0; seq(0, 1) = 2.0; seq(1, 0) = 3.0; seq(1, 1) = 4.0;
    Tensor<double> filters({1, 2, 2}, 1.0);
    const auto out = soc::conv1d_maxpool(seq, 2, filters);
    REQUIRE(out.pooled.size() == 1);
    CHECK(out.pooled[0] == 10.0);
    CHECK(out.argmax[0] == 0);
}

TEST_CASE("conv1d_maxpool zero filters pool to zero") {
    Tensor<double> seq({4, 3}, 1.5);
    Tensor<double> filters({2, 2, 3}, 0.0);
    const auto out = soc::conv1d_maxpool(seq, 2, filters);
    for (double v : out.pooled) CHECK(v == 0.0);
}

TEST_CASE("conv1d_maxpool matches the oracle and dominates every window") {
    soc::Rng rng(31);
    for (int trial = 0; trial < 20; ++trial) {
        const std::size_t steps = 3 + rng.below(6);
        const std::size_t hidden = 1 + rng.below(4);
        const std::size_t width = 1 + rng.below(std::min<std::size_t>(steps, 3));
        const std::size_t nfilters = 1 + rng.below(4);
        Tensor<double> seq({steps, hidden});
        for (std::size_t i = 0; i < seq.size(); ++i) seq[i] = rng.uniform(-2.0, 2.0);
        Tensor<double> filters({nfilters, width, hidden});
        for (std::size_t i = 0; i < filters.size(); ++i) filters[i] = rng.uniform(-2.0, 2.0);

        const auto out = soc::conv1d_maxpool(seq, width, filters);
        oracle::Mat seq_m(steps, oracle::Vec(hidden));
        for (std::size_t t = 0; t < steps; ++t) {
            for (std::size_t j = 0; j < hidden; ++j) seq_m[t][j] = seq(t, j);
        }
        oracle::Mat filt(nfilters, oracle::Vec(width * hidden));
        for (std::size_t f = 0; f < nfilters; ++f) {
            for (std::size_t k = 0; k < width; ++k) {
                for (std::size_t j = 0; j < hidden; ++j) {
                    filt[f][k * hidden + j] = filters(f, k, j);
                }
            }
        }
        const auto responses = oracle::conv_responses(seq_m, width, filt, hidden);
        for (std::size_t f = 0; f < nfilters; ++f) {
            const double ref = *std::max_element(responses[f].begin(), responses[f].end());
            CHECK_THAT(out.pooled[f], Catch::Matchers::WithinAbs(ref, 1e-12));
            for (double r : responses[f]) CHECK(out.pooled[f] >= r - 1e-12);
        }
    }
}

TEST_CASE("conv1d_maxpool rejects sequences shorter than the kernel") {
    Tensor<double> seq({2, 3});
    Tensor<double> filters({1, 4, 3});
    CHECK_THROWS_AS(soc::conv1d_maxpool(seq, 4, filters), soc::config_error);
}

TEST_CASE("dense identity and zero cases") {
    Tensor<double> eye({3, 3});
    for (std::size_t i = 0; i < 3; ++i) eye(i, i) = 1.0;
    Tensor<double> bias({3});
    const std::vector<double> x{0.5, -1.5, 2.0};
    const auto y = soc::dense(x, eye, bias, soc::Activation::identity);
    CHECK(y == x);
    const std::vector<double> zeros{0.0, 0.0, 0.0};
    for (auto act : {soc::Activation::selu, soc::Activation::tanh}) {
        const auto z = soc::dense(zeros, eye, bias, act);
        for (double v : z) CHECK(v == 0.0);
    }
}

TEST_CASE("dense matches the oracle") {
    soc::Rng rng(37);
    Tensor<double> w({4, 3});
    Tensor<double> b({4});
    for (std::size_t i = 0; i < w.size(); ++i) w[i] = rng.uniform(-1.0, 1.0);
    for (std::size_t i = 0; i < b.size(); ++i) b[i] = rng.uniform(-1.0, 1.0);
    const std::vector<double> x{0.2, -0.9, 1.4};
    const auto y = soc::dense(x, w, b, soc::Activation::selu);
    const auto ref = oracle::dense(x, oracle::to_mat(w), oracle::to_vec(b), true);
    for (std::size_t i = 0; i < y.size(); ++i) {
        CHECK_THAT(y[i], Catch::Matchers::WithinAbs(ref[i], 1e-12));
    }
}

TEST_CASE("dense rejects shape mismatch") {
    Tensor<double> w({2, 3});
    Tensor<double> b({2});
    CHECK_THROWS_AS(soc::dense(std::vector<double>{1.0}, w, b, soc::Activation::identity),
                    soc::config_error);
}

TEST_CASE("cross_entropy examples") {
    CHECK(soc::cross_entropy(std::vector<double>{1.0, 0.0}, 0) == 0.0);
    CHECK_THAT(soc::cross_entropy(std::vector<double>{0.5, 0.5}, 1),
               Catch::Matchers::WithinAbs(std::log(2.0), 1e-12));
    CHECK_THAT(soc::cross_entropy(std::vector<double>{0.25, 0.75}, 0),
               Catch::Matchers::WithinAbs(std::log(4.0), 1e-12));
    // Clamp: a zero probability stays finite.
    const double clamped = soc::cross_entropy(std::vector<double>{0.0, 1.0}, 0);
    CHECK(std::isfinite(clamped));
    CHECK_THAT(clamped, Catch::Matchers::WithinAbs(-std::log(1e-12), 1e-9));
    CHECK_THROWS_AS(soc::cross_entropy(std::vector<double>{1.0}, 3), soc::input_error);
}

TEST_CASE("l2_loss examples") {
    CHECK(soc::l2_loss(0.4, 0.4) == 0.0);
    CHECK(soc::l2_loss(0.0, 1.0) == 1.0);
    CHECK(soc::l2_loss(-0.5, 1.0) == 2.25);
}

TEST_CASE("adam first step matches hand computation") {
    soc::Parameter<double> p({1});
    p.value[0] = 1.0;
    p.grad[0] = 0.5;
    soc::AdamState<double> state(p.value);
    soc::adam_update(p, state);
    // m = 0.1*0.5, v = 0.001*0.25; bias correction divides by the same
    // factors, so mhat = 0.5 and vhat = 0.25 exactly on step one.
    const double expected = 1.0 - 1e-3 * 0.5 / (std::sqrt(0.25) + 1e-8);
    CHECK_THAT(p.value[0], Catch::Matchers::WithinAbs(expected, 1e-12));
    CHECK(state.t == 1);
}

TEST_CASE("adam with zero gradient and fresh state is a fixed point") {
    soc::Parameter<double> p({3});
    p.value[0] = 0.25; p.value[1] = -7.5; p.value[2] = 1e-3;
    const std::vector<double> before(p.value.data(), p.value.data() + 3);
    soc::AdamState<double> state(p.value);
    soc::adam_update(p, state);
    for (std::size_t i = 0; i < 3; ++i) CHECK(p.value[i] == before[i]);
}

TEST_CASE("adam momentum keeps moving after the gradient vanishes") {
    soc::Parameter<double> p({1});
    p.value[0] = 2.0;
    soc::AdamState<double> state(p.value);

    // Independent recurrence of the update rule.
    double m = 0.0, v = 0.0, x = 2.0;
    const double lr = 1e-3, b1 = 0.9, b2 = 0.999, eps = 1e-8;
    const double grads[3] = {0.5, 0.0, 0.0};
    for (int t = 1; t <= 3; ++t) {
        const double g = grads[t - 1];
        p.grad[0] = g;
        soc::adam_update(p, state);

        m = b1 * m + (1 - b1) * g;
        v = b2 * v + (1 - b2) * g * g;
        const double mhat = m / (1 - std::pow(b1, t));
        const double vhat = v / (1 - std::pow(b2, t));
        const double x_before = x;
        x -= lr * mhat / (std::sqrt(vhat) + eps);
        CHECK_THAT(p.value[0], Catch::Matchers::WithinAbs(x, 1e-15));
        if (t > 1) CHECK(p.value[0] != x_before);  // still moving on zero grad
    }
}

TEST_CASE("adam rejects mismatched state") {
    soc::Parameter<double> p({2});
    soc::AdamState<double> state(soc::Tensor<double>({3}));
    CHECK_THROWS_AS(soc::adam_update(p, state), soc::config_error);
}

TEST_CASE("grad_check is exact for a quadratic") {
    soc::Parameter<double> p({1});
    p.value[0] = 3.0;
    auto loss = [&]() {
        p.zero_grad();
        p.grad[0] = 2.0 * p.value[0];
        return p.value[0] * p.value[0];
    };
    const auto report = soc::grad_check(loss, {{"w", &p.value, &p.grad, 0, 0}});
    CHECK(report.max_rel_err < 1e-10);
}

TEST_CASE("grad_check flags a corrupted backward pass") {
    soc::Parameter<double> p({1});
    p.value[0] = 3.0;
    auto loss = [&]() {
        p.zero_grad();
        p.grad[0] = 2.0 * p.value[0] * 1.05;  // deliberately 5% off
        return p.value[0] * p.value[0];
    };
    const auto report = soc::grad_check(loss, {{"w", &p.value, &p.grad, 0, 0}});
    CHECK(report.max_rel_err > 1e-2);
}

TEST_CASE("tensor finiteness guard") {
    Tensor<double> t({2});
    t[0] = 1.0;
    t[1] = std::numeric_limits<double>::infinity();
    CHECK_FALSE(t.all_finite());
    CHECK_THROWS_AS(t.require_finite("test tensor"), soc::numeric_error);
    t[1] = 0.0;
    CHECK(t.all_finite());
}

TEST_CASE("kernels are deterministic across repeated evaluation") {
    soc::Rng rng(53);
    Tensor<double> w({6, 5});
    for (std::size_t i = 0; i < w.size(); ++i) w[i] = rng.uniform(-1.0, 1.0);
    std::vector<double> x(5);
    for (double& v : x) v = rng.uniform(-1.0, 1.0);
    std::vector<double> y1(6), y2(6);
    soc::affine(w, x.data(), static_cast<const double*>(nullptr), y1.data());
    soc::affine(w, x.data(), static_cast<const double*>(nullptr), y2.data());
    CHECK(y1 == y2);
}
