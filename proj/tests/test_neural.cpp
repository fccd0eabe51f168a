#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "codwoe/error.hpp"
#include "codwoe/layers.hpp"
#include "codwoe/optim.hpp"
#include "codwoe/tensor.hpp"
#include "gradcheck.hpp"

using namespace codwoe;

namespace {

Tensor random_tensor(SplitMix64& rng, size_t r, size_t c, bool rg = true) {
    Tensor t = make_tensor(r, c, rg);
    for (double& x : t->value) x = rng.normal();
    return t;
}

std::vector<double> random_target(SplitMix64& rng, size_t n) {
    std::vector<double> t(n);
    for (double& x : t) x = rng.normal();
    return t;
}

} // namespace

TEST_CASE("gradcheck: linear") {
    SplitMix64 rng(1);
    Tensor x = random_tensor(rng, 3, 4);
    LinearParams lin = make_linear(4, 5, true, rng);
    auto target = random_target(rng, 15);
    auto loss = [&] { return mse_loss(linear(lin, x), target); };
    CHECK(oracles::gradcheck(loss, {x, lin.weight, lin.bias}) <= 1e-4);
}

TEST_CASE("gradcheck: token embedding") {
    SplitMix64 rng(2);
    Tensor table = random_tensor(rng, 7, 4);
    std::vector<int> ids{1, 5, 1, 0, 6};
    auto target = random_target(rng, 20);
    auto loss = [&] { return mse_loss(embedding_lookup(table, ids), target); };
    CHECK(oracles::gradcheck(loss, {table}) <= 1e-4);
}

TEST_CASE("gradcheck: layer norm") {
    SplitMix64 rng(3);
    Tensor x = random_tensor(rng, 4, 6);
    LayerNormParams ln = make_layer_norm(6);
    for (double& g : ln.gamma->value) g = 1.0 + 0.3 * rng.normal();
    for (double& b : ln.beta->value) b = 0.3 * rng.normal();
    auto target = random_target(rng, 24);
    auto loss = [&] { return mse_loss(layer_norm(x, ln.gamma, ln.beta), target); };
    CHECK(oracles::gradcheck(loss, {x, ln.gamma, ln.beta}) <= 1e-4);
}

TEST_CASE("gradcheck: multi-head attention, plain and causal") {
    SplitMix64 rng(4);
    for (bool causal : {false, true}) {
        CAPTURE(causal);
        Tensor x = random_tensor(rng, 5, 8);
        LinearParams wq = make_linear(8, 8, true, rng);
        LinearParams wk = make_linear(8, 8, true, rng);
        LinearParams wv = make_linear(8, 8, true, rng);
        LinearParams wo = make_linear(8, 8, true, rng);
        auto target = random_target(rng, 40);
        auto loss = [&] {
            return mse_loss(multi_head_attention(x, wq, wk, wv, wo, 2, causal), target);
        };
        CHECK(oracles::gradcheck(
                  loss, {x, wq.weight, wk.weight, wv.weight, wo.weight, wo.bias}) <= 1e-4);
    }
}

TEST_CASE("gradcheck: full encoder layer") {
    SplitMix64 rng(5);
    Tensor x = random_tensor(rng, 4, 8);
    EncoderLayerParams layer = make_encoder_layer(8, 2, 16, rng);
    auto target = random_target(rng, 32);
    auto loss = [&] { return mse_loss(encoder_layer(layer, x, true, 0.0, nullptr), target); };
    NamedParams named;
    collect_params(named, "layer", layer);
    std::vector<Tensor> params{x};
    for (auto& [n, t] : named) params.push_back(t);
    CHECK(oracles::gradcheck(loss, params) <= 1e-4);
}

TEST_CASE("gradcheck: position-wise feed-forward path") {
    SplitMix64 rng(6);
    Tensor x = random_tensor(rng, 3, 6);
    LinearParams ff1 = make_linear(6, 12, true, rng);
    LinearParams ff2 = make_linear(12, 6, true, rng);
    auto target = random_target(rng, 18);
    auto loss = [&] { return mse_loss(linear(ff2, relu(linear(ff1, x))), target); };
    CHECK(oracles::gradcheck(loss, {x, ff1.weight, ff1.bias, ff2.weight, ff2.bias}) <= 1e-4);
}

TEST_CASE("gradcheck: LSTM cell") {
    SplitMix64 rng(7);
    Tensor x = random_tensor(rng, 2, 5);
    Tensor h = random_tensor(rng, 2, 4);
    Tensor c = random_tensor(rng, 2, 4);
    LstmParams lstm = make_lstm(5, 4, rng);
    auto target = random_target(rng, 8);
    auto loss = [&] {
        auto out = lstm_cell(lstm, x, {h, c});
        return mse_loss(mul(out.h, tanh_op(out.c)), target);
    };
    CHECK(oracles::gradcheck(loss, {x, h, c, lstm.w_ih, lstm.w_hh, lstm.bias}) <= 1e-4);
}

TEST_CASE("gradcheck: softmax cross entropy with label smoothing") {
    SplitMix64 rng(8);
    Tensor logits = random_tensor(rng, 4, 6);
    std::vector<int> targets{2, 0, 5, 3};
    for (double smoothing : {0.0, 0.1}) {
        CAPTURE(smoothing);
        auto loss = [&] { return cross_entropy(logits, targets, smoothing); };
        CHECK(oracles::gradcheck(loss, {logits}) <= 1e-4);
    }
}

TEST_CASE("gradcheck: dropout with a pinned mask") {
    SplitMix64 outer(9);
    Tensor x = random_tensor(outer, 4, 5);
    auto target = random_target(outer, 20);
    auto loss = [&] {
        SplitMix64 rng(99); // same mask on every rebuild
        return mse_loss(dropout(x, 0.4, rng), target);
    };
    CHECK(oracles::gradcheck(loss, {x}) <= 1e-4);
}

TEST_CASE("gradcheck: softmax rows, sum_rows, concat and slicing") {
    SplitMix64 rng(10);
    Tensor x = random_tensor(rng, 3, 6);
    Tensor y = random_tensor(rng, 3, 4);
    auto target = random_target(rng, 8);
    auto loss = [&] {
        Tensor s = softmax_rows(slice_cols(x, 1, 5));
        Tensor joined = concat_cols({s, sigmoid(y)});
        Tensor row = sum_rows(joined);
        return mse_loss(scale(tanh_op(row), 0.7), target);
    };
    CHECK(oracles::gradcheck(loss, {x, y}) <= 1e-4);
}

TEST_CASE("attention weights: every row sums to 1") {
    SplitMix64 rng(11);
    Tensor x = random_tensor(rng, 6, 8, false);
    LinearParams wq = make_linear(8, 8, true, rng);
    LinearParams wk = make_linear(8, 8, true, rng);
    LinearParams wv = make_linear(8, 8, true, rng);
    LinearParams wo = make_linear(8, 8, true, rng);
    for (bool causal : {false, true}) {
        AttentionTrace trace;
        multi_head_attention(x, wq, wk, wv, wo, 4, causal, &trace);
        REQUIRE(trace.head_weights.size() == 4);
        for (const auto& w : trace.head_weights)
            for (size_t r = 0; r < w->rows(); ++r) {
                double s = 0.0;
                for (size_t c = 0; c < w->cols(); ++c) s += w->at(r, c);
                CHECK(s == doctest::Approx(1.0).epsilon(1e-9));
            }
    }
}

TEST_CASE("causal mask: future positions cannot leak, to the last bit") {
    SplitMix64 rng(12);
    EncoderLayerParams layer = make_encoder_layer(8, 2, 16, rng);
    Tensor x1 = random_tensor(rng, 5, 8, false);
    Tensor x2 = make_tensor(5, 8, x1->value, false);
    // Perturb everything strictly after position 2.
    for (size_t r = 3; r < 5; ++r)
        for (size_t c = 0; c < 8; ++c) x2->at(r, c) += rng.normal();
    Tensor y1 = encoder_layer(layer, x1, true, 0.0, nullptr);
    Tensor y2 = encoder_layer(layer, x2, true, 0.0, nullptr);
    for (size_t r = 0; r <= 2; ++r)
        for (size_t c = 0; c < 8; ++c) CHECK(y1->at(r, c) == y2->at(r, c));
}

TEST_CASE("layer norm output is standardized before the affine map") {
    SplitMix64 rng(13);
    Tensor x = random_tensor(rng, 7, 16, false);
    LayerNormParams ln = make_layer_norm(16);
    Tensor y = layer_norm(x, ln.gamma, ln.beta);
    for (size_t r = 0; r < 7; ++r) {
        double mean = 0.0;
        for (size_t c = 0; c < 16; ++c) mean += y->at(r, c);
        mean /= 16.0;
        double var = 0.0;
        for (size_t c = 0; c < 16; ++c) var += (y->at(r, c) - mean) * (y->at(r, c) - mean);
        var /= 16.0;
        CHECK(std::fabs(mean) <= 1e-6);
        CHECK(std::fabs(var - 1.0) <= 1e-6);
    }
}

TEST_CASE("cross entropy of uniform logits is ln V") {
    Tensor logits = make_tensor(3, 10);
    std::vector<int> targets{1, 4, 9};
    for (double smoothing : {0.0, 0.1}) {
        Tensor loss = cross_entropy(logits, targets, smoothing);
        CHECK(loss->value[0] == doctest::Approx(std::log(10.0)).epsilon(1e-12));
    }
}

TEST_CASE("shape mismatches report both shapes") {
    Tensor a = make_tensor(2, 3);
    Tensor b = make_tensor(4, 5);
    CHECK_THROWS_WITH_AS(matmul(a, b), doctest::Contains("[2,3]"), Error);
    CHECK_THROWS_WITH_AS(add(a, b), doctest::Contains("[4,5]"), Error);
}

TEST_CASE("adamw: zero gradient leaves parameters unchanged") {
    Tensor p = make_tensor(1, 3, {1.0, -2.0, 3.0}, true);
    AdamW opt({p}, OptimizerConfig{0.1, 0.0, 0.9, 0.999, 1e-8});
    opt.zero_grad();
    opt.step(0.1);
    CHECK(p->value == std::vector<double>{1.0, -2.0, 3.0});
}

TEST_CASE("adamw: single step on a scalar with beta1 = beta2 = 0") {
    Tensor p = make_tensor(1, 1, {1.0}, true);
    AdamW opt({p}, OptimizerConfig{0.1, 0.0, 0.0, 0.0, 1e-8});
    p->grad = {1.0};
    opt.step(0.1);
    CHECK(p->value[0] == doctest::Approx(0.9).epsilon(1e-7));
}

TEST_CASE("adamw: decoupled weight decay shrinks without gradients") {
    Tensor p = make_tensor(1, 1, {2.0}, true);
    AdamW opt({p}, OptimizerConfig{0.1, 0.5, 0.9, 0.999, 1e-8});
    p->grad = {0.0};
    opt.step(0.1);
    CHECK(p->value[0] == doctest::Approx(2.0 - 0.1 * 0.5 * 2.0).epsilon(1e-12));
}

TEST_CASE("adamw on a quadratic bowl decreases monotonically") {
    // Step size keeps both coordinates on their side of the optimum for all
    // 200 steps, where Adam's unit-scaled updates descend strictly.
    Tensor p = make_tensor(1, 2, {3.0, -2.0}, true);
    AdamW opt({p}, OptimizerConfig{0.005, 0.0, 0.9, 0.999, 1e-8});
    double prev = std::numeric_limits<double>::infinity();
    for (int step = 1; step <= 200; ++step) {
        double loss = p->value[0] * p->value[0] + p->value[1] * p->value[1];
        opt.zero_grad();
        p->grad = {2.0 * p->value[0], 2.0 * p->value[1]};
        opt.step(0.005);
        CHECK(loss <= prev + 1e-12);
        prev = loss;
    }
    CHECK(prev < 6.0); // down from 13
}

TEST_CASE("lr schedule anchors") {
    LrSchedule s{100, 1100, 2e-3};
    CHECK(lr_at(s, 0) == 0.0);
    CHECK(lr_at(s, 50) == doctest::Approx(1e-3).epsilon(1e-15));
    CHECK(lr_at(s, 100) == 2e-3);                    // warmup end: exactly peak
    CHECK(lr_at(s, 100 + 500) == 0.5 * 2e-3);        // midpoint: exactly half
    CHECK(lr_at(s, 1100) == 0.0);                    // final step: exactly zero
    CHECK_THROWS_AS(lr_at(s, 1101), Error);
    LrSchedule no_warmup{0, 10, 1.0};
    CHECK(lr_at(no_warmup, 0) == 1.0);
    CHECK(lr_at(no_warmup, 10) == 0.0);
}

TEST_CASE("early stopping follows the 0.1%/5-epoch rule on scripted curves") {
    SUBCASE("stops after five non-improving epochs") {
        EarlyStopper stop(5, 0.001);
        CHECK(!stop.update(1.0));
        CHECK(!stop.update(0.9));     // improves
        CHECK(!stop.update(0.8999));  // < 0.1%: strike 1
        CHECK(!stop.update(0.89985)); // strike 2
        CHECK(!stop.update(0.9002));  // strike 3
        CHECK(!stop.update(0.9));     // strike 4
        CHECK(stop.update(0.91));     // strike 5: stop
        CHECK(stop.best() == doctest::Approx(0.89985).epsilon(1e-12)); // running minimum
    }
    SUBCASE("a qualifying improvement resets the counter") {
        EarlyStopper stop(5, 0.001);
        CHECK(!stop.update(1.0));
        CHECK(!stop.update(0.9999));
        CHECK(!stop.update(0.9999));
        CHECK(!stop.update(0.9999));
        CHECK(!stop.update(0.9999));
        CHECK(!stop.update(0.5)); // big improvement resets
        CHECK(!stop.update(0.5));
        CHECK(!stop.update(0.5));
        CHECK(!stop.update(0.5));
        CHECK(!stop.update(0.5));
        CHECK(stop.update(0.5)); // five strikes against best = 0.5
    }
    SUBCASE("exact threshold counts as improvement") {
        EarlyStopper stop(5, 0.001);
        stop.update(1000.0);
        CHECK(!stop.update(999.0)); // exactly 0.1%
        CHECK(stop.epochs_without_improvement() == 0);
    }
}
