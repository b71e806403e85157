#include <gtest/gtest.h>

#include <cmath>
#include <stdexcept>

#include "gg/optim.hpp"
#include "gg/tape.hpp"
#include "gg/tensor.hpp"

using gg::nn::Adam;
using gg::nn::Sgd;
using gg::nn::Tape;
using gg::nn::Tensor;

TEST(Sgd, SingleStepDefinition) {
    Tape t;
    auto p = t.param(Tensor({1}, {1.0}));
    auto half = t.scale(p, 0.5);
    auto zero = t.input(Tensor({1}, {0.0}));
    auto l = t.mse_loss(half, zero);  // l = 0.25 p^2, dl/dp = 0.5 p
    t.backward(l);
    // hand-set expectation for p=1, g=1: use a graph whose gradient is exactly 1
    Tape t2;
    auto q = t2.param(Tensor({1}, {1.0}));
    auto lin = t2.scale(q, 1.0);
    auto tgt = t2.input(Tensor({1}, {0.5}));
    auto l2 = t2.mse_loss(lin, tgt);  // dl/dq = 2(q-0.5) = 1 at q=1
    t2.backward(l2);
    ASSERT_DOUBLE_EQ(t2.grad(q).data[0], 1.0);
    Sgd opt(t2, 0.1);
    opt.step();
    EXPECT_DOUBLE_EQ(t2.value(q).data[0], 0.9);
}

TEST(Sgd, ZeroGradientIsFixedPoint) {
    Tape t;
    auto p = t.param(Tensor({3}, {1.0, 2.0, 3.0}));
    auto target = t.input(Tensor({3}, {1.0, 2.0, 3.0}));
    auto l = t.mse_loss(p, target);
    t.backward(l);
    Sgd opt(t, 0.5);
    opt.step();
    EXPECT_EQ(t.value(p).data, (std::vector<double>{1.0, 2.0, 3.0}));
}

TEST(Sgd, HundredStepsOnQuadraticDecayGeometrically) {
    // f(p) = p^2 via mse(p, 0); p' = p - 0.1 * 2p = 0.8 p
    Tape t;
    auto p = t.param(Tensor({1}, {1.0}));
    auto zero = t.input(Tensor({1}, {0.0}));
    auto l = t.mse_loss(p, zero);
    Sgd opt(t, 0.1);
    for (int i = 0; i < 100; ++i) {
        t.forward();
        t.backward(l);
        opt.step();
    }
    EXPECT_LT(std::abs(t.value(p).data[0]), 1e-8);
    EXPECT_NEAR(t.value(p).data[0], std::pow(0.8, 100), 1e-15);
}

TEST(Sgd, NanGradientRejectedNamingParameter) {
    Tape t;
    auto good = t.param(Tensor({1}, {1.0}));
    auto bad = t.param(Tensor({2}, {0.0, 0.0}));
    auto joined = t.concat(good, bad);
    auto target = t.input(Tensor({3}, {0.0, 0.0, 0.0}));
    auto l = t.mse_loss(joined, target);
    t.backward(l);
    // corrupt the second parameter's value so the next backward produces NaN
    t.value(bad).data[0] = std::nan("");
    t.forward();
    t.backward(l);
    Sgd opt(t, 0.1);
    try {
        opt.step();
        FAIL() << "expected NaN gradient rejection";
    } catch (const std::runtime_error& e) {
        EXPECT_NE(std::string(e.what()).find("parameter #1"), std::string::npos) << e.what();
    }
}

TEST(Adam, ConvergesOnQuadraticAndCountsSteps) {
    Tape t;
    auto p = t.param(Tensor({2}, {1.0, -2.0}));
    auto zero = t.input(Tensor({2}, {0.0, 0.0}));
    auto l = t.mse_loss(p, zero);
    Adam opt(t, 0.05);
    for (int i = 0; i < 400; ++i) {
        t.forward();
        t.backward(l);
        opt.step();
    }
    t.forward();
    EXPECT_LT(t.value(l).data[0], 1e-6);
}

TEST(Adam, FirstStepMatchesClosedForm) {
    // With bias correction, step 1 moves by lr * g/|g| (up to eps): here g = 2.
    Tape t;
    auto p = t.param(Tensor({1}, {1.0}));
    auto zero = t.input(Tensor({1}, {0.0}));
    auto l = t.mse_loss(p, zero);
    t.backward(l);
    Adam opt(t, 0.1);
    opt.step();
    EXPECT_NEAR(t.value(p).data[0], 1.0 - 0.1, 1e-7);
}
