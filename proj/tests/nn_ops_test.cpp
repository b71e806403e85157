#include <gtest/gtest.h>

#include <cstring>
#include <stdexcept>

#include "gg/rng.hpp"
#include "gg/tape.hpp"
#include "gg/tensor.hpp"

using gg::Rng;
using gg::nn::Tape;
using gg::nn::Tensor;

TEST(Tensor, CtorValidatesShapeAgainstData) {
    EXPECT_NO_THROW(Tensor({2, 3}, std::vector<double>(6, 0.0)));
    EXPECT_THROW(Tensor({2, 3}, std::vector<double>(5, 0.0)), std::invalid_argument);
    EXPECT_THROW(Tensor({0, 3}, std::vector<double>{}), std::invalid_argument);
}

TEST(Tensor, ZerosFullScalar) {
    Tensor z = Tensor::zeros({2, 2});
    for (double v : z.data) EXPECT_EQ(v, 0.0);
    Tensor f = Tensor::full({3}, 1.5);
    for (double v : f.data) EXPECT_EQ(v, 1.5);
    Tensor s = Tensor::scalar(4.0);
    EXPECT_EQ(s.numel(), 1u);
    EXPECT_EQ(s.data[0], 4.0);
}

TEST(Conv3d, AllZeroInputGivesAllZeroOutput) {
    Tape t;
    auto x = t.input(Tensor::zeros({1, 4, 4, 4}));
    Rng rng(1);
    auto k = t.param(Tensor::uniform({2, 1, 3, 3, 3}, 0.5, rng));
    auto b = t.param(Tensor::zeros({2}));
    auto y = t.conv3d(x, k, b, 1);
    for (double v : t.value(y).data) EXPECT_EQ(v, 0.0);
}

TEST(Conv3d, CenterOfOnesWindowIs27) {
    Tape t;
    auto x = t.input(Tensor::full({1, 3, 3, 3}, 1.0));
    auto k = t.param(Tensor::full({1, 1, 3, 3, 3}, 1.0));
    auto b = t.param(Tensor::zeros({1}));
    auto y = t.conv3d(x, k, b, 1);
    const Tensor& out = t.value(y);
    ASSERT_EQ(out.shape, (std::vector<int>{1, 3, 3, 3}));
    // center cell sees the full 3^3 window of ones
    EXPECT_DOUBLE_EQ(out.data[(1 * 3 + 1) * 3 + 1], 27.0);
    // corner cell sees a 2x2x2 corner of the window
    EXPECT_DOUBLE_EQ(out.data[0], 8.0);
}

TEST(Conv3d, IdentityKernelPassesImpulseThrough) {
    Tape t;
    Tensor imp = Tensor::zeros({1, 5, 5, 5});
    imp.data[(2 * 5 + 3) * 5 + 1] = 1.0;
    auto x = t.input(imp);
    Tensor id = Tensor::zeros({1, 1, 3, 3, 3});
    id.data[(1 * 3 + 1) * 3 + 1] = 1.0;  // 1 at kernel center
    auto k = t.param(std::move(id));
    auto b = t.param(Tensor::zeros({1}));
    auto y = t.conv3d(x, k, b, 1);
    EXPECT_EQ(t.value(y).data, t.value(x).data);
}

TEST(Conv3d, ChannelMismatchNamesBothShapes) {
    Tape t;
    auto x = t.input(Tensor::zeros({2, 4, 4, 4}));
    auto k = t.param(Tensor::zeros({1, 3, 3, 3, 3}));
    auto b = t.param(Tensor::zeros({1}));
    try {
        t.conv3d(x, k, b, 1);
        FAIL() << "expected channel-mismatch rejection";
    } catch (const std::invalid_argument& e) {
        const std::string msg = e.what();
        EXPECT_NE(msg.find("[1,3,3,3,3]"), std::string::npos) << msg;
        EXPECT_NE(msg.find("[2,4,4,4]"), std::string::npos) << msg;
    }
}

TEST(Conv3d, OutputShapeFormulaHoldsOverRandomShapes) {
    Rng rng(77);
    for (int trial = 0; trial < 50; ++trial) {
        const int d = static_cast<int>(rng.uniform_int(3, 9));
        const int h = static_cast<int>(rng.uniform_int(3, 9));
        const int w = static_cast<int>(rng.uniform_int(3, 9));
        const int ci = static_cast<int>(rng.uniform_int(1, 3));
        const int co = static_cast<int>(rng.uniform_int(1, 3));
        const int stride = static_cast<int>(rng.uniform_int(1, 3));
        Tape t;
        auto x = t.input(Tensor::zeros({ci, d, h, w}));
        auto k = t.param(Tensor::zeros({co, ci, 3, 3, 3}));
        auto b = t.param(Tensor::zeros({co}));
        auto y = t.conv3d(x, k, b, stride);
        auto expect = [stride](int n) { return (n + 2 - 3) / stride + 1; };
        EXPECT_EQ(t.value(y).shape, (std::vector<int>{co, expect(d), expect(h), expect(w)}));
    }
}

TEST(MaxPool3d, ConstantInputStaysConstant) {
    Tape t;
    auto x = t.input(Tensor::full({1, 4, 4, 4}, 3.25));
    auto y = t.max_pool3d(x);
    ASSERT_EQ(t.value(y).shape, (std::vector<int>{1, 2, 2, 2}));
    for (double v : t.value(y).data) EXPECT_DOUBLE_EQ(v, 3.25);
}

TEST(MaxPool3d, EnumeratedWindowPicksMax) {
    Tape t;
    std::vector<double> vals(8);
    for (int i = 0; i < 8; ++i) vals[i] = i;
    auto x = t.input(Tensor({1, 2, 2, 2}, vals));
    auto y = t.max_pool3d(x);
    ASSERT_EQ(t.value(y).numel(), 1u);
    EXPECT_DOUBLE_EQ(t.value(y).data[0], 7.0);
}

TEST(MaxPool3d, NonDivisibleDimsRejected) {
    Tape t;
    auto x = t.input(Tensor::zeros({1, 3, 4, 4}));
    EXPECT_THROW(t.max_pool3d(x), std::invalid_argument);
}

TEST(Relu, SignDefinition) {
    Tape t;
    auto x = t.input(Tensor({3}, {-1.0, 0.0, 2.0}));
    auto y = t.relu(x);
    EXPECT_EQ(t.value(y).data, (std::vector<double>{0.0, 0.0, 2.0}));
}

TEST(Relu, AllPositiveIsIdentity) {
    Tape t;
    auto x = t.input(Tensor({4}, {0.5, 1.0, 2.0, 3.0}));
    auto y = t.relu(x);
    EXPECT_EQ(t.value(y).data, t.value(x).data);
}

TEST(FullyConnected, IdentityWeightsPassThrough) {
    Tape t;
    auto x = t.input(Tensor({3}, {1.0, -2.0, 3.0}));
    Tensor w = Tensor::zeros({3, 3});
    for (int i = 0; i < 3; ++i) w.data[i * 3 + i] = 1.0;
    auto wid = t.param(std::move(w));
    auto b = t.param(Tensor::zeros({3}));
    auto y = t.fully_connected(x, wid, b);
    EXPECT_EQ(t.value(y).data, t.value(x).data);
}

TEST(FullyConnected, HandSum) {
    Tape t;
    auto x = t.input(Tensor({2}, {2.0, 3.0}));
    auto w = t.param(Tensor({1, 2}, {1.0, 1.0}));
    auto b = t.param(Tensor({1}, {0.0}));
    auto y = t.fully_connected(x, w, b);
    EXPECT_DOUBLE_EQ(t.value(y).data[0], 5.0);
}

TEST(FullyConnected, DimensionMismatchRejected) {
    Tape t;
    auto x = t.input(Tensor::zeros({3}));
    auto w = t.param(Tensor::zeros({2, 4}));
    auto b = t.param(Tensor::zeros({2}));
    EXPECT_THROW(t.fully_connected(x, w, b), std::invalid_argument);
}

TEST(MseLoss, IdenticalTensorsGiveZero) {
    Tape t;
    auto a = t.input(Tensor({3}, {1.0, 2.0, 3.0}));
    auto b = t.input(Tensor({3}, {1.0, 2.0, 3.0}));
    auto l = t.mse_loss(a, b);
    EXPECT_DOUBLE_EQ(t.value(l).data[0], 0.0);
}

TEST(MseLoss, HandComputation) {
    Tape t;
    auto a = t.input(Tensor({2}, {1.0, 1.0}));
    auto b = t.input(Tensor({2}, {0.0, 0.0}));
    auto l = t.mse_loss(a, b);
    EXPECT_DOUBLE_EQ(t.value(l).data[0], 1.0);
}

TEST(MseLoss, ShapeMismatchRejected) {
    Tape t;
    auto a = t.input(Tensor::zeros({2}));
    auto b = t.input(Tensor::zeros({3}));
    EXPECT_THROW(t.mse_loss(a, b), std::invalid_argument);
}

TEST(ConcatSlice, RoundTrip) {
    Tape t;
    auto a = t.input(Tensor({2}, {1.0, 2.0}));
    auto b = t.input(Tensor({3}, {3.0, 4.0, 5.0}));
    auto c = t.concat(a, b);
    EXPECT_EQ(t.value(c).data, (std::vector<double>{1.0, 2.0, 3.0, 4.0, 5.0}));
    auto s = t.slice(c, 2, 3);
    EXPECT_EQ(t.value(s).data, t.value(b).data);
    EXPECT_THROW(t.slice(c, 3, 3), std::invalid_argument);
    EXPECT_THROW(t.slice(c, -1, 2), std::invalid_argument);
}

TEST(Reshape, PreservesDataRejectsBadCount) {
    Tape t;
    auto x = t.input(Tensor({2, 3}, {1, 2, 3, 4, 5, 6}));
    auto y = t.reshape(x, {6});
    EXPECT_EQ(t.value(y).data, t.value(x).data);
    EXPECT_THROW(t.reshape(x, {7}), std::invalid_argument);
}

TEST(Upsample, NearestDoublesEveryAxis) {
    Tape t;
    auto x = t.input(Tensor({1, 1, 1, 2}, {3.0, 4.0}));
    auto y = t.upsample_nearest(x);
    ASSERT_EQ(t.value(y).shape, (std::vector<int>{1, 2, 2, 4}));
    const auto& d = t.value(y).data;
    for (int dz = 0; dz < 2; ++dz)
        for (int dy = 0; dy < 2; ++dy) {
            EXPECT_EQ(d[(dz * 2 + dy) * 4 + 0], 3.0);
            EXPECT_EQ(d[(dz * 2 + dy) * 4 + 1], 3.0);
            EXPECT_EQ(d[(dz * 2 + dy) * 4 + 2], 4.0);
            EXPECT_EQ(d[(dz * 2 + dy) * 4 + 3], 4.0);
        }
}

TEST(AddScale, Elementwise) {
    Tape t;
    auto a = t.input(Tensor({2}, {1.0, 2.0}));
    auto b = t.input(Tensor({2}, {10.0, 20.0}));
    auto s = t.add(a, b);
    EXPECT_EQ(t.value(s).data, (std::vector<double>{11.0, 22.0}));
    auto sc = t.scale(s, 0.5);
    EXPECT_EQ(t.value(sc).data, (std::vector<double>{5.5, 11.0}));
    auto c = t.input(Tensor::zeros({3}));
    EXPECT_THROW(t.add(a, c), std::invalid_argument);
}

TEST(Tape, ForwardReplayIsBitIdentical) {
    Rng rng(42);
    Tape t;
    auto x = t.input(Tensor::uniform({1, 4, 4, 4}, 1.0, rng));
    auto k = t.param(Tensor::uniform({3, 1, 3, 3, 3}, 0.7, rng));
    auto b = t.param(Tensor::uniform({3}, 0.1, rng));
    auto c = t.conv3d(x, k, b, 1);
    auto r = t.relu(c);
    auto p = t.max_pool3d(r);
    auto f = t.reshape(p, {3 * 2 * 2 * 2});
    auto w = t.param(Tensor::uniform({5, 24}, 0.3, rng));
    auto b2 = t.param(Tensor::uniform({5}, 0.1, rng));
    auto y = t.fully_connected(f, w, b2);
    const std::vector<double> first = t.value(y).data;
    t.forward();
    const std::vector<double>& second = t.value(y).data;
    ASSERT_EQ(first.size(), second.size());
    EXPECT_EQ(0, std::memcmp(first.data(), second.data(), first.size() * sizeof(double)));
}

TEST(Tape, SetValueValidatesShape) {
    Tape t;
    auto x = t.input(Tensor::zeros({2, 2}));
    EXPECT_NO_THROW(t.set_value(x, Tensor({2, 2}, {1, 2, 3, 4})));
    EXPECT_THROW(t.set_value(x, Tensor::zeros({4})), std::invalid_argument);
}

TEST(Tape, BackwardRequiresScalarLoss) {
    Tape t;
    auto x = t.param(Tensor::zeros({3}));
    auto y = t.relu(x);
    EXPECT_THROW(t.backward(y), std::invalid_argument);
}
