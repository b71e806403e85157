#include <gtest/gtest.h>

#include <cmath>
#include <set>

#include "gg/rng.hpp"

using gg::Rng;
using gg::derive_seed;

TEST(Rng, DerivedSeedsAreStableAndDistinct) {
    const auto a = derive_seed(42, "targets", 0);
    EXPECT_EQ(a, derive_seed(42, "targets", 0));
    std::set<std::uint64_t> seen;
    for (int i = 0; i < 100; ++i) seen.insert(derive_seed(42, "targets", i));
    seen.insert(derive_seed(42, "grippers", 0));
    seen.insert(derive_seed(43, "targets", 0));
    EXPECT_EQ(seen.size(), 102u);
}

TEST(Rng, SameSeedSameStream) {
    Rng a(7), b(7);
    for (int i = 0; i < 1000; ++i) EXPECT_EQ(a.uniform(), b.uniform());
}

TEST(Rng, UniformStaysInRange) {
    Rng r(3);
    for (int i = 0; i < 10000; ++i) {
        const double v = r.uniform();
        EXPECT_GE(v, 0.0);
        EXPECT_LT(v, 1.0);
    }
    for (int i = 0; i < 1000; ++i) {
        const double v = r.uniform(-2.0, 5.0);
        EXPECT_GE(v, -2.0);
        EXPECT_LT(v, 5.0);
    }
}

TEST(Rng, UniformIntCoversInclusiveRange) {
    Rng r(5);
    std::set<long long> seen;
    for (int i = 0; i < 2000; ++i) {
        const auto v = r.uniform_int(2, 6);
        EXPECT_GE(v, 2);
        EXPECT_LE(v, 6);
        seen.insert(v);
    }
    EXPECT_EQ(seen.size(), 5u);
}

TEST(Rng, NormalHasSaneMoments) {
    Rng r(11);
    const int n = 200000;
    double sum = 0.0, sumsq = 0.0;
    for (int i = 0; i < n; ++i) {
        const double v = r.normal();
        sum += v;
        sumsq += v * v;
    }
    const double mean = sum / n;
    const double var = sumsq / n - mean * mean;
    EXPECT_NEAR(mean, 0.0, 0.01);
    EXPECT_NEAR(var, 1.0, 0.02);
}
