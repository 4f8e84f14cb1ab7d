#include <gtest/gtest.h>

#include <array>
#include <cmath>
#include <vector>

#include "actsugg/rng.hpp"

using namespace actsugg;

TEST(Rng, SameSeedSameSequence) {
    Rng a(42), b(42);
    for (int i = 0; i < 1000; ++i) EXPECT_EQ(a.uniform(), b.uniform());
}

TEST(Rng, StreamsDependOnlyOnSeedIndexRole) {
    Rng a = Rng::stream(7, 3, StreamRole::agent);
    Rng b = Rng::stream(7, 3, StreamRole::agent);
    Rng c = Rng::stream(7, 3, StreamRole::environment);
    Rng d = Rng::stream(7, 4, StreamRole::agent);
    const double xa = a.uniform();
    EXPECT_EQ(xa, b.uniform());
    EXPECT_NE(xa, c.uniform());
    EXPECT_NE(xa, d.uniform());
}

TEST(Rng, UniformInUnitInterval) {
    Rng r(1);
    double sum = 0.0;
    for (int i = 0; i < 100000; ++i) {
        const double u = r.uniform();
        ASSERT_GE(u, 0.0);
        ASSERT_LT(u, 1.0);
        sum += u;
    }
    EXPECT_NEAR(sum / 100000, 0.5, 0.005);
}

TEST(Rng, BelowIsUniformChiSquare) {
    Rng r(9);
    constexpr int n = 7, draws = 70000;
    std::array<int, n> counts{};
    for (int i = 0; i < draws; ++i) ++counts[r.below(n)];
    double chi2 = 0.0;
    const double expected = static_cast<double>(draws) / n;
    for (int c : counts) chi2 += (c - expected) * (c - expected) / expected;
    // 6 degrees of freedom; 99.9th percentile is about 22.5.
    EXPECT_LT(chi2, 22.5);
}

TEST(Rng, BelowZeroThrows) {
    Rng r(1);
    EXPECT_THROW(r.below(0), ArgumentError);
}

TEST(Rng, CategoricalFollowsWeights) {
    Rng r(3);
    const std::vector<double> w{0.0, 3.0, 1.0, 0.0};
    std::array<int, 4> counts{};
    for (int i = 0; i < 40000; ++i) ++counts[r.categorical(w)];
    EXPECT_EQ(counts[0], 0);
    EXPECT_EQ(counts[3], 0);
    EXPECT_NEAR(counts[1] / 40000.0, 0.75, 0.01);
}

TEST(Rng, CategoricalZeroTotalThrows) {
    Rng r(3);
    const std::vector<double> w{0.0, 0.0};
    EXPECT_THROW(r.categorical(w), ArgumentError);
}
