#include <array>
#include <cmath>
#include <cstdint>
#include <set>

#include <gtest/gtest.h>

#include "qkd3/rng.hpp"

using qkd3::RngStream;
using qkd3::detail::philox4x32_10;

// Known-answer vectors published with the Random123 reference implementation.
TEST(Philox, KnownAnswerZero) {
    const auto out = philox4x32_10({0, 0, 0, 0}, {0, 0});
    EXPECT_EQ(out, (std::array<std::uint32_t, 4>{0x6627e8d5u, 0xe169c58du, 0xbc57ac4cu, 0x9b00dbd8u}));
}

TEST(Philox, KnownAnswerOnes) {
    const std::uint32_t m = 0xffffffffu;
    const auto out = philox4x32_10({m, m, m, m}, {m, m});
    EXPECT_EQ(out, (std::array<std::uint32_t, 4>{0x408f276du, 0x41c83b0eu, 0xa20bc7c6u, 0x6d5451fdu}));
}

TEST(Philox, KnownAnswerPi) {
    const auto out = philox4x32_10({0x243f6a88u, 0x85a308d3u, 0x13198a2eu, 0x03707344u}, {0xa4093822u, 0x299f31d0u});
    EXPECT_EQ(out, (std::array<std::uint32_t, 4>{0xd16cfe09u, 0x94fdccebu, 0x5001e420u, 0x24126ea1u}));
}

TEST(RngStream, SameSeedAndStreamRepeat) {
    RngStream a{42, 7};
    RngStream b{42, 7};
    for (int i = 0; i < 1000; ++i) {
        ASSERT_EQ(a.next_u64(), b.next_u64());
    }
}

TEST(RngStream, StreamsAndSeedsDiffer) {
    std::set<std::uint64_t> firsts;
    for (std::uint64_t s = 0; s < 4; ++s) {
        for (std::uint64_t id = 0; id < 64; ++id) {
            firsts.insert(RngStream{s, id}.next_u64());
        }
    }
    EXPECT_EQ(firsts.size(), 4u * 64u);
}

TEST(RngStream, SubstreamMatchesDirectConstruction) {
    RngStream parent{9, 1};
    parent.next_u64();
    RngStream child = parent.substream(5);
    RngStream direct{9, 5};
    EXPECT_EQ(child.next_u64(), direct.next_u64());
}

TEST(RngStream, UniformMoments) {
    RngStream rng{1, 0};
    const int n = 200000;
    double sum = 0.0;
    double sum2 = 0.0;
    for (int i = 0; i < n; ++i) {
        const double u = rng.uniform();
        ASSERT_GE(u, 0.0);
        ASSERT_LT(u, 1.0);
        sum += u;
        sum2 += u * u;
    }
    const double mean = sum / n;
    const double var = sum2 / n - mean * mean;
    EXPECT_NEAR(mean, 0.5, 3.0 * std::sqrt(1.0 / 12.0 / n) * 1.5);
    EXPECT_NEAR(var, 1.0 / 12.0, 0.002);
}

TEST(RngStream, NormalMoments) {
    RngStream rng{2, 0};
    const int n = 200000;
    double sum = 0.0;
    double sum2 = 0.0;
    for (int i = 0; i < n; ++i) {
        const double z = rng.normal();
        ASSERT_TRUE(std::isfinite(z));
        sum += z;
        sum2 += z * z;
    }
    EXPECT_NEAR(sum / n, 0.0, 4.0 / std::sqrt(n));
    EXPECT_NEAR(sum2 / n, 1.0, 0.02);
}

TEST(RngStream, BernoulliRate) {
    RngStream rng{3, 0};
    const int n = 100000;
    int hits = 0;
    for (int i = 0; i < n; ++i) {
        hits += rng.bernoulli(0.3) ? 1 : 0;
    }
    EXPECT_NEAR(hits / double(n), 0.3, 3.0 * std::sqrt(0.21 / n) * 1.5);
    RngStream r2{3, 1};
    EXPECT_FALSE(r2.bernoulli(0.0));
    EXPECT_TRUE(r2.bernoulli(1.0));
}
