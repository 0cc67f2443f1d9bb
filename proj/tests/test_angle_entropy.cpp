#include <cmath>
#include <limits>
#include <stdexcept>

#include <gtest/gtest.h>

#include "qkd3/angle.hpp"
#include "qkd3/entropy.hpp"
#include "qkd3/photon.hpp"
#include "qkd3/rng.hpp"

using namespace qkd3;

TEST(Angle, WrapRadians) {
    EXPECT_DOUBLE_EQ(wrap_radians(0.0), 0.0);
    EXPECT_NEAR(wrap_radians(-0.5), kTwoPi - 0.5, 1e-15);
    EXPECT_NEAR(wrap_radians(7.0), 7.0 - kTwoPi, 1e-15);
    EXPECT_LT(wrap_radians(kTwoPi), kTwoPi);
    EXPECT_GE(wrap_radians(-1e-300), 0.0);
    EXPECT_THROW(wrap_radians(std::numeric_limits<double>::infinity()), std::invalid_argument);
    EXPECT_THROW(wrap_radians(std::nan("")), std::invalid_argument);
}

TEST(Angle, RadiansAlwaysInRange) {
    RngStream rng{11, 0};
    for (int i = 0; i < 10000; ++i) {
        const auto a = uniform_angle(rng);
        ASSERT_GE(a.radians(), 0.0);
        ASSERT_LT(a.radians(), kTwoPi);
    }
    EXPECT_LT(PolarizationAngle::from_turns(~std::uint64_t{0}).radians(), kTwoPi);
}

TEST(Angle, LockUnlockRestoresExactly) {
    RngStream rng{12, 0};
    for (int i = 0; i < 10000; ++i) {
        const auto x = uniform_angle(rng);
        const auto a = uniform_angle(rng);
        const auto b = uniform_angle(rng);
        ASSERT_EQ(x + a - a, x);
        ASSERT_EQ(x + a + b - a - b, x);
        ASSERT_EQ(x + a + b - a, x + b);
        ASSERT_EQ(a + b, b + a);
        ASSERT_EQ(-(-a), a);
    }
}

TEST(Angle, Quadrants) {
    EXPECT_EQ(wrap_angle(0.1).quadrant(), 0);
    EXPECT_EQ(wrap_angle(kHalfPi + 0.1).quadrant(), 1);
    EXPECT_EQ(wrap_angle(kPi + 0.1).quadrant(), 2);
    EXPECT_EQ(wrap_angle(kTwoPi - 0.1).quadrant(), 3);
}

TEST(Angle, BitAngles) {
    EXPECT_DOUBLE_EQ(bit_angle(0).radians(), 0.0);
    EXPECT_DOUBLE_EQ(bit_angle(1).radians(), kHalfPi);
}

TEST(Angle, BitErrorCondition) {
    EXPECT_FALSE(bit_error_condition(0.0));
    EXPECT_FALSE(bit_error_condition(0.7));
    EXPECT_TRUE(bit_error_condition(0.8));
    EXPECT_TRUE(bit_error_condition(kHalfPi));
    EXPECT_FALSE(bit_error_condition(kPi));
    EXPECT_FALSE(bit_error_condition(-0.7));
    EXPECT_TRUE(bit_error_condition(-0.8));
    // π-periodic and even.
    for (double d = -7.0; d < 7.0; d += 0.0137) {
        ASSERT_EQ(bit_error_condition(d), bit_error_condition(d + kPi));
        ASSERT_EQ(bit_error_condition(d), bit_error_condition(-d));
    }
    EXPECT_THROW(bit_error_condition(std::nan("")), std::invalid_argument);
}

TEST(Entropy, KnownValues) {
    EXPECT_EQ(binary_entropy(0.0), 0.0);
    EXPECT_EQ(binary_entropy(1.0), 0.0);
    EXPECT_DOUBLE_EQ(binary_entropy(0.5), 1.0);
    EXPECT_NEAR(binary_entropy(0.11), 0.499915958164528, 1e-14);
    EXPECT_NEAR(binary_entropy(0.25), 0.811278124459133, 1e-14);
    EXPECT_THROW(binary_entropy(-0.01), std::domain_error);
    EXPECT_THROW(binary_entropy(1.01), std::domain_error);
}

TEST(Entropy, InverseRoundTrip) {
    for (double p = 0.0; p <= 0.5; p += 0.01) {
        ASSERT_NEAR(inverse_binary_entropy(binary_entropy(p)), p, 1e-12) << p;
    }
    EXPECT_EQ(inverse_binary_entropy(0.0), 0.0);
    EXPECT_EQ(inverse_binary_entropy(1.0), 0.5);
    EXPECT_THROW(inverse_binary_entropy(1.5), std::domain_error);
}
