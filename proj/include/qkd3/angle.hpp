#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <stdexcept>

namespace qkd3 {

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;
inline constexpr double kHalfPi = 0.5 * std::numbers::pi;
inline constexpr double kQuarterPi = 0.25 * std::numbers::pi;

/// Reduce a finite angle to [0, 2π). Throws on NaN or infinity.
inline double wrap_radians(double x) {
    if (!std::isfinite(x)) {
        throw std::invalid_argument("wrap_angle: non-finite angle");
    }
    double r = std::fmod(x, kTwoPi);
    if (r < 0.0) {
        r += kTwoPi;
    }
    // fmod of a tiny negative value can round back up to exactly 2π.
    if (r >= kTwoPi) {
        r = 0.0;
    }
    return r;
}

/**
 * Linear-polarization direction on the shared great circle, in [0, 2π).
 *
 * Stored as a 64-bit fraction of a full turn, so addition and subtraction
 * wrap exactly: rotations commute bit-for-bit and undoing a rotation
 * restores the original angle.
 */
class PolarizationAngle {
public:
    constexpr PolarizationAngle() = default;
    explicit PolarizationAngle(double radians) : turns_(to_turns(wrap_radians(radians))) {}

    [[nodiscard]] static constexpr PolarizationAngle from_turns(std::uint64_t turns) noexcept {
        PolarizationAngle a;
        a.turns_ = turns;
        return a;
    }

    [[nodiscard]] constexpr std::uint64_t turns() const noexcept { return turns_; }

    [[nodiscard]] double radians() const noexcept {
        const double r = static_cast<double>(turns_) * 0x1.0p-64 * kTwoPi;
        // Conversion can round the last few ulps of a turn up to 2π.
        return r < kTwoPi ? r : std::nextafter(kTwoPi, 0.0);
    }

    /// Index 0..3 of the quadrant [k·π/2, (k+1)·π/2) containing the angle.
    [[nodiscard]] constexpr int quadrant() const noexcept { return static_cast<int>(turns_ >> 62); }

    friend constexpr PolarizationAngle operator+(PolarizationAngle a, PolarizationAngle b) noexcept {
        return from_turns(a.turns_ + b.turns_);
    }
    friend constexpr PolarizationAngle operator-(PolarizationAngle a, PolarizationAngle b) noexcept {
        return from_turns(a.turns_ - b.turns_);
    }
    constexpr PolarizationAngle operator-() const noexcept { return from_turns(std::uint64_t{0} - turns_); }

    friend constexpr bool operator==(PolarizationAngle, PolarizationAngle) = default;

private:
    static std::uint64_t to_turns(double wrapped) noexcept {
        const double scaled = std::ldexp(wrapped / kTwoPi, 64);
        return scaled >= 0x1.0p64 ? 0 : static_cast<std::uint64_t>(scaled);
    }

    std::uint64_t turns_ = 0;
};

inline PolarizationAngle wrap_angle(double x) { return PolarizationAngle{x}; }

/// True when an estimate off by `delta` lands on the wrong bit of a binary
/// alphabet separated by π/2. Exact ties (cos 2Δ == 0) count as correct.
inline bool bit_error_condition(double delta) {
    if (!std::isfinite(delta)) {
        throw std::invalid_argument("bit_error_condition: non-finite angle");
    }
    return std::cos(2.0 * delta) < 0.0;
}

inline bool bit_error_condition(PolarizationAngle delta) { return bit_error_condition(delta.radians()); }

/// Polarization angle encoding a key bit: 0 → horizontal, 1 → vertical.
inline constexpr PolarizationAngle bit_angle(int bit) {
    return PolarizationAngle::from_turns(bit ? std::uint64_t{1} << 62 : 0);
}

}  // namespace qkd3
