/**
 * Photon statistics of phase-randomized coherent pulses seen through a
 * two-port (horizontal / vertical) polarization analyzer, and the
 * quadrant-corrected angle estimator built on top of them.
 */
#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>

#include "qkd3/angle.hpp"
#include "qkd3/rng.hpp"

namespace qkd3 {

/// Photon numbers registered at the two analyzer ports.
struct PhotonCounts {
    std::uint32_t n_h = 0;
    std::uint32_t n_v = 0;

    [[nodiscard]] constexpr std::uint32_t total() const noexcept { return n_h + n_v; }
    /// A vacuum pair carries no angle information.
    [[nodiscard]] constexpr bool conclusive() const noexcept { return total() >= 1; }

    friend constexpr bool operator==(PhotonCounts, PhotonCounts) = default;
};

namespace detail {

// ln k! tabulated for small k, Stirling series above.
inline double log_factorial(std::uint64_t k) {
    static const auto table = [] {
        std::array<double, 64> t{};
        for (std::size_t i = 1; i < t.size(); ++i) {
            t[i] = t[i - 1] + std::log(static_cast<double>(i));
        }
        return t;
    }();
    if (k < table.size()) {
        return table[k];
    }
    const double n = static_cast<double>(k) + 1.0;
    const double inv = 1.0 / n;
    const double inv2 = inv * inv;
    return (n - 0.5) * std::log(n) - n + 0.5 * std::log(2.0 * kPi) +
           inv * (1.0 / 12.0 - inv2 * (1.0 / 360.0 - inv2 * (1.0 / 1260.0 - inv2 / 1680.0)));
}

// Sequential-search inversion; exact for the small means used by the protocol.
inline std::uint32_t poisson_inversion(double mean, RngStream& rng) {
    const double u = rng.uniform();
    double p = std::exp(-mean);
    double cdf = p;
    std::uint32_t k = 0;
    while (u > cdf && k < 1000) {
        ++k;
        p *= mean / k;
        cdf += p;
    }
    return k;
}

// Transformed rejection with squeeze (Hörmann's PTRD), valid for mean >= 10.
inline std::uint32_t poisson_ptrd(double mean, RngStream& rng) {
    const double smu = std::sqrt(mean);
    const double b = 0.931 + 2.53 * smu;
    const double a = -0.059 + 0.02483 * b;
    const double inv_alpha = 1.1239 + 1.1328 / (b - 3.4);
    const double vr = 0.9277 - 3.6224 / (b - 2.0);
    const double log_mean = std::log(mean);
    for (;;) {
        const double u = rng.uniform() - 0.5;
        const double v = rng.uniform();
        const double us = 0.5 - std::fabs(u);
        const double kf = std::floor((2.0 * a / us + b) * u + mean + 0.43);
        if (us >= 0.07 && v <= vr) {
            return static_cast<std::uint32_t>(kf);
        }
        if (kf < 0.0 || (us < 0.013 && v > us)) {
            continue;
        }
        const auto k = static_cast<std::uint64_t>(kf);
        const double lhs = std::log(v) + std::log(inv_alpha) - std::log(a / (us * us) + b);
        if (lhs <= -mean + kf * log_mean - log_factorial(k)) {
            return static_cast<std::uint32_t>(k);
        }
    }
}

}  // namespace detail

/// Uniformly distributed polarization angle on the full circle.
inline PolarizationAngle uniform_angle(RngStream& rng) { return PolarizationAngle::from_turns(rng.next_u64()); }

inline constexpr double kPoissonInversionLimit = 30.0;

/// One Poisson(mean) deviate.
inline std::uint32_t sample_poisson(double mean, RngStream& rng) {
    if (!(mean >= 0.0) || !std::isfinite(mean)) {
        throw std::invalid_argument("sample_poisson: mean must be finite and non-negative");
    }
    if (mean == 0.0) {
        return 0;
    }
    return mean < kPoissonInversionLimit ? detail::poisson_inversion(mean, rng)
                                         : detail::poisson_ptrd(mean, rng);
}

/// Port counts for a pulse of mean photon number `mean_n` polarized at `phi`:
/// independent Poisson(N cos²φ) and Poisson(N sin²φ).
inline PhotonCounts sample_photon_counts(PolarizationAngle phi, double mean_n, RngStream& rng) {
    if (!(mean_n >= 0.0)) {
        throw std::invalid_argument("sample_photon_counts: negative mean photon number");
    }
    const double c = std::cos(phi.radians());
    const double s = std::sin(phi.radians());
    const double mean_h = mean_n * c * c;
    const double mean_v = mean_n * s * s;
    PhotonCounts out;
    out.n_h = sample_poisson(mean_h, rng);
    out.n_v = sample_poisson(mean_v, rng);
    return out;
}

/**
 * Port counts conditioned on at least one photon.
 *
 * Same law as redrawing sample_photon_counts until conclusive. For weak
 * pulses the redraw loop would be very long, so the total is drawn from the
 * zero-truncated Poisson law and split binomially over the two ports.
 */
inline PhotonCounts sample_conclusive_counts(PolarizationAngle phi, double mean_n, RngStream& rng) {
    if (!(mean_n > 0.0) || !std::isfinite(mean_n)) {
        throw std::invalid_argument("sample_conclusive_counts: mean photon number must be positive");
    }
    if (mean_n >= 1.0) {
        for (;;) {
            const PhotonCounts c = sample_photon_counts(phi, mean_n, rng);
            if (c.conclusive()) {
                return c;
            }
        }
    }
    // P(n) = N^n / (n! (e^N - 1)), n >= 1.
    const double u = rng.uniform();
    double p = mean_n / std::expm1(mean_n);
    double cdf = p;
    std::uint32_t n = 1;
    while (u > cdf && n < 200) {
        ++n;
        p *= mean_n / n;
        cdf += p;
    }
    const double c = std::cos(phi.radians());
    const double p_h = c * c;
    PhotonCounts out;
    for (std::uint32_t i = 0; i < n; ++i) {
        if (rng.uniform() < p_h) {
            ++out.n_h;
        } else {
            ++out.n_v;
        }
    }
    return out;
}

/**
 * Probability of a conclusive count pair, conditioned on the pulse not being
 * vacuum:
 *
 *   e^{-N} (N cos²φ)^{n_h} (N sin²φ)^{n_v} / (n_h! n_v! (1 - e^{-N}))
 *
 * Summed over all pairs with n_h + n_v >= 1 this is exactly one.
 */
inline double photon_count_pmf(PhotonCounts counts, PolarizationAngle phi, double mean_n) {
    if (!(mean_n > 0.0) || !std::isfinite(mean_n)) {
        throw std::invalid_argument("photon_count_pmf: mean photon number must be positive");
    }
    if (!counts.conclusive()) {
        throw std::invalid_argument("photon_count_pmf: vacuum count pair carries no information");
    }
    const double c = std::cos(phi.radians());
    const double s = std::sin(phi.radians());
    const double mean_h = mean_n * c * c;
    const double mean_v = mean_n * s * s;
    auto log_term = [](std::uint32_t n, double m) -> double {
        if (n == 0) {
            return 0.0;
        }
        if (m <= 0.0) {
            return -std::numeric_limits<double>::infinity();
        }
        return n * std::log(m) - detail::log_factorial(n);
    };
    const double log_p = -mean_n + log_term(counts.n_h, mean_h) + log_term(counts.n_v, mean_v) -
                         std::log(-std::expm1(-mean_n));
    return std::exp(log_p);
}

/// Outcome of a two-port bit measurement.
enum class BitValue : std::uint8_t { Zero = 0, One = 1, Inconclusive = 2 };

inline BitValue bit_value(int bit) { return bit ? BitValue::One : BitValue::Zero; }

/// Majority vote between the ports; equal counts (vacuum included) are inconclusive.
inline BitValue measure_bit(PhotonCounts counts) {
    if (counts.n_h > counts.n_v) {
        return BitValue::Zero;
    }
    if (counts.n_v > counts.n_h) {
        return BitValue::One;
    }
    return BitValue::Inconclusive;
}

/**
 * Quadrant-corrected angle estimate from port counts.
 *
 * The principal estimate arctan√(n_v/n_h) lies in [0, π/2]; the analyzer
 * cannot tell which quadrant it came from, so the estimate is mapped into the
 * quadrant holding `true_angle` by the reflection that preserves cos² and sin².
 */
inline PolarizationAngle estimate_angle(PhotonCounts counts, PolarizationAngle true_angle) {
    if (!counts.conclusive()) {
        throw std::invalid_argument("estimate_angle: vacuum count pair carries no information");
    }
    const double principal =
        counts.n_h == 0 ? kHalfPi
                        : std::atan(std::sqrt(static_cast<double>(counts.n_v) / counts.n_h));
    switch (true_angle.quadrant()) {
        case 0:
            return PolarizationAngle{principal};
        case 1:
            return PolarizationAngle{kPi - principal};
        case 2:
            return PolarizationAngle{kPi + principal};
        default:
            return PolarizationAngle{kTwoPi - principal};
    }
}

}  // namespace qkd3
