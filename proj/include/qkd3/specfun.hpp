/**
 * Modified Bessel I0, modified Struve L0, their difference, and the closed
 * form of Bob's authentication error probability in normal operation.
 *
 * Accuracy target is 1e-8 relative everywhere on [0, 700]; the series and
 * expansions below are converged to roughly machine precision.
 */
#pragma once

#include <cmath>
#include <limits>
#include <stdexcept>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "qkd3/angle.hpp"

namespace qkd3 {

/// A special-function value with an estimate of its absolute error.
struct SpecFunResult {
    double value = 0.0;
    double abs_error = 0.0;
};

inline constexpr double kSpecFunMaxArg = 700.0;
inline constexpr double kI0SeriesLimit = 15.0;
inline constexpr double kDifferenceSubtractLimit = 8.0;
inline constexpr double kDifferenceAsymptoticLimit = 40.0;
/// Below this tN the authentication error uses the power series.
inline constexpr double kAuthSeriesLimit = 2.0;

namespace detail {

inline void check_specfun_arg(double x, const char* who) {
    if (!(x >= 0.0 && x <= kSpecFunMaxArg)) {
        throw std::domain_error(std::string(who) + ": argument outside [0, 700]");
    }
}

inline constexpr double kEps = std::numeric_limits<double>::epsilon();

// Σ (x/2)^{2k} / (k!)²
inline SpecFunResult i0_series(double x) {
    const double q = 0.25 * x * x;
    double term = 1.0;
    double sum = 1.0;
    int k = 0;
    while (term > kEps * sum * 0.01) {
        ++k;
        term *= q / (static_cast<double>(k) * k);
        sum += term;
    }
    return {sum, (k + 2) * kEps * sum};
}

// e^x / sqrt(2πx) · Σ ((2k-1)!!)² / (k! 8^k x^k), truncated at its smallest term.
inline SpecFunResult i0_asymptotic(double x) {
    double term = 1.0;
    double sum = 1.0;
    for (int k = 1; k < 200; ++k) {
        const double next = term * (2.0 * k - 1.0) * (2.0 * k - 1.0) / (8.0 * k * x);
        if (next >= term || next < kEps * sum * 0.01) {
            term = next;
            break;
        }
        term = next;
        sum += term;
    }
    const double scale = std::exp(x) / std::sqrt(kTwoPi * x);
    const double value = scale * sum;
    return {value, scale * (std::fabs(term) + 8.0 * kEps * sum)};
}

// Σ (x/2)^{2k+1} / Γ(k+3/2)²; all terms positive so no cancellation.
inline SpecFunResult l0_series(double x) {
    const double half = 0.5 * x;
    const double q = half * half;
    double term = half / (0.25 * kPi);  // Γ(3/2)² = π/4
    double sum = term;
    int k = 0;
    while (term > kEps * sum * 0.01 || k < 2) {
        ++k;
        const double g = k + 0.5;
        term *= q / (g * g);
        sum += term;
    }
    return {sum, (k + 2) * kEps * sum};
}

// (2/π) ∫_0^{π/2} e^{-x sin u} du, the integrand is positive and peaked at u = 0.
inline SpecFunResult difference_integral(double x) {
    using boost::math::quadrature::gauss_kronrod;
    auto f = [x](double u) { return std::exp(-x * std::sin(u)); };
    const double split = std::min(kHalfPi, 30.0 / x);
    double err_head = 0.0;
    double err_tail = 0.0;
    const double head = gauss_kronrod<double, 61>::integrate(f, 0.0, split, 15, 1e-15, &err_head);
    double tail = 0.0;
    if (split < kHalfPi) {
        tail = gauss_kronrod<double, 31>::integrate(f, split, kHalfPi, 10, 1e-15, &err_tail);
    }
    const double value = (head + tail) * (2.0 / kPi);
    const double abs_err = (err_head * std::fabs(head) + err_tail * std::fabs(tail)) * (2.0 / kPi) +
                           8.0 * kEps * value;
    return {value, abs_err};
}

// I0(x) - L0(x) ~ (1/π²) Σ Γ(k+1/2)² (2/x)^{2k+1}, truncated at its smallest term.
inline SpecFunResult difference_asymptotic(double x) {
    const double r = 2.0 / x;
    double term = r / kPi;  // Γ(1/2)² / π² = 1/π
    double sum = term;
    for (int k = 1; k < 200; ++k) {
        const double g = k - 0.5;
        const double next = term * g * g * r * r;
        if (next >= term) {
            break;
        }
        term = next;
        sum += term;
        if (term < kEps * sum * 0.01) {
            break;
        }
    }
    return {sum, std::fabs(term) + 4.0 * kEps * sum};
}

// e^h (I0(h) - L0(h)) - 1 as a power series in h. Expanding the product
// removes the leading 1 exactly, so small h keeps full relative precision.
inline double auth_numerator_series(double h) {
    constexpr int kTerms = 40;
    double c[kTerms];  // Taylor coefficients of I0 - L0
    double even = 1.0;
    double odd = 2.0 / kPi;  // (1/2) / Γ(3/2)²
    for (int m = 0; m < kTerms; ++m) {
        if (m % 2 == 0) {
            c[m] = even;
            const double k = m / 2 + 1;
            even /= 4.0 * k * k;
        } else {
            c[m] = -odd;
            const double g = m / 2 + 1.5;
            odd /= 4.0 * g * g;
        }
    }
    double sum = 0.0;
    double hn = 1.0;
    for (int n = 1; n < kTerms; ++n) {
        hn *= h;
        double a = 0.0;
        double inv_fact = 1.0;  // 1 / (n - m)!
        for (int m = n; m >= 0; --m) {
            a += c[m] * inv_fact;
            inv_fact /= (n - m + 1);
        }
        const double term = a * hn;
        sum += term;
        if (std::fabs(term) < kEps * 1e-3 * std::fabs(sum)) {
            break;
        }
    }
    return sum;
}

}  // namespace detail

/// Modified Bessel function of the first kind, order zero.
inline SpecFunResult bessel_i0(double x) {
    detail::check_specfun_arg(x, "bessel_i0");
    return x <= kI0SeriesLimit ? detail::i0_series(x) : detail::i0_asymptotic(x);
}

/// Modified Struve function, order zero.
inline SpecFunResult struve_l0(double x) {
    detail::check_specfun_arg(x, "struve_l0");
    return detail::l0_series(x);
}

/**
 * I0(x) - L0(x) without catastrophic cancellation.
 *
 * Direct subtraction up to x = 8 (at most ~4 digits lost), the integral
 * representation (2/π)∫ e^{-x sin u} du on (8, 40], and the large-argument
 * expansion beyond, where its smallest term is below 1e-17 relative.
 */
inline SpecFunResult i0_minus_l0(double x) {
    detail::check_specfun_arg(x, "i0_minus_l0");
    if (x <= kDifferenceSubtractLimit) {
        const auto i0 = detail::i0_series(x);
        const auto l0 = detail::l0_series(x);
        return {i0.value - l0.value, i0.abs_error + l0.abs_error};
    }
    if (x <= kDifferenceAsymptoticLimit) {
        return detail::difference_integral(x);
    }
    return detail::difference_asymptotic(x);
}

/**
 * Closed-form error probability of Bob's authentication estimate without an
 * attacker, for a pulse of mean tN reaching him:
 *
 *   P = [e^{tN/2} (I0(tN/2) - L0(tN/2)) - 1] / (e^{tN} - 1)
 *
 * Depends on (t, N) only through tN. Tends to 1/2 - 1/π as tN → 0.
 */
inline double pe_auth_norm_analytic(double t, double mean_n) {
    if (!(t > 0.0 && t <= 1.0)) {
        throw std::domain_error("pe_auth_norm_analytic: transmittance outside (0, 1]");
    }
    if (!(mean_n > 0.0)) {
        throw std::domain_error("pe_auth_norm_analytic: mean photon number must be positive");
    }
    const double x = t * mean_n;
    if (x > kSpecFunMaxArg) {
        throw std::domain_error("pe_auth_norm_analytic: tN above 700");
    }
    const double half = 0.5 * x;
    if (x < kAuthSeriesLimit) {
        return detail::auth_numerator_series(half) / std::expm1(x);
    }
    const double diff = i0_minus_l0(half).value;
    if (half > 200.0) {
        // e^{h} D / (e^{2h} - 1) = e^{-h} D / (1 - e^{-2h}); 1/(e^{2h}-1) underflows harmlessly.
        const double main = std::exp(-half + std::log(diff)) / (-std::expm1(-x));
        return main - std::exp(-x) / (-std::expm1(-x));
    }
    const double numerator = std::expm1(half + std::log(diff));
    return numerator / std::expm1(x);
}

}  // namespace qkd3
