// Independent reference computations used by the tests. Nothing here calls
// into the library's numerical code paths.
#pragma once

#include <cmath>
#include <cstdint>

#include <boost/math/quadrature/gauss_kronrod.hpp>

namespace oracle {

inline constexpr long double kPiL = 3.141592653589793238462643383279502884L;

/// I0(x) from the first `terms` terms of sum (x/2)^{2k} / (k!)^2 in long double.
inline long double bessel_i0_series(long double x, int terms = 30) {
    long double term = 1.0L;
    long double sum = 1.0L;
    const long double q = x * x / 4.0L;
    for (int k = 1; k < terms; ++k) {
        term *= q / (static_cast<long double>(k) * k);
        sum += term;
    }
    return sum;
}

/// L0(x) from the first `terms` terms of sum (x/2)^{2k+1} / Γ(k+3/2)^2.
inline long double struve_l0_series(long double x, int terms = 30) {
    long double term = (x / 2.0L) / (std::tgamma(1.5L) * std::tgamma(1.5L));
    long double sum = term;
    const long double q = x * x / 4.0L;
    for (int k = 1; k < terms; ++k) {
        const long double g = k + 0.5L;
        term *= q / (g * g);
        sum += term;
    }
    return sum;
}

/**
 * Bob's normal-operation authentication error by direct summation over count
 * pairs: for each conclusive (n_h, n_v) the estimator returns the angle
 * atan(sqrt(n_v/n_h)) in the true quadrant, and the error region is where the
 * truth lies more than π/4 away. The angle prior is integrated numerically.
 */
inline double pe_auth_norm_summed(double mean, int max_total = 0) {
    if (max_total == 0) {
        max_total = static_cast<int>(mean + 12.0 * std::sqrt(mean) + 30.0);
    }
    const double norm = -std::expm1(-mean);
    const double half_pi = 0.5 * static_cast<double>(kPiL);
    double total = 0.0;
    for (int n = 1; n <= max_total; ++n) {
        const double log_pn = -mean + n * std::log(mean) - std::lgamma(n + 1.0);
        for (int h = 0; h <= n; ++h) {
            const int v = n - h;
            const double est = std::atan2(std::sqrt(static_cast<double>(v)), std::sqrt(static_cast<double>(h)));
            const double log_binom = std::lgamma(n + 1.0) - std::lgamma(h + 1.0) - std::lgamma(v + 1.0);
            auto density = [&](double phi) {
                const double c2 = std::cos(phi) * std::cos(phi);
                const double s2 = 1.0 - c2;
                double lp = log_pn + log_binom;
                if (h > 0) lp += h * std::log(c2);
                if (v > 0) lp += v * std::log(s2);
                return std::exp(lp);
            };
            using GK = boost::math::quadrature::gauss_kronrod<double, 61>;
            double err = 0.0;
            // Within [0, π/2] the truth can only sit more than π/4 from the
            // estimate on one side.
            if (est < 0.25 * half_pi * 2.0) {
                const double lo = est + 0.5 * half_pi;
                if (lo < half_pi) err = GK::integrate(density, lo, half_pi, 8, 1e-14);
            } else {
                const double hi = est - 0.5 * half_pi;
                if (hi > 0.0) err = GK::integrate(density, 0.0, hi, 8, 1e-14);
            }
            total += err;
        }
    }
    return total / (half_pi * norm);
}

}  // namespace oracle
