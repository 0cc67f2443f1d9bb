#pragma once

#include <cmath>
#include <stdexcept>

namespace qkd3 {

/// h(p) = -p log2 p - (1-p) log2(1-p), with h(0) = h(1) = 0.
inline double binary_entropy(double p) {
    if (!(p >= 0.0 && p <= 1.0)) {
        throw std::domain_error("binary_entropy: probability outside [0, 1]");
    }
    if (p == 0.0 || p == 1.0) {
        return 0.0;
    }
    return -p * std::log2(p) - (1.0 - p) * std::log2(1.0 - p);
}

/// The p in [0, 0.5] with binary_entropy(p) == y, by bisection to 1e-15.
inline double inverse_binary_entropy(double y) {
    if (!(y >= 0.0 && y <= 1.0)) {
        throw std::domain_error("inverse_binary_entropy: entropy outside [0, 1]");
    }
    if (y == 0.0) {
        return 0.0;
    }
    if (y == 1.0) {
        return 0.5;
    }
    double lo = 0.0;
    double hi = 0.5;
    while (hi - lo > 1e-15) {
        const double mid = 0.5 * (lo + hi);
        if (binary_entropy(mid) < y) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    return 0.5 * (lo + hi);
}

}  // namespace qkd3
