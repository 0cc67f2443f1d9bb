/**
 * Monte Carlo estimators for the eavesdropper and authentication error
 * probabilities, and the key-rate / rate-efficiency calculus built on them.
 *
 * Every estimator gives trial i its own stream (seed, i) and counts errors as
 * integers, so results are bit-identical for any worker count.
 */
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>

#include <boost/math/tools/roots.hpp>

#include "qkd3/angle.hpp"
#include "qkd3/entropy.hpp"
#include "qkd3/parallel.hpp"
#include "qkd3/photon.hpp"
#include "qkd3/rng.hpp"

namespace qkd3 {

inline constexpr double kCiZ = 3.0;
inline constexpr std::uint64_t kMinTrials = 1000;
inline constexpr std::uint64_t kDefaultTrials = 100000;

/// Monte Carlo probability with a z = 3 normal-approximation half-width.
struct EstimateWithCI {
    double p_hat = 0.0;
    std::uint64_t trials = 0;
    std::uint64_t errors = 0;
    double ci_half_width = 0.0;
    std::uint64_t seed = 0;

    /// Binomial standard error of p_hat.
    [[nodiscard]] double sigma() const {
        return std::sqrt(p_hat * (1.0 - p_hat) / static_cast<double>(trials));
    }

    static EstimateWithCI from_counts(std::uint64_t errors, std::uint64_t trials, std::uint64_t seed) {
        EstimateWithCI e;
        e.errors = errors;
        e.trials = trials;
        e.seed = seed;
        e.p_hat = static_cast<double>(errors) / static_cast<double>(trials);
        e.ci_half_width = kCiZ * e.sigma();
        return e;
    }
};

/// Trial budget and reproducibility controls shared by all estimators.
struct McOptions {
    std::uint64_t trials = kDefaultTrials;
    std::uint64_t seed = 0;
    unsigned threads = 0;  // 0: hardware concurrency
};

namespace detail {

inline void check_trials(std::uint64_t trials, const char* who) {
    if (trials < kMinTrials) {
        throw std::invalid_argument(std::string(who) + ": at least 1000 trials required");
    }
}

// Draw conclusive counts for a uniformly random angle and return (angle, estimate).
struct AngleDraw {
    PolarizationAngle truth;
    PolarizationAngle estimate;
};

inline AngleDraw draw_and_estimate(double mean_n, RngStream& rng) {
    const PolarizationAngle truth = uniform_angle(rng);
    const PhotonCounts c = sample_conclusive_counts(truth, mean_n, rng);
    return {truth, estimate_angle(c, truth)};
}

}  // namespace detail

/**
 * Eve's bit error when she estimates two stage angles from pulses of mean
 * n1 and n2 and infers Bob's rotation as their difference. A trial errs when
 * the inferred rotation is off by more than π/4 (mod π).
 */
inline EstimateWithCI mc_pe_ir_pns(double n1, double n2, const McOptions& opt) {
    if (!(n1 > 0.0) || !(n2 > 0.0) || !std::isfinite(n1) || !std::isfinite(n2)) {
        throw std::domain_error("mc_pe_ir_pns: photon numbers must be positive");
    }
    detail::check_trials(opt.trials, "mc_pe_ir_pns");
    const auto errors = parallel_count(opt.trials, opt.threads, [&](std::uint64_t i) {
        RngStream rng{opt.seed, i};
        const auto s1 = detail::draw_and_estimate(n1, rng);
        const auto s2 = detail::draw_and_estimate(n2, rng);
        const double inferred = s2.estimate.radians() - s1.estimate.radians();
        const double actual = s2.truth.radians() - s1.truth.radians();
        return bit_error_condition(inferred - actual);
    });
    return EstimateWithCI::from_counts(errors, opt.trials, opt.seed);
}

/// Bob's authentication error in normal operation: he estimates the stage-1
/// angle from a pulse of mean tN.
inline EstimateWithCI mc_pe_auth_norm(double t, double mean_n, const McOptions& opt) {
    if (!(t > 0.0 && t <= 1.0)) {
        throw std::domain_error("mc_pe_auth_norm: transmittance outside (0, 1]");
    }
    if (!(mean_n > 0.0) || !std::isfinite(mean_n)) {
        throw std::domain_error("mc_pe_auth_norm: mean photon number must be positive");
    }
    detail::check_trials(opt.trials, "mc_pe_auth_norm");
    const double bob_mean = t * mean_n;
    const auto errors = parallel_count(opt.trials, opt.threads, [&](std::uint64_t i) {
        RngStream rng{opt.seed, i};
        const auto s = detail::draw_and_estimate(bob_mean, rng);
        return bit_error_condition(s.estimate.radians() - s.truth.radians());
    });
    return EstimateWithCI::from_counts(errors, opt.trials, opt.seed);
}

/**
 * Bob's authentication error under a man-in-the-middle: Eve estimates the
 * stage-1 angle from (1 - t²)N photons and resends mean tN at her estimate,
 * which Bob then estimates in turn. Eve's vacuum pulses leave her with no
 * information, so she resends at a uniformly random angle.
 */
inline EstimateWithCI mc_pe_auth_mim(double t, double mean_n, const McOptions& opt) {
    if (!(t > 0.0 && t < 1.0)) {
        throw std::domain_error("mc_pe_auth_mim: transmittance must lie in (0, 1)");
    }
    if (!(mean_n > 0.0) || !std::isfinite(mean_n)) {
        throw std::domain_error("mc_pe_auth_mim: mean photon number must be positive");
    }
    detail::check_trials(opt.trials, "mc_pe_auth_mim");
    const double eve_mean = (1.0 - t * t) * mean_n;
    const double bob_mean = t * mean_n;
    const auto errors = parallel_count(opt.trials, opt.threads, [&](std::uint64_t i) {
        RngStream rng{opt.seed, i};
        const PolarizationAngle truth = uniform_angle(rng);
        const PhotonCounts eve_counts = sample_photon_counts(truth, eve_mean, rng);
        const PolarizationAngle resent = eve_counts.conclusive()
                                             ? estimate_angle(eve_counts, truth)
                                             : uniform_angle(rng);
        const PhotonCounts bob_counts = sample_conclusive_counts(resent, bob_mean, rng);
        const PolarizationAngle bob_estimate = estimate_angle(bob_counts, resent);
        return bit_error_condition(bob_estimate.radians() - truth.radians());
    });
    return EstimateWithCI::from_counts(errors, opt.trials, opt.seed);
}

/// I(E:A) = 1 - h(P_e) for an eavesdropper bit error probability P_e <= 1/2.
inline double mutual_info_eve(double pe) {
    if (!(pe >= 0.0 && pe <= 0.5)) {
        throw std::domain_error("mutual_info_eve: error probability outside [0, 0.5]");
    }
    return 1.0 - binary_entropy(pe);
}

struct KeyRateInputs {
    double raw_rate = 0.0;      ///< R, sifted bits per pulse slot
    double mim_fraction = 0.0;  ///< f in [0, 1]
    double eve_pe = 0.5;        ///< Eve's bit error probability
    double qber = 0.0;          ///< Q in [0, 0.5]

    void validate() const {
        if (!(raw_rate >= 0.0) || !std::isfinite(raw_rate)) {
            throw std::domain_error("key_rate: raw rate must be non-negative");
        }
        if (!(mim_fraction >= 0.0 && mim_fraction <= 1.0)) {
            throw std::domain_error("key_rate: MIM fraction outside [0, 1]");
        }
        if (!(eve_pe >= 0.0 && eve_pe <= 0.5)) {
            throw std::domain_error("key_rate: Eve error probability outside [0, 0.5]");
        }
        if (!(qber >= 0.0 && qber <= 0.5)) {
            throw std::domain_error("key_rate: QBER outside [0, 0.5]");
        }
    }
};

/// K = R [(1 - f) h(P_e) - h(Q)]. Non-positive values mean the key is abandoned.
inline double key_rate(const KeyRateInputs& in) {
    in.validate();
    return in.raw_rate * ((1.0 - in.mim_fraction) * binary_entropy(in.eve_pe) - binary_entropy(in.qber));
}

/// Largest QBER with a positive key rate: h(Q) = (1 - f) h(P_e).
inline double qber_threshold(double f, double eve_pe) {
    if (!(f >= 0.0 && f <= 1.0)) {
        throw std::domain_error("qber_threshold: MIM fraction outside [0, 1]");
    }
    if (!(eve_pe > 0.0 && eve_pe <= 0.5)) {
        throw std::domain_error("qber_threshold: Eve error probability outside (0, 0.5]");
    }
    if (f == 1.0) {
        return 0.0;
    }
    return inverse_binary_entropy((1.0 - f) * binary_entropy(eve_pe));
}

/// Fraction of pulses attacked, from where the measured authentication error
/// sits between the no-attack and full-attack values; clamped to [0, 1].
inline double mim_fraction(double measured, double norm, double mim) {
    if (!(mim > norm)) {
        throw std::domain_error("mim_fraction: attack and no-attack error rates are not separated");
    }
    const double f = (measured - norm) / (mim - norm);
    return std::clamp(f, 0.0, 1.0);
}

/// Fiber transmittance t(l) = 10^{-αl/10}.
inline double transmittance(double length_km, double alpha_db_per_km) {
    if (!(length_km >= 0.0) || !(alpha_db_per_km > 0.0)) {
        throw std::domain_error("transmittance: need length >= 0 and attenuation > 0");
    }
    return std::pow(10.0, -alpha_db_per_km * length_km / 10.0);
}

/**
 * Raw-rate ratio against a one-pass source of mean 0.5:
 *
 *   E = (1 - e^{-N t(passes·l)}) / (1 - e^{-0.5 t(l)})
 *
 * passes = 3 counts every traversal of the three-stage exchange; passes = 2
 * is kept for comparison with the two-traversal variant.
 */
inline double rate_efficiency(double mean_n, double length_km, double alpha, int passes = 3) {
    if (passes != 2 && passes != 3) {
        throw std::invalid_argument("rate_efficiency: passes must be 2 or 3");
    }
    if (!(mean_n > 0.0)) {
        throw std::domain_error("rate_efficiency: mean photon number must be positive");
    }
    const double multi = -std::expm1(-mean_n * transmittance(passes * length_km, alpha));
    const double single = -std::expm1(-0.5 * transmittance(length_km, alpha));
    return multi / single;
}

/// Longest fiber on which the three-pass exchange still out-rates the
/// one-pass source: (5/α) log10(N / 0.5), never negative.
inline double advantage_distance(double mean_n, double alpha) {
    if (!(mean_n > 0.0) || !(alpha > 0.0)) {
        throw std::domain_error("advantage_distance: need N > 0 and attenuation > 0");
    }
    return std::max(0.0, 5.0 / alpha * std::log10(mean_n / 0.5));
}

/// Length at which rate_efficiency falls to 1, by bracketed root finding to
/// `tol_km`. Returns 0 when the efficiency is already <= 1 at zero length.
inline double efficiency_crossing(double mean_n, double alpha, int passes = 3, double tol_km = 1e-9) {
    auto g = [&](double l) { return rate_efficiency(mean_n, l, alpha, passes) - 1.0; };
    if (g(0.0) <= 0.0) {
        return 0.0;
    }
    double hi = 1.0;
    while (g(hi) > 0.0) {
        hi *= 2.0;
        if (hi > 1e6) {
            throw std::runtime_error("efficiency_crossing: no crossing below 1e6 km");
        }
    }
    boost::uintmax_t max_iter = 200;
    auto tol = [tol_km](double a, double b) { return std::fabs(b - a) <= tol_km; };
    const auto bracket = boost::math::tools::toms748_solve(g, 0.0, hi, tol, max_iter);
    return 0.5 * (bracket.first + bracket.second);
}

}  // namespace qkd3
