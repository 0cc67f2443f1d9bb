/**
 * Pulse-level simulation of the three-stage exchange.
 *
 * Per pulse: Alice locks the bit angle with θ_A and sends it; Bob either keeps
 * the pulse to authenticate the stage-1 angle or adds his lock θ_B and returns
 * it; Alice either keeps it to authenticate the stage-2 angle or removes her
 * lock and sends it on; Bob removes his lock and reads the bit in the H/V
 * basis. Sifting, authentication and QBER disclosure follow once all pulses
 * are in.
 */
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <stdexcept>
#include <vector>

#include "qkd3/analysis.hpp"
#include "qkd3/angle.hpp"
#include "qkd3/attacks.hpp"
#include "qkd3/parallel.hpp"
#include "qkd3/photon.hpp"
#include "qkd3/rng.hpp"

namespace qkd3 {

struct SessionConfig {
    double mean_n = 4.0;                 ///< mean photon number at Alice's source
    double transmittance = 1.0;          ///< per-traversal channel transmittance t
    std::uint64_t n_pulses = 10000;
    double p_auth_bob = 0.1;             ///< step-2 retention probability
    double p_auth_alice = 0.1;           ///< step-3 retention probability
    double misalignment_sigma = 0.0;     ///< std-dev of Bob's final analyzer error, radians
    double qber_sample_fraction = 0.1;   ///< share of sifted bits disclosed for the QBER
    std::optional<double> min_raw_rate;  ///< abandon the key below this raw rate
    std::uint64_t seed = 0;

    void validate() const {
        auto prob = [](double p) { return p >= 0.0 && p <= 1.0; };
        if (!(mean_n > 0.0) || !std::isfinite(mean_n)) {
            throw std::invalid_argument("session: mean_n must be positive");
        }
        if (!(transmittance > 0.0 && transmittance <= 1.0)) {
            throw std::invalid_argument("session: transmittance outside (0, 1]");
        }
        if (n_pulses < 1) {
            throw std::invalid_argument("session: n_pulses must be at least 1");
        }
        if (!prob(p_auth_bob) || !prob(p_auth_alice) || !prob(qber_sample_fraction)) {
            throw std::invalid_argument("session: probabilities must lie in [0, 1]");
        }
        if (!(misalignment_sigma >= 0.0) || !std::isfinite(misalignment_sigma)) {
            throw std::invalid_argument("session: misalignment_sigma must be non-negative");
        }
        if (min_raw_rate && !(*min_raw_rate >= 0.0)) {
            throw std::invalid_argument("session: min_raw_rate must be non-negative");
        }
    }
};

enum class PulseFate : std::uint8_t { RetainedByBob, RetainedByAlice, Completed };

struct PulseRecord {
    int bit = 0;
    PolarizationAngle theta_x;
    PolarizationAngle theta_a;
    PolarizationAngle theta_b;
    PolarizationAngle phi1;  ///< θ_X + θ_A
    PolarizationAngle phi2;  ///< φ₁ + θ_B
    PolarizationAngle phi3;  ///< θ_X + θ_B
    PulseFate fate = PulseFate::Completed;
    /// Angle in front of Bob's analyzer after he removes θ_B, before misalignment.
    std::optional<PolarizationAngle> final_angle;
    std::optional<PhotonCounts> bob_counts;
    BitValue bob_bit = BitValue::Inconclusive;
    /// Estimate of φ₁ (kept by Bob) or φ₂ (kept by Alice); absent on vacuum.
    std::optional<PolarizationAngle> auth_estimate;
    BitValue eve_bit = BitValue::Inconclusive;
};

struct AuthRates {
    std::optional<double> bob;
    std::optional<double> alice;
    std::uint64_t bob_samples = 0;
    std::uint64_t alice_samples = 0;
};

struct Transcript {
    SessionConfig config;
    AttackKind attack;
    std::vector<PulseRecord> pulses;
    std::vector<std::uint64_t> sifted;     ///< completed pulses with a conclusive bit
    std::vector<std::uint64_t> disclosed;  ///< sifted bits revealed for the QBER, ascending
    std::vector<std::uint64_t> key;        ///< sifted minus disclosed
    std::optional<double> qber_estimate;
    AuthRates auth;
    double raw_rate = 0.0;
    std::uint64_t retained_by_bob = 0;
    std::uint64_t retained_by_alice = 0;
    std::uint64_t completed = 0;
    bool abandoned = false;
};

/// Stream id reserved for the QBER disclosure draw; pulses use ids 0..n-1.
inline constexpr std::uint64_t kQberStreamId = 0x8000000000000001ull;

/// Simulate one pulse. Uses only `rng`, so pulses are independent of each other.
inline PulseRecord simulate_pulse(const SessionConfig& cfg, const AttackKind& attack, RngStream& rng) {
    const ChannelContext ctx{cfg.transmittance, cfg.mean_n};
    PulseRecord rec;
    EveState eve;

    rec.bit = rng.bernoulli(0.5) ? 1 : 0;
    rec.theta_x = bit_angle(rec.bit);
    rec.theta_a = uniform_angle(rng);
    rec.theta_b = uniform_angle(rng);
    rec.phi1 = rec.theta_x + rec.theta_a;
    rec.phi2 = rec.phi1 + rec.theta_b;
    rec.phi3 = rec.theta_x + rec.theta_b;

    // Step 1: Alice → Bob.
    const Pulse at_bob = attack_traversal(attack, Stage::One, {rec.phi1, cfg.mean_n}, ctx, eve, rng);

    // Step 2: Bob keeps the pulse for authentication or locks it and returns it.
    if (rng.bernoulli(cfg.p_auth_bob)) {
        rec.fate = PulseFate::RetainedByBob;
        const PhotonCounts c = sample_photon_counts(at_bob.angle, at_bob.mean, rng);
        if (c.conclusive()) {
            rec.auth_estimate = estimate_angle(c, at_bob.angle);
        }
        return rec;
    }
    const Pulse from_bob{at_bob.angle + rec.theta_b, at_bob.mean};
    const Pulse at_alice = attack_traversal(attack, Stage::Two, from_bob, ctx, eve, rng);

    // Step 3: Alice keeps the pulse or removes her lock and sends it on.
    if (rng.bernoulli(cfg.p_auth_alice)) {
        rec.fate = PulseFate::RetainedByAlice;
        const PhotonCounts c = sample_photon_counts(at_alice.angle, at_alice.mean, rng);
        if (c.conclusive()) {
            rec.auth_estimate = estimate_angle(c, at_alice.angle);
        }
        return rec;
    }
    const Pulse from_alice{at_alice.angle - rec.theta_a, at_alice.mean};
    const Pulse at_bob_again = attack_traversal(attack, Stage::Three, from_alice, ctx, eve, rng);
    rec.eve_bit = eve.eve_bit;

    // Step 4: Bob removes his lock and measures in the H/V basis.
    rec.fate = PulseFate::Completed;
    rec.final_angle = at_bob_again.angle - rec.theta_b;
    PolarizationAngle analyzed = *rec.final_angle;
    if (cfg.misalignment_sigma > 0.0) {
        analyzed = analyzed + PolarizationAngle{cfg.misalignment_sigma * rng.normal()};
    }
    rec.bob_counts = sample_photon_counts(analyzed, at_bob_again.mean, rng);
    rec.bob_bit = measure_bit(*rec.bob_counts);
    return rec;
}

/**
 * Empirical authentication error rates: each retained pulse's estimate is
 * compared with the angle revealed afterwards (φ₁ for Bob, φ₂ for Alice).
 * Pulses whose measurement was vacuum give no estimate and are skipped.
 */
inline AuthRates authenticate(const Transcript& tr) {
    AuthRates out;
    std::uint64_t bob_err = 0;
    std::uint64_t alice_err = 0;
    for (const auto& p : tr.pulses) {
        if (!p.auth_estimate) {
            continue;
        }
        if (p.fate == PulseFate::RetainedByBob) {
            ++out.bob_samples;
            bob_err += bit_error_condition((*p.auth_estimate - p.phi1).radians()) ? 1 : 0;
        } else if (p.fate == PulseFate::RetainedByAlice) {
            ++out.alice_samples;
            alice_err += bit_error_condition((*p.auth_estimate - p.phi2).radians()) ? 1 : 0;
        }
    }
    if (out.bob_samples == 0 && out.alice_samples == 0) {
        throw std::runtime_error("authenticate: no retained pulses with a usable estimate");
    }
    if (out.bob_samples > 0) {
        out.bob = static_cast<double>(bob_err) / static_cast<double>(out.bob_samples);
    }
    if (out.alice_samples > 0) {
        out.alice = static_cast<double>(alice_err) / static_cast<double>(out.alice_samples);
    }
    return out;
}

/// QBER measurement outcome: the disclosed indices and the error rate on them.
struct QberSample {
    std::vector<std::uint64_t> disclosed;
    double qber = 0.0;
};

/**
 * Disclose ⌈fraction·|sifted|⌉ sifted bits chosen uniformly without
 * replacement and return the share on which Bob's bit differs from Alice's.
 */
inline QberSample estimate_qber(const Transcript& tr, RngStream& rng) {
    if (tr.sifted.empty()) {
        throw std::runtime_error("estimate_qber: no sifted bits");
    }
    const auto n = static_cast<std::uint64_t>(tr.sifted.size());
    const auto k = std::min<std::uint64_t>(
        n, static_cast<std::uint64_t>(std::ceil(tr.config.qber_sample_fraction * static_cast<double>(n))));
    std::vector<std::uint64_t> pool = tr.sifted;
    // Partial Fisher-Yates with an unbiased bounded draw.
    for (std::uint64_t i = 0; i < k; ++i) {
        const std::uint64_t span = n - i;
        const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % span);
        std::uint64_t r;
        do {
            r = rng.next_u64();
        } while (r >= limit);
        std::swap(pool[i], pool[i + r % span]);
    }
    QberSample out;
    out.disclosed.assign(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(k));
    std::sort(out.disclosed.begin(), out.disclosed.end());
    std::uint64_t mismatches = 0;
    for (auto idx : out.disclosed) {
        const auto& p = tr.pulses[idx];
        mismatches += (p.bob_bit != bit_value(p.bit)) ? 1 : 0;
    }
    out.qber = k == 0 ? 0.0 : static_cast<double>(mismatches) / static_cast<double>(k);
    return out;
}

/// Full session: pulses, sifting, authentication and QBER disclosure.
/// Pulse i draws from stream (seed, i); the result is independent of `threads`.
inline Transcript run_session(const SessionConfig& config, const AttackKind& attack, unsigned threads = 1) {
    config.validate();
    validate_attack(attack);
    Transcript tr;
    tr.config = config;
    tr.attack = attack;
    tr.pulses.resize(config.n_pulses);
    parallel_slices(config.n_pulses, threads, [&](std::size_t, std::uint64_t begin, std::uint64_t end) {
        for (std::uint64_t i = begin; i < end; ++i) {
            RngStream rng{config.seed, i};
            tr.pulses[i] = simulate_pulse(config, attack, rng);
        }
    });

    for (std::uint64_t i = 0; i < config.n_pulses; ++i) {
        const auto& p = tr.pulses[i];
        switch (p.fate) {
            case PulseFate::RetainedByBob:
                ++tr.retained_by_bob;
                break;
            case PulseFate::RetainedByAlice:
                ++tr.retained_by_alice;
                break;
            case PulseFate::Completed:
                ++tr.completed;
                if (p.bob_bit != BitValue::Inconclusive) {
                    tr.sifted.push_back(i);
                }
                break;
        }
    }

    if (tr.retained_by_bob + tr.retained_by_alice > 0) {
        try {
            tr.auth = authenticate(tr);
        } catch (const std::runtime_error&) {
            // Every retained pulse was vacuum; leave both rates absent.
        }
    }

    if (!tr.sifted.empty() && config.qber_sample_fraction > 0.0) {
        RngStream rng{config.seed, kQberStreamId};
        auto sample = estimate_qber(tr, rng);
        tr.qber_estimate = sample.qber;
        tr.disclosed = std::move(sample.disclosed);
    }
    std::set_difference(tr.sifted.begin(), tr.sifted.end(), tr.disclosed.begin(), tr.disclosed.end(),
                        std::back_inserter(tr.key));
    tr.raw_rate = static_cast<double>(tr.key.size()) / static_cast<double>(config.n_pulses);
    tr.abandoned = config.min_raw_rate && tr.raw_rate < *config.min_raw_rate;
    return tr;
}

/// Share of Alice's key bits Eve guessed correctly among completed pulses
/// where she reached a decision.
inline std::optional<double> eve_agreement(const Transcript& tr) {
    std::uint64_t decided = 0;
    std::uint64_t agree = 0;
    for (const auto& p : tr.pulses) {
        if (p.fate != PulseFate::Completed || p.eve_bit == BitValue::Inconclusive) {
            continue;
        }
        ++decided;
        agree += p.eve_bit == bit_value(p.bit) ? 1 : 0;
    }
    if (decided == 0) {
        return std::nullopt;
    }
    return static_cast<double>(agree) / static_cast<double>(decided);
}

}  // namespace qkd3
