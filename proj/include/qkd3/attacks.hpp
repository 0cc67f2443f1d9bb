/**
 * Eavesdropper strategies as per-traversal hooks.
 *
 * The session hands every channel traversal to attack_traversal(): the pulse
 * as it leaves the sender, and gets back the pulse that reaches the receiver.
 * With no attack that is plain channel loss. Eve's per-pulse knowledge lives
 * in an EveState owned by the pulse being simulated.
 */
#pragma once

#include <cmath>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>

#include "qkd3/angle.hpp"
#include "qkd3/photon.hpp"
#include "qkd3/rng.hpp"

namespace qkd3 {

/// A pulse in flight: polarization and mean photon number.
struct Pulse {
    PolarizationAngle angle;
    double mean = 0.0;
};

enum class Stage : int { One = 1, Two = 2, Three = 3 };

/// How an intercept-resend Eve re-prepares pulses.
enum class ResendMode {
    Idealized,    ///< resend at the intercepted (true) angle
    Operational,  ///< resend at her own estimate
};

/// How Eve turns her stage-3 tap into a bit once she has rotated her analyzer.
enum class Stage3Decision {
    Ideal,    ///< the closer of the two basis states; no photon noise
    Counted,  ///< majority vote over the photons she actually tapped
};

struct NoAttack {};

/// Eve absorbs every pulse at the sender's output and resends what the
/// receiver expects after channel loss: stage budgets N1 = N, N2 = tN.
struct InterceptResend {
    ResendMode resend = ResendMode::Idealized;
    Stage3Decision decision = Stage3Decision::Ideal;
};

/// Eve splits off a fraction of each pulse and forwards the rest over a
/// lossless link. The default fraction 1 - t hides in the channel loss and
/// gives N1 = (1 - t)N, N2 = (1 - t)tN; 0.5 models the lossless-channel case.
struct PhotonNumberSplitting {
    std::optional<double> tap_fraction;
    Stage3Decision decision = Stage3Decision::Ideal;
};

/// Eve runs the protocol separately with Alice and with Bob.
struct ManInTheMiddle {
    Stage3Decision decision = Stage3Decision::Counted;
};

using AttackKind = std::variant<NoAttack, InterceptResend, PhotonNumberSplitting, ManInTheMiddle>;

inline std::string_view attack_name(const AttackKind& a) {
    switch (a.index()) {
        case 0:
            return "none";
        case 1:
            return "intercept_resend";
        case 2:
            return "photon_number_splitting";
        default:
            return "man_in_the_middle";
    }
}

inline void validate_attack(const AttackKind& a) {
    if (const auto* pns = std::get_if<PhotonNumberSplitting>(&a); pns && pns->tap_fraction) {
        const double f = *pns->tap_fraction;
        if (!(f >= 0.0 && f <= 1.0)) {
            throw std::invalid_argument("photon number splitting: tap fraction outside [0, 1]");
        }
    }
}

/// What Eve learned about one pulse.
struct EveState {
    std::optional<PhotonCounts> counts_stage1;
    std::optional<PhotonCounts> counts_stage2;
    std::optional<PolarizationAngle> phi1_hat;
    std::optional<PolarizationAngle> phi2_hat;
    std::optional<PolarizationAngle> theta_b_hat;
    /// Rotation Eve applied herself when posing as Bob toward Alice.
    std::optional<PolarizationAngle> own_rotation;
    BitValue eve_bit = BitValue::Inconclusive;

    void set_stage_estimates(std::optional<PolarizationAngle> p1, std::optional<PolarizationAngle> p2) {
        phi1_hat = p1;
        phi2_hat = p2;
        if (p1 && p2) {
            theta_b_hat = *p2 - *p1;
        } else {
            theta_b_hat.reset();
        }
    }
};

/// Mean photon numbers after a beam splitter sends `fraction` of a
/// phase-randomized pulse to Eve. The two parts sum to the incident mean.
struct TapSplit {
    double eve_mean = 0.0;
    double forwarded_mean = 0.0;
};

inline TapSplit tap_pulse(double pulse_mean, double fraction) {
    if (!(fraction >= 0.0 && fraction <= 1.0)) {
        throw std::invalid_argument("tap_pulse: fraction outside [0, 1]");
    }
    if (!(pulse_mean >= 0.0)) {
        throw std::invalid_argument("tap_pulse: negative mean photon number");
    }
    const double eve = fraction * pulse_mean;
    return {eve, pulse_mean - eve};
}

/**
 * Eve's guess of the key bit from the stage-3 pulse.
 *
 * She rotates her analyzer by `rotation` (θ̂_B for a passive Eve, her own
 * rotation when posing as Bob) and reads the H/V outcome. With `counts` she
 * votes on the photons she tapped; without them the idealized decision picks
 * the basis state nearer to the rotated polarization.
 */
inline BitValue eve_bit_decision(std::optional<PolarizationAngle> rotation, PolarizationAngle stage3_angle,
                                 std::optional<PhotonCounts> counts = std::nullopt) {
    if (!rotation) {
        return BitValue::Inconclusive;
    }
    if (counts) {
        return measure_bit(*counts);
    }
    const double c = std::cos(2.0 * (stage3_angle - *rotation).radians());
    if (c > 0.0) {
        return BitValue::Zero;
    }
    if (c < 0.0) {
        return BitValue::One;
    }
    return BitValue::Inconclusive;
}

/// Channel and source parameters an attack hook may use; Eve knows them all.
struct ChannelContext {
    double transmittance = 1.0;
    double source_mean = 1.0;
};

namespace detail {

inline std::optional<PolarizationAngle> estimate_or_none(const PhotonCounts& c, PolarizationAngle truth) {
    if (!c.conclusive()) {
        return std::nullopt;
    }
    return estimate_angle(c, truth);
}

inline PolarizationAngle random_angle(RngStream& rng) { return uniform_angle(rng); }

inline BitValue stage3_bit(Stage3Decision decision, std::optional<PolarizationAngle> rotation,
                           PolarizationAngle angle, double tapped_mean, RngStream& rng) {
    if (!rotation) {
        return BitValue::Inconclusive;
    }
    if (decision == Stage3Decision::Counted) {
        const PhotonCounts c = sample_photon_counts(angle - *rotation, tapped_mean, rng);
        return eve_bit_decision(rotation, angle, c);
    }
    return eve_bit_decision(rotation, angle);
}

// The pulse Eve prepares for Bob once she holds a bit guess and θ̂_B.
inline PolarizationAngle reencode(BitValue bit, std::optional<PolarizationAngle> theta_b_hat, RngStream& rng) {
    if (!theta_b_hat) {
        return random_angle(rng);
    }
    const int b = bit == BitValue::Inconclusive ? (rng.bernoulli(0.5) ? 1 : 0) : static_cast<int>(bit);
    return bit_angle(b) + *theta_b_hat;
}

}  // namespace detail

/**
 * Intercept-resend at one traversal. Stages 1 and 2: Eve measures the whole
 * pulse and resends the expected mean at the true angle (idealized) or at her
 * estimate (operational). Stage 3: she decides her bit with θ̂_B.
 */
inline Pulse ir_attack_step(Stage stage, const Pulse& incident, const InterceptResend& cfg,
                            const ChannelContext& ctx, EveState& eve, RngStream& rng) {
    const double forwarded_mean = ctx.transmittance * incident.mean;
    if (stage == Stage::Three) {
        eve.eve_bit = detail::stage3_bit(cfg.decision, eve.theta_b_hat, incident.angle, incident.mean, rng);
        if (cfg.resend == ResendMode::Idealized) {
            return {incident.angle, forwarded_mean};
        }
        return {detail::reencode(eve.eve_bit, eve.theta_b_hat, rng), forwarded_mean};
    }
    const PhotonCounts counts = sample_photon_counts(incident.angle, incident.mean, rng);
    const auto estimate = detail::estimate_or_none(counts, incident.angle);
    if (stage == Stage::One) {
        eve.counts_stage1 = counts;
        eve.set_stage_estimates(estimate, std::nullopt);
    } else {
        eve.counts_stage2 = counts;
        eve.set_stage_estimates(eve.phi1_hat, estimate);
    }
    if (cfg.resend == ResendMode::Idealized) {
        return {incident.angle, forwarded_mean};
    }
    return {estimate ? *estimate : detail::random_angle(rng), forwarded_mean};
}

/// Photon-number splitting at one traversal; the forwarded pulse keeps its angle.
inline Pulse pns_attack_step(Stage stage, const Pulse& incident, const PhotonNumberSplitting& cfg,
                             const ChannelContext& ctx, EveState& eve, RngStream& rng) {
    const double fraction = cfg.tap_fraction.value_or(1.0 - ctx.transmittance);
    const TapSplit split = tap_pulse(incident.mean, fraction);
    if (stage == Stage::Three) {
        eve.eve_bit = detail::stage3_bit(cfg.decision, eve.theta_b_hat, incident.angle, split.eve_mean, rng);
        return {incident.angle, split.forwarded_mean};
    }
    const PhotonCounts counts = sample_photon_counts(incident.angle, split.eve_mean, rng);
    const auto estimate = detail::estimate_or_none(counts, incident.angle);
    if (stage == Stage::One) {
        eve.counts_stage1 = counts;
        eve.set_stage_estimates(estimate, std::nullopt);
    } else {
        eve.counts_stage2 = counts;
        eve.set_stage_estimates(eve.phi1_hat, estimate);
    }
    return {incident.angle, split.forwarded_mean};
}

/**
 * Man-in-the-middle at one traversal.
 *
 * Stage 1 (Alice → Bob): Eve measures (1 - t²)N of Alice's pulse for φ̂₁ and
 * sends Bob mean tN at φ̂₁. Stage 2 (Bob → Alice): she measures t(1 - t²)N of
 * Bob's reply for φ̂₂, so θ̂_B = φ̂₂ - φ̂₁, and sends Alice mean t²N at φ̂₁
 * turned by a rotation of her own. Stage 3 (Alice → Bob): she undoes her
 * rotation on Alice's pulse to read the bit and sends Bob that bit locked
 * with θ̂_B at mean t³N. A vacuum measurement leaves Eve guessing uniformly.
 */
inline Pulse mim_attack_step(Stage stage, const Pulse& incident, const ManInTheMiddle& cfg,
                             const ChannelContext& ctx, EveState& eve, RngStream& rng) {
    const double t = ctx.transmittance;
    const double n = ctx.source_mean;
    switch (stage) {
        case Stage::One: {
            const double budget = std::min(incident.mean, (1.0 - t * t) * n);
            const PhotonCounts counts = sample_photon_counts(incident.angle, budget, rng);
            eve.counts_stage1 = counts;
            eve.set_stage_estimates(detail::estimate_or_none(counts, incident.angle), std::nullopt);
            const PolarizationAngle toward_bob = eve.phi1_hat ? *eve.phi1_hat : detail::random_angle(rng);
            if (!eve.phi1_hat) {
                // Keep θ̂_B = φ̂₂ - φ̂₁ meaningful: φ̂₁ is whatever Eve sent Bob.
                eve.phi1_hat = toward_bob;
            }
            return {toward_bob, t * n};
        }
        case Stage::Two: {
            const double budget = std::min(incident.mean, t * (1.0 - t * t) * n);
            const PhotonCounts counts = sample_photon_counts(incident.angle, budget, rng);
            eve.counts_stage2 = counts;
            auto phi2 = detail::estimate_or_none(counts, incident.angle);
            if (!phi2) {
                phi2 = detail::random_angle(rng);
            }
            eve.set_stage_estimates(eve.phi1_hat, phi2);
            eve.own_rotation = detail::random_angle(rng);
            return {*eve.phi1_hat + *eve.own_rotation, t * t * n};
        }
        case Stage::Three:
        default: {
            eve.eve_bit = detail::stage3_bit(cfg.decision, eve.own_rotation, incident.angle, incident.mean, rng);
            return {detail::reencode(eve.eve_bit, eve.theta_b_hat, rng), t * t * t * n};
        }
    }
}

/// Dispatch one traversal to the active attack; NoAttack is plain channel loss.
inline Pulse attack_traversal(const AttackKind& attack, Stage stage, const Pulse& incident,
                              const ChannelContext& ctx, EveState& eve, RngStream& rng) {
    return std::visit(
        [&](const auto& a) -> Pulse {
            using A = std::decay_t<decltype(a)>;
            if constexpr (std::is_same_v<A, NoAttack>) {
                return {incident.angle, ctx.transmittance * incident.mean};
            } else if constexpr (std::is_same_v<A, InterceptResend>) {
                return ir_attack_step(stage, incident, a, ctx, eve, rng);
            } else if constexpr (std::is_same_v<A, PhotonNumberSplitting>) {
                return pns_attack_step(stage, incident, a, ctx, eve, rng);
            } else {
                return mim_attack_step(stage, incident, a, ctx, eve, rng);
            }
        },
        attack);
}

}  // namespace qkd3
