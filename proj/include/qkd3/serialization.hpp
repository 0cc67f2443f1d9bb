/**
 * JSON forms of session configuration, attack selection and transcripts.
 *
 * Transcript documents carry "schema": "qkd3.transcript" and an integer
 * "version". The summary block is always present; the per-pulse array only
 * when requested.
 */
#pragma once

#include <cstdint>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>

#include <nlohmann/json.hpp>

#include "qkd3/attacks.hpp"
#include "qkd3/io.hpp"
#include "qkd3/protocol.hpp"

namespace qkd3 {

using ojson = nlohmann::ordered_json;

inline constexpr int kTranscriptVersion = 1;

/// Throw if `obj` holds a key outside `allowed`.
inline void reject_unknown_keys(const nlohmann::json& obj, const std::set<std::string>& allowed,
                                const std::string& where) {
    if (!obj.is_object()) {
        throw std::invalid_argument(where + ": expected a JSON object");
    }
    for (const auto& [key, value] : obj.items()) {
        if (!allowed.count(key)) {
            throw std::invalid_argument(where + ": unknown key '" + key + "'");
        }
    }
}

namespace detail {

inline std::string decision_name(Stage3Decision d) { return d == Stage3Decision::Ideal ? "ideal" : "counted"; }

inline Stage3Decision parse_decision(const std::string& s) {
    if (s == "ideal") {
        return Stage3Decision::Ideal;
    }
    if (s == "counted") {
        return Stage3Decision::Counted;
    }
    throw std::invalid_argument("attack: decision must be 'ideal' or 'counted'");
}

inline const char* fate_name(PulseFate f) {
    switch (f) {
        case PulseFate::RetainedByBob:
            return "retained_by_bob";
        case PulseFate::RetainedByAlice:
            return "retained_by_alice";
        default:
            return "completed";
    }
}

inline ojson bit_json(BitValue b) {
    if (b == BitValue::Inconclusive) {
        return "inconclusive";
    }
    return static_cast<int>(b);
}

inline ojson angle_json(const std::optional<PolarizationAngle>& a) {
    if (!a) {
        return nullptr;
    }
    return a->radians();
}

template <class T>
ojson optional_json(const std::optional<T>& v) {
    if (!v) {
        return nullptr;
    }
    return *v;
}

}  // namespace detail

inline ojson attack_to_json(const AttackKind& attack) {
    ojson j;
    j["kind"] = std::string(attack_name(attack));
    std::visit(
        [&](const auto& a) {
            using A = std::decay_t<decltype(a)>;
            if constexpr (std::is_same_v<A, InterceptResend>) {
                j["resend"] = a.resend == ResendMode::Idealized ? "idealized" : "operational";
                j["decision"] = detail::decision_name(a.decision);
            } else if constexpr (std::is_same_v<A, PhotonNumberSplitting>) {
                j["tap_fraction"] = detail::optional_json(a.tap_fraction);
                j["decision"] = detail::decision_name(a.decision);
            } else if constexpr (std::is_same_v<A, ManInTheMiddle>) {
                j["decision"] = detail::decision_name(a.decision);
            }
        },
        attack);
    return j;
}

/**
 * {"kind": "none" | "intercept_resend" | "photon_number_splitting" |
 *  "man_in_the_middle", ...}; "ir", "pns" and "mim" are accepted as short kinds.
 */
inline AttackKind attack_from_json(const nlohmann::json& j) {
    if (j.is_string()) {
        return attack_from_json(nlohmann::json{{"kind", j}});
    }
    reject_unknown_keys(j, {"kind", "resend", "decision", "tap_fraction"}, "attack");
    const std::string kind = j.value("kind", "none");
    if (kind == "none") {
        reject_unknown_keys(j, {"kind"}, "attack none");
        return NoAttack{};
    }
    if (kind == "intercept_resend" || kind == "ir") {
        reject_unknown_keys(j, {"kind", "resend", "decision"}, "attack intercept_resend");
        InterceptResend a;
        const std::string resend = j.value("resend", "idealized");
        if (resend == "operational") {
            a.resend = ResendMode::Operational;
        } else if (resend != "idealized") {
            throw std::invalid_argument("attack: resend must be 'idealized' or 'operational'");
        }
        a.decision = detail::parse_decision(j.value("decision", "ideal"));
        return a;
    }
    if (kind == "photon_number_splitting" || kind == "pns") {
        reject_unknown_keys(j, {"kind", "tap_fraction", "decision"}, "attack photon_number_splitting");
        PhotonNumberSplitting a;
        if (j.contains("tap_fraction") && !j["tap_fraction"].is_null()) {
            a.tap_fraction = j["tap_fraction"].get<double>();
        }
        a.decision = detail::parse_decision(j.value("decision", "ideal"));
        validate_attack(a);
        return a;
    }
    if (kind == "man_in_the_middle" || kind == "mim") {
        reject_unknown_keys(j, {"kind", "decision"}, "attack man_in_the_middle");
        ManInTheMiddle a;
        a.decision = detail::parse_decision(j.value("decision", "counted"));
        return a;
    }
    throw std::invalid_argument("attack: unknown kind '" + kind + "'");
}

inline const std::set<std::string>& session_keys() {
    static const std::set<std::string> keys{"mean_n",           "transmittance",      "n_pulses",
                                            "p_auth_bob",       "p_auth_alice",       "misalignment_sigma",
                                            "qber_sample_fraction", "min_raw_rate", "seed"};
    return keys;
}

inline ojson session_to_json(const SessionConfig& c) {
    ojson j;
    j["mean_n"] = c.mean_n;
    j["transmittance"] = c.transmittance;
    j["n_pulses"] = c.n_pulses;
    j["p_auth_bob"] = c.p_auth_bob;
    j["p_auth_alice"] = c.p_auth_alice;
    j["misalignment_sigma"] = c.misalignment_sigma;
    j["qber_sample_fraction"] = c.qber_sample_fraction;
    j["min_raw_rate"] = detail::optional_json(c.min_raw_rate);
    j["seed"] = c.seed;
    return j;
}

/// Fill `c` from the session keys present in `j`; other keys are ignored here.
inline void session_from_json(const nlohmann::json& j, SessionConfig& c) {
    if (j.contains("mean_n")) c.mean_n = j["mean_n"].get<double>();
    if (j.contains("transmittance")) c.transmittance = j["transmittance"].get<double>();
    if (j.contains("n_pulses")) c.n_pulses = j["n_pulses"].get<std::uint64_t>();
    if (j.contains("p_auth_bob")) c.p_auth_bob = j["p_auth_bob"].get<double>();
    if (j.contains("p_auth_alice")) c.p_auth_alice = j["p_auth_alice"].get<double>();
    if (j.contains("misalignment_sigma")) c.misalignment_sigma = j["misalignment_sigma"].get<double>();
    if (j.contains("qber_sample_fraction")) c.qber_sample_fraction = j["qber_sample_fraction"].get<double>();
    if (j.contains("min_raw_rate") && !j["min_raw_rate"].is_null()) c.min_raw_rate = j["min_raw_rate"].get<double>();
    if (j.contains("seed")) c.seed = j["seed"].get<std::uint64_t>();
}

inline ojson transcript_summary_json(const Transcript& tr) {
    ojson s;
    s["n_pulses"] = tr.config.n_pulses;
    s["retained_by_bob"] = tr.retained_by_bob;
    s["retained_by_alice"] = tr.retained_by_alice;
    s["completed"] = tr.completed;
    s["sifted"] = tr.sifted.size();
    s["disclosed"] = tr.disclosed.size();
    s["key_bits"] = tr.key.size();
    s["raw_rate"] = tr.raw_rate;
    s["qber_estimate"] = detail::optional_json(tr.qber_estimate);
    s["auth_error_rate_bob"] = detail::optional_json(tr.auth.bob);
    s["auth_samples_bob"] = tr.auth.bob_samples;
    s["auth_error_rate_alice"] = detail::optional_json(tr.auth.alice);
    s["auth_samples_alice"] = tr.auth.alice_samples;
    s["eve_agreement"] = detail::optional_json(eve_agreement(tr));
    s["abandoned"] = tr.abandoned;
    return s;
}

inline ojson pulse_to_json(const PulseRecord& p) {
    ojson j;
    j["bit"] = p.bit;
    j["theta_x"] = p.theta_x.radians();
    j["theta_a"] = p.theta_a.radians();
    j["theta_b"] = p.theta_b.radians();
    j["phi1"] = p.phi1.radians();
    j["phi2"] = p.phi2.radians();
    j["phi3"] = p.phi3.radians();
    j["fate"] = detail::fate_name(p.fate);
    if (p.bob_counts) {
        j["bob_counts"] = ojson::array({p.bob_counts->n_h, p.bob_counts->n_v});
    } else {
        j["bob_counts"] = nullptr;
    }
    j["bob_bit"] = detail::bit_json(p.bob_bit);
    j["auth_estimate"] = detail::angle_json(p.auth_estimate);
    j["eve_bit"] = detail::bit_json(p.eve_bit);
    return j;
}

inline ojson transcript_to_json(const Transcript& tr, bool include_pulses) {
    ojson j;
    j["schema"] = "qkd3.transcript";
    j["version"] = kTranscriptVersion;
    j["tool"] = kToolVersion;
    j["config"] = session_to_json(tr.config);
    j["attack"] = attack_to_json(tr.attack);
    j["summary"] = transcript_summary_json(tr);
    if (include_pulses) {
        auto arr = ojson::array();
        for (const auto& p : tr.pulses) {
            arr.push_back(pulse_to_json(p));
        }
        j["pulses"] = std::move(arr);
    }
    return j;
}

/// Fields of a transcript document needed for key-rate accounting.
struct TranscriptSummary {
    SessionConfig config;
    double raw_rate = 0.0;
    std::optional<double> qber;
    std::optional<double> auth_bob;
    std::string attack;
};

inline TranscriptSummary transcript_summary_from_json(const nlohmann::json& j) {
    if (j.value("schema", "") != "qkd3.transcript") {
        throw std::invalid_argument("transcript: missing or wrong schema tag");
    }
    if (j.value("version", 0) != kTranscriptVersion) {
        throw std::invalid_argument("transcript: unsupported version");
    }
    TranscriptSummary s;
    session_from_json(j.at("config"), s.config);
    const auto& sum = j.at("summary");
    s.raw_rate = sum.at("raw_rate").get<double>();
    if (!sum.at("qber_estimate").is_null()) s.qber = sum["qber_estimate"].get<double>();
    if (!sum.at("auth_error_rate_bob").is_null()) s.auth_bob = sum["auth_error_rate_bob"].get<double>();
    s.attack = j.at("attack").at("kind").get<std::string>();
    return s;
}

}  // namespace qkd3
