/**
 * Experiment commands behind the qkd3 tool. Each takes the effective JSON
 * configuration (file contents with command-line overrides applied) and
 * returns a Table whose metadata echoes that configuration, so re-running
 * the echoed config reproduces the output exactly.
 */
#pragma once

#include <cmath>
#include <cstdint>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "qkd3/analysis.hpp"
#include "qkd3/io.hpp"
#include "qkd3/protocol.hpp"
#include "qkd3/serialization.hpp"
#include "qkd3/specfun.hpp"

namespace qkd3::cli {

using json = nlohmann::json;

/// Keys every command understands; "out" and "threads" never change results.
inline const std::set<std::string> kCommonKeys{"seed", "trials", "threads", "format", "out"};

namespace detail {

inline std::set<std::string> with_common(std::set<std::string> keys) {
    keys.insert(kCommonKeys.begin(), kCommonKeys.end());
    return keys;
}

inline std::vector<double> grid(const json& cfg, const std::string& key, std::vector<double> fallback) {
    if (!cfg.contains(key)) {
        return fallback;
    }
    const auto& v = cfg.at(key);
    std::vector<double> out = v.is_array() ? v.get<std::vector<double>>() : std::vector<double>{v.get<double>()};
    if (out.empty()) {
        throw std::invalid_argument(key + ": grid must not be empty");
    }
    return out;
}

inline std::uint64_t require_seed(const json& cfg) {
    if (!cfg.contains("seed")) {
        throw std::invalid_argument("seed is required (set it in the config or pass --seed)");
    }
    return cfg.at("seed").get<std::uint64_t>();
}

inline McOptions mc_options(const json& cfg) {
    McOptions opt;
    opt.seed = require_seed(cfg);
    opt.trials = cfg.value("trials", kDefaultTrials);
    opt.threads = cfg.value("threads", 0u);
    return opt;
}

inline Table make_table(const std::string& command, const json& cfg, std::vector<std::string> columns) {
    Table t;
    t.columns = std::move(columns);
    t.metadata["tool"] = kToolVersion;
    t.metadata["command"] = command;
    ojson echo = ojson::object();
    for (const auto& [key, value] : cfg.items()) {
        if (key != "out" && key != "threads") {
            echo[key] = value;
        }
    }
    t.metadata["seed"] = cfg.contains("seed") ? ojson(cfg.at("seed")) : ojson(nullptr);
    t.metadata["config"] = std::move(echo);
    return t;
}

inline Cell opt_cell(const std::optional<double>& v) {
    if (!v) {
        return std::monostate{};
    }
    return *v;
}

inline Cell u64_cell(std::uint64_t v) { return static_cast<std::int64_t>(v); }

}  // namespace detail

// ---------------------------------------------------------------------------
// attack-sweep
// ---------------------------------------------------------------------------

struct ScenarioBudget {
    double t = 1.0;
    double n1 = 0.0;
    double n2 = 0.0;
};

/// Photon numbers Eve measures at stages 1 and 2 for a named scenario.
inline ScenarioBudget scenario_budget(const std::string& scenario, double n, double t) {
    if (scenario == "ir_lossless") {
        return {1.0, n, n};
    }
    if (scenario == "ir_lossy") {
        return {t, n, t * n};
    }
    if (scenario == "pns_lossless") {
        return {1.0, 0.5 * n, 0.5 * n};
    }
    if (scenario == "pns_lossy") {
        return {t, (1.0 - t) * n, (1.0 - t) * t * n};
    }
    throw std::invalid_argument("unknown scenario '" + scenario +
                                "' (expected ir_lossless, ir_lossy, pns_lossless or pns_lossy)");
}

inline const std::vector<double> kFig2NGrid{0.5, 1, 2, 3, 5, 7, 10, 15, 20};
inline const std::vector<double> kFig2TGrid{1.0, 0.75, 0.5, 0.25};
inline const std::vector<double> kFig4NGrid{0.1, 0.25, 0.5, 1, 2, 4, 8};
inline const std::vector<double> kFig4TGrid{0.9, 0.5, 0.25, 0.1};

inline Table cmd_attack_sweep(const json& cfg) {
    reject_unknown_keys(cfg, detail::with_common({"scenario", "n_grid", "t_grid"}), "attack-sweep config");
    const McOptions opt = detail::mc_options(cfg);
    std::vector<std::string> scenarios{"ir_lossless", "ir_lossy", "pns_lossless", "pns_lossy"};
    if (cfg.contains("scenario")) {
        const auto& s = cfg.at("scenario");
        scenarios = s.is_array() ? s.get<std::vector<std::string>>() : std::vector<std::string>{s.get<std::string>()};
        if (scenarios.empty()) {
            throw std::invalid_argument("scenario: list must not be empty");
        }
        for (const auto& name : scenarios) {
            scenario_budget(name, 1.0, 1.0);
        }
    }
    const auto n_grid = detail::grid(cfg, "n_grid", kFig2NGrid);
    const auto t_grid = detail::grid(cfg, "t_grid", kFig2TGrid);

    Table table = detail::make_table(
        "attack-sweep", cfg, {"scenario", "N", "t", "N1", "N2", "p_hat", "ci", "errors", "trials", "seed", "note"});
    for (const auto& scenario : scenarios) {
        const bool lossless = scenario.find("lossless") != std::string::npos;
        const std::vector<double> ts = lossless ? std::vector<double>{1.0} : t_grid;
        for (double t : ts) {
            for (double n : n_grid) {
                try {
                    const auto b = scenario_budget(scenario, n, t);
                    if (b.n1 <= 0.0 || b.n2 <= 0.0) {
                        if (!(n > 0.0) || !(t > 0.0 && t <= 1.0)) {
                            throw std::domain_error("need N > 0 and t in (0, 1]");
                        }
                        // Eve taps nothing at this point: she can only guess.
                        table.add_row({scenario, n, b.t, b.n1, b.n2, 0.5, 0.0, std::int64_t{0}, std::int64_t{0},
                                       detail::u64_cell(opt.seed), std::string("no_photons_for_eve")});
                        continue;
                    }
                    const auto e = mc_pe_ir_pns(b.n1, b.n2, opt);
                    table.add_row({scenario, n, b.t, b.n1, b.n2, e.p_hat, e.ci_half_width, detail::u64_cell(e.errors),
                                   detail::u64_cell(e.trials), detail::u64_cell(e.seed), std::string()});
                } catch (const std::exception& ex) {
                    table.failures.push_back(scenario + " N=" + format_double(n) + " t=" + format_double(t) + ": " +
                                             ex.what());
                }
            }
        }
    }
    return table;
}

// ---------------------------------------------------------------------------
// auth-sweep
// ---------------------------------------------------------------------------

inline Table cmd_auth_sweep(const json& cfg) {
    reject_unknown_keys(cfg, detail::with_common({"n_grid", "t_grid"}), "auth-sweep config");
    const McOptions opt = detail::mc_options(cfg);
    const auto n_grid = detail::grid(cfg, "n_grid", kFig4NGrid);
    const auto t_grid = detail::grid(cfg, "t_grid", kFig4TGrid);
    Table table = detail::make_table("auth-sweep", cfg,
                                     {"t", "N", "pe_norm_mc", "pe_norm_ci", "pe_norm_analytic", "pe_mim_mc",
                                      "pe_mim_ci", "difference", "trials", "seed", "note"});
    for (double t : t_grid) {
        for (double n : n_grid) {
            try {
                const auto norm = mc_pe_auth_norm(t, n, opt);
                const double analytic = pe_auth_norm_analytic(t, n);
                if (t == 1.0) {
                    table.add_row({t, n, norm.p_hat, norm.ci_half_width, analytic, std::monostate{},
                                   std::monostate{}, std::monostate{}, detail::u64_cell(opt.trials),
                                   detail::u64_cell(opt.seed), std::string("mim_omitted_t1")});
                    continue;
                }
                const auto mim = mc_pe_auth_mim(t, n, opt);
                table.add_row({t, n, norm.p_hat, norm.ci_half_width, analytic, mim.p_hat, mim.ci_half_width,
                               mim.p_hat - norm.p_hat, detail::u64_cell(opt.trials), detail::u64_cell(opt.seed),
                               std::string()});
            } catch (const std::exception& ex) {
                table.failures.push_back("t=" + format_double(t) + " N=" + format_double(n) + ": " + ex.what());
            }
        }
    }
    return table;
}

// ---------------------------------------------------------------------------
// keyrate
// ---------------------------------------------------------------------------

/// Expected sifted-and-kept bits per pulse slot of a noiseless session.
inline double expected_raw_rate(double mean_n, double t, double p_auth_bob, double p_auth_alice,
                                double qber_fraction) {
    return (1.0 - p_auth_bob) * (1.0 - p_auth_alice) * -std::expm1(-t * t * t * mean_n) * (1.0 - qber_fraction);
}

/// Eve's bit error used in the key rate; "ir_lossy" is the (N, tN) estimate.
inline EstimateWithCI eve_pe_for(const std::string& source, double n, double t, const McOptions& opt) {
    const auto b = scenario_budget(source, n, t);
    if (b.n1 <= 0.0 || b.n2 <= 0.0) {
        return EstimateWithCI::from_counts(opt.trials / 2, opt.trials - (opt.trials % 2), opt.seed);
    }
    return mc_pe_ir_pns(b.n1, b.n2, opt);
}

inline Table cmd_keyrate(const json& cfg) {
    reject_unknown_keys(cfg,
                        detail::with_common({"n_grid", "t_grid", "q_grid", "f_grid", "raw_rate", "eve_pe",
                                             "eve_pe_source", "transcript"}),
                        "keyrate config");
    const McOptions opt = detail::mc_options(cfg);
    const std::string source = cfg.value("eve_pe_source", "ir_lossy");
    scenario_budget(source, 1.0, 0.5);
    Table table = detail::make_table("keyrate", cfg,
                                     {"N", "t", "Q", "f", "eve_pe", "R", "K", "qber_threshold", "note"});

    auto eve_pe = [&](double n, double t) {
        if (cfg.contains("eve_pe")) {
            return cfg.at("eve_pe").get<double>();
        }
        return std::min(0.5, eve_pe_for(source, n, t, opt).p_hat);
    };

    if (cfg.contains("transcript")) {
        std::ifstream in(cfg.at("transcript").get<std::string>());
        if (!in) {
            throw std::invalid_argument("keyrate: cannot open transcript file");
        }
        const auto s = transcript_summary_from_json(json::parse(in));
        const double n = s.config.mean_n;
        const double t = s.config.transmittance;
        const double pe = eve_pe(n, t);
        std::optional<double> f;
        std::string note;
        if (!s.auth_bob) {
            note = "no_authentication_data";
        } else if (t >= 1.0) {
            note = "mim_reference_undefined_at_t1";
        } else {
            try {
                f = mim_fraction(*s.auth_bob, pe_auth_norm_analytic(t, n), mc_pe_auth_mim(t, n, opt).p_hat);
            } catch (const std::domain_error&) {
                note = "degenerate_mim_fraction";
            }
        }
        std::optional<double> k;
        std::optional<double> threshold;
        if (f && s.qber) {
            k = key_rate({s.raw_rate, *f, pe, std::min(0.5, *s.qber)});
        }
        if (f && pe > 0.0) {
            threshold = qber_threshold(*f, pe);
        }
        table.add_row({n, t, detail::opt_cell(s.qber), detail::opt_cell(f), pe, s.raw_rate, detail::opt_cell(k),
                       detail::opt_cell(threshold), note});
        return table;
    }

    const auto n_grid = detail::grid(cfg, "n_grid", {1, 2, 3, 5});
    const auto t_grid = detail::grid(cfg, "t_grid", {1.0, 0.5});
    const auto q_grid = detail::grid(cfg, "q_grid", {0.0, 0.01, 0.02, 0.05, 0.1});
    const auto f_grid = detail::grid(cfg, "f_grid", {0.0});
    for (double n : n_grid) {
        for (double t : t_grid) {
            double pe = 0.0;
            double r = 0.0;
            try {
                pe = eve_pe(n, t);
                r = cfg.contains("raw_rate") ? cfg.at("raw_rate").get<double>()
                                             : expected_raw_rate(n, t, 0.1, 0.1, 0.1);
            } catch (const std::exception& ex) {
                table.failures.push_back("N=" + format_double(n) + " t=" + format_double(t) + ": " + ex.what());
                continue;
            }
            for (double f : f_grid) {
                for (double q : q_grid) {
                    try {
                        const double k = key_rate({r, f, pe, q});
                        const double threshold = pe > 0.0 ? qber_threshold(f, pe) : 0.0;
                        table.add_row({n, t, q, f, pe, r, k, threshold, std::string()});
                    } catch (const std::exception& ex) {
                        table.failures.push_back("N=" + format_double(n) + " t=" + format_double(t) +
                                                 " Q=" + format_double(q) + ": " + ex.what());
                    }
                }
            }
        }
    }
    return table;
}

// ---------------------------------------------------------------------------
// efficiency
// ---------------------------------------------------------------------------

inline Table cmd_efficiency(const json& cfg) {
    reject_unknown_keys(cfg, detail::with_common({"n_grid", "l_grid", "alpha", "passes"}), "efficiency config");
    const auto n_grid = detail::grid(cfg, "n_grid", {0.5, 1, 2, 3, 5, 10});
    const auto l_grid = detail::grid(cfg, "l_grid", {0, 5, 10, 15, 20, 25, 30, 40, 50});
    const double alpha = cfg.value("alpha", 0.2);
    const int passes = cfg.value("passes", 3);
    Table table =
        detail::make_table("efficiency", cfg, {"N", "l_km", "t", "E", "advantage_distance_km", "crossing_km"});
    for (double n : n_grid) {
        double adv = 0.0;
        double crossing = 0.0;
        try {
            adv = advantage_distance(n, alpha);
            crossing = efficiency_crossing(n, alpha, passes);
        } catch (const std::exception& ex) {
            table.failures.push_back("N=" + format_double(n) + ": " + ex.what());
            continue;
        }
        for (double l : l_grid) {
            try {
                table.add_row({n, l, transmittance(l, alpha), rate_efficiency(n, l, alpha, passes), adv, crossing});
            } catch (const std::exception& ex) {
                table.failures.push_back("N=" + format_double(n) + " l=" + format_double(l) + ": " + ex.what());
            }
        }
    }
    return table;
}

// ---------------------------------------------------------------------------
// protocol-sim
// ---------------------------------------------------------------------------

struct ProtocolSimResult {
    Table summary;
    Transcript transcript;
};

inline ProtocolSimResult run_protocol_sim(const json& cfg) {
    std::set<std::string> keys = session_keys();
    keys.insert({"attack", "include_pulses", "transcript_out", "eve_pe_source"});
    reject_unknown_keys(cfg, detail::with_common(keys), "protocol-sim config");
    SessionConfig session;
    session_from_json(cfg, session);
    session.seed = detail::require_seed(cfg);
    const AttackKind attack = cfg.contains("attack") ? attack_from_json(cfg.at("attack")) : AttackKind{NoAttack{}};
    McOptions opt = detail::mc_options(cfg);
    const unsigned threads = cfg.value("threads", 0u);

    Transcript tr = run_session(session, attack, threads);

    const double n = session.mean_n;
    const double t = session.transmittance;
    const double pe_norm = pe_auth_norm_analytic(t, n);
    std::optional<double> pe_mim;
    std::optional<double> f;
    std::string note;
    if (t < 1.0) {
        pe_mim = mc_pe_auth_mim(t, n, opt).p_hat;
    }
    if (!tr.auth.bob) {
        note = "no_authentication_data";
    } else if (!pe_mim) {
        note = "mim_reference_undefined_at_t1";
    } else {
        try {
            f = mim_fraction(*tr.auth.bob, pe_norm, *pe_mim);
        } catch (const std::domain_error&) {
            note = "degenerate_mim_fraction";
        }
    }
    const double eve_pe = std::min(0.5, eve_pe_for(cfg.value("eve_pe_source", "ir_lossy"), n, t, opt).p_hat);
    std::optional<double> k;
    if (f && tr.qber_estimate) {
        k = key_rate({tr.raw_rate, *f, eve_pe, std::min(0.5, *tr.qber_estimate)});
    }
    if (tr.abandoned) {
        note += note.empty() ? "abandoned_low_raw_rate" : ";abandoned_low_raw_rate";
    }

    Table table = detail::make_table(
        "protocol-sim", cfg,
        {"attack", "n_pulses", "completed", "sifted", "key_bits", "raw_rate", "qber", "auth_bob", "auth_alice",
         "pe_norm_analytic", "pe_mim_mc", "inferred_f", "eve_pe", "K", "eve_agreement", "note"});
    table.add_row({std::string(attack_name(attack)), detail::u64_cell(session.n_pulses),
                   detail::u64_cell(tr.completed), detail::u64_cell(tr.sifted.size()),
                   detail::u64_cell(tr.key.size()), tr.raw_rate, detail::opt_cell(tr.qber_estimate),
                   detail::opt_cell(tr.auth.bob), detail::opt_cell(tr.auth.alice), pe_norm, detail::opt_cell(pe_mim),
                   detail::opt_cell(f), eve_pe, detail::opt_cell(k), detail::opt_cell(eve_agreement(tr)), note});

    if (cfg.contains("transcript_out")) {
        std::ofstream out(cfg.at("transcript_out").get<std::string>());
        if (!out) {
            throw std::runtime_error("protocol-sim: cannot write transcript file");
        }
        out << transcript_to_json(tr, cfg.value("include_pulses", false)).dump(2) << '\n';
    }
    return {std::move(table), std::move(tr)};
}

inline Table cmd_protocol_sim(const json& cfg) { return run_protocol_sim(cfg).summary; }

// ---------------------------------------------------------------------------
// specfun-table
// ---------------------------------------------------------------------------

inline Table cmd_specfun_table(const json& cfg) {
    reject_unknown_keys(cfg, detail::with_common({"x_grid"}), "specfun-table config");
    const auto x_grid = detail::grid(cfg, "x_grid", {0, 0.1, 0.5, 1, 2, 5, 8, 10, 20, 50, 100});
    Table table = detail::make_table(
        "specfun-table", cfg,
        {"x", "I0", "I0_abs_error", "L0", "L0_abs_error", "I0_minus_L0", "I0_minus_L0_abs_error", "pe_auth_norm_tN_2x"});
    for (double x : x_grid) {
        try {
            const auto i0 = bessel_i0(x);
            const auto l0 = struve_l0(x);
            const auto d = i0_minus_l0(x);
            Cell pe = std::monostate{};
            if (x > 0.0 && 2.0 * x <= kSpecFunMaxArg) {
                pe = pe_auth_norm_analytic(1.0, 2.0 * x);
            }
            table.add_row({x, i0.value, i0.abs_error, l0.value, l0.abs_error, d.value, d.abs_error, pe});
        } catch (const std::exception& ex) {
            table.failures.push_back("x=" + format_double(x) + ": " + ex.what());
        }
    }
    return table;
}

// ---------------------------------------------------------------------------

using CommandFn = std::function<Table(const json&)>;

inline const std::map<std::string, CommandFn>& commands() {
    static const std::map<std::string, CommandFn> table{
        {"attack-sweep", cmd_attack_sweep}, {"auth-sweep", cmd_auth_sweep},
        {"keyrate", cmd_keyrate},           {"efficiency", cmd_efficiency},
        {"protocol-sim", cmd_protocol_sim}, {"specfun-table", cmd_specfun_table},
    };
    return table;
}

}  // namespace qkd3::cli
