#include <cmath>
#include <stdexcept>
#include <vector>

#include <gtest/gtest.h>

#include "qkd3/analysis.hpp"
#include "qkd3/photon.hpp"
#include "qkd3/specfun.hpp"

using namespace qkd3;

namespace {

McOptions opts(std::uint64_t seed, std::uint64_t trials = 100000, unsigned threads = 1) {
    McOptions o;
    o.seed = seed;
    o.trials = trials;
    o.threads = threads;
    return o;
}

double joint_sigma(const EstimateWithCI& a, const EstimateWithCI& b) {
    return std::sqrt(a.sigma() * a.sigma() + b.sigma() * b.sigma());
}

}  // namespace

TEST(EstimateWithCI, FromCounts) {
    const auto e = EstimateWithCI::from_counts(200, 1000, 5);
    EXPECT_DOUBLE_EQ(e.p_hat, 0.2);
    EXPECT_DOUBLE_EQ(e.ci_half_width, 3.0 * std::sqrt(0.2 * 0.8 / 1000.0));
    EXPECT_EQ(e.seed, 5u);
}

TEST(Estimators, RejectBadArguments) {
    EXPECT_THROW(mc_pe_ir_pns(0.0, 1.0, opts(1)), std::domain_error);
    EXPECT_THROW(mc_pe_ir_pns(1.0, -1.0, opts(1)), std::domain_error);
    EXPECT_THROW(mc_pe_ir_pns(1.0, 1.0, opts(1, 999)), std::invalid_argument);
    EXPECT_THROW(mc_pe_auth_norm(0.0, 1.0, opts(1)), std::domain_error);
    EXPECT_THROW(mc_pe_auth_norm(1.0, 0.0, opts(1)), std::domain_error);
    EXPECT_THROW(mc_pe_auth_mim(1.0, 1.0, opts(1)), std::domain_error);
    EXPECT_THROW(mc_pe_auth_mim(0.5, 0.0, opts(1)), std::domain_error);
}

TEST(Estimators, OutputsAreProbabilities) {
    for (double n : {0.01, 1.0, 30.0}) {
        for (const auto& e : {mc_pe_ir_pns(n, n, opts(2, 2000)), mc_pe_auth_norm(0.5, n, opts(2, 2000)),
                              mc_pe_auth_mim(0.5, n, opts(2, 2000))}) {
            EXPECT_GE(e.p_hat, 0.0);
            EXPECT_LE(e.p_hat, 1.0);
            EXPECT_EQ(e.trials, 2000u);
        }
    }
}

TEST(IrPns, ConsistentEstimatorLimit) { EXPECT_LT(mc_pe_ir_pns(1e4, 1e4, opts(3)).p_hat, 0.01); }

TEST(IrPns, SymmetricInBudgets) {
    for (auto [a, b] : std::vector<std::pair<double, double>>{{1, 5}, {0.5, 3}, {2, 10}}) {
        const auto ab = mc_pe_ir_pns(a, b, opts(4));
        const auto ba = mc_pe_ir_pns(b, a, opts(5));
        EXPECT_LE(std::fabs(ab.p_hat - ba.p_hat), 3.0 * joint_sigma(ab, ba)) << a << "," << b;
    }
}

TEST(IrPns, NonIncreasingInEachBudget) {
    const std::vector<double> grid{1, 2, 5, 10, 20};
    for (double fixed : {1.0, 5.0}) {
        for (std::size_t i = 0; i + 1 < grid.size(); ++i) {
            const auto lo = mc_pe_ir_pns(grid[i], fixed, opts(6, 50000));
            const auto hi = mc_pe_ir_pns(grid[i + 1], fixed, opts(6, 50000));
            EXPECT_GE(lo.p_hat, hi.p_hat - 3.0 * joint_sigma(lo, hi));
            const auto lo2 = mc_pe_ir_pns(fixed, grid[i], opts(7, 50000));
            const auto hi2 = mc_pe_ir_pns(fixed, grid[i + 1], opts(7, 50000));
            EXPECT_GE(lo2.p_hat, hi2.p_hat - 3.0 * joint_sigma(lo2, hi2));
        }
    }
}

TEST(IrPns, HalfTurnPriorGivesSameResult) {
    // Drawing the stage angles on [0, π) instead of [0, 2π) leaves the error
    // probability unchanged, because the error condition is π-periodic.
    const std::uint64_t trials = 100000;
    std::uint64_t errors = 0;
    for (std::uint64_t i = 0; i < trials; ++i) {
        RngStream rng{99, i};
        auto draw = [&](double n) {
            const auto truth = PolarizationAngle::from_turns(rng.next_u64() >> 1);
            return std::pair{truth, estimate_angle(sample_conclusive_counts(truth, n, rng), truth)};
        };
        const auto [t1, e1] = draw(2.0);
        const auto [t2, e2] = draw(3.0);
        errors += bit_error_condition((e2 - e1) - (t2 - t1)) ? 1 : 0;
    }
    const auto half = EstimateWithCI::from_counts(errors, trials, 99);
    const auto full = mc_pe_ir_pns(2.0, 3.0, opts(98));
    EXPECT_LE(std::fabs(half.p_hat - full.p_hat), 3.0 * joint_sigma(half, full));
}

TEST(AuthNorm, AgreesWithClosedForm) {
    for (double t : {0.1, 0.5, 1.0}) {
        for (double n : {0.25, 1.0, 3.0, 8.0}) {
            const auto e = mc_pe_auth_norm(t, n, opts(8));
            EXPECT_LE(std::fabs(e.p_hat - pe_auth_norm_analytic(t, n)), 3.0 * e.sigma() + 1e-4) << t << "," << n;
        }
    }
}

TEST(AuthNorm, Limits) {
    const auto small = mc_pe_auth_norm(1.0, 1e-6, opts(9));
    EXPECT_LE(std::fabs(small.p_hat - (0.5 - 1.0 / kPi)), 3.0 * small.sigma());
    EXPECT_LT(mc_pe_auth_norm(1.0, 64.0, opts(9)).p_hat, 0.005);
}

TEST(AuthMim, Limits) {
    const auto small = mc_pe_auth_mim(0.5, 1e-4, opts(10));
    EXPECT_LE(std::fabs(small.p_hat - 0.5), 3.0 * small.sigma());
    EXPECT_LT(mc_pe_auth_mim(0.5, 64.0, opts(10)).p_hat, 0.01);
}

TEST(AuthMim, NeverBelowNormalOperation) {
    for (double t : {0.1, 0.5, 0.9}) {
        for (double n : {0.1, 0.5, 1.0, 2.0, 4.0, 8.0}) {
            const auto mim = mc_pe_auth_mim(t, n, opts(11, 50000));
            const auto norm = mc_pe_auth_norm(t, n, opts(12, 50000));
            EXPECT_GE(mim.p_hat, norm.p_hat - 3.0 * joint_sigma(mim, norm)) << t << "," << n;
        }
    }
}

TEST(Estimators, DeterministicAcrossThreads) {
    for (unsigned threads : {2u, 3u, 8u}) {
        EXPECT_EQ(mc_pe_ir_pns(2, 3, opts(13, 20000, 1)).errors, mc_pe_ir_pns(2, 3, opts(13, 20000, threads)).errors);
        EXPECT_EQ(mc_pe_auth_norm(0.5, 2, opts(13, 20000, 1)).errors,
                  mc_pe_auth_norm(0.5, 2, opts(13, 20000, threads)).errors);
        EXPECT_EQ(mc_pe_auth_mim(0.5, 2, opts(13, 20000, 1)).errors,
                  mc_pe_auth_mim(0.5, 2, opts(13, 20000, threads)).errors);
    }
    EXPECT_NE(mc_pe_ir_pns(2, 3, opts(13, 20000)).errors, mc_pe_ir_pns(2, 3, opts(14, 20000)).errors);
}

TEST(MutualInfo, Values) {
    EXPECT_DOUBLE_EQ(mutual_info_eve(0.5), 0.0);
    EXPECT_DOUBLE_EQ(mutual_info_eve(0.0), 1.0);
    EXPECT_NEAR(mutual_info_eve(0.11), 1.0 - 0.499915958164528, 1e-14);
    EXPECT_THROW(mutual_info_eve(0.51), std::domain_error);
}

TEST(KeyRate, Formula) {
    EXPECT_DOUBLE_EQ(key_rate({0.3, 0.0, 0.2, 0.0}), 0.3 * binary_entropy(0.2));
    EXPECT_DOUBLE_EQ(key_rate({0.3, 1.0, 0.2, 0.05}), -0.3 * binary_entropy(0.05));
    EXPECT_LE(key_rate({0.3, 1.0, 0.2, 0.0}), 0.0);
    EXPECT_NEAR(key_rate({0.3, 0.4, 0.2, 0.03}), 0.3 * (0.6 * binary_entropy(0.2) - binary_entropy(0.03)), 1e-15);
    EXPECT_THROW(key_rate({0.3, 1.5, 0.2, 0.0}), std::domain_error);
    EXPECT_THROW(key_rate({0.3, 0.0, 0.2, 0.6}), std::domain_error);
}

TEST(KeyRate, SignFlipsAtThreshold) {
    for (double f : {0.0, 0.3, 0.7}) {
        for (double pe : {0.05, 0.2, 0.5}) {
            const double q = qber_threshold(f, pe);
            EXPECT_NEAR(key_rate({1.0, f, pe, q}), 0.0, 1e-12);
            if (q > 1e-6) {
                EXPECT_GT(key_rate({1.0, f, pe, q * (1 - 1e-6)}), 0.0);
            }
            if (q < 0.5) {
                EXPECT_LT(key_rate({1.0, f, pe, std::min(0.5, q * (1 + 1e-6) + 1e-12)}), 0.0);
            }
        }
    }
}

TEST(QberThreshold, Values) {
    EXPECT_NEAR(qber_threshold(0.0, 0.5), 0.5, 1e-12);
    EXPECT_EQ(qber_threshold(1.0, 0.2), 0.0);
    EXPECT_LT(qber_threshold(0.999999, 0.2), 1e-6);
    const double q = qber_threshold(0.5, 0.25);
    EXPECT_NEAR(binary_entropy(q), 0.5 * binary_entropy(0.25), 1e-12);
    EXPECT_NEAR(q, 0.080984611108481, 1e-10);
    EXPECT_THROW(qber_threshold(0.5, 0.0), std::domain_error);
    EXPECT_THROW(qber_threshold(0.5, 0.6), std::domain_error);
}

TEST(MimFraction, Values) {
    EXPECT_DOUBLE_EQ(mim_fraction(0.1, 0.1, 0.3), 0.0);
    EXPECT_DOUBLE_EQ(mim_fraction(0.3, 0.1, 0.3), 1.0);
    EXPECT_DOUBLE_EQ(mim_fraction(0.2, 0.1, 0.3), 0.5);
    EXPECT_DOUBLE_EQ(mim_fraction(0.05, 0.1, 0.3), 0.0);
    EXPECT_DOUBLE_EQ(mim_fraction(0.4, 0.1, 0.3), 1.0);
    EXPECT_THROW(mim_fraction(0.2, 0.3, 0.3), std::domain_error);
    EXPECT_THROW(mim_fraction(0.2, 0.3, 0.1), std::domain_error);
}

TEST(Transmittance, Values) {
    EXPECT_EQ(transmittance(0.0, 0.2), 1.0);
    EXPECT_NEAR(transmittance(50.0, 0.2), 0.1, 1e-15);
    EXPECT_NEAR(transmittance(10.0, 0.2), 0.6309573444801932, 1e-15);
    EXPECT_THROW(transmittance(-1.0, 0.2), std::domain_error);
    EXPECT_THROW(transmittance(1.0, 0.0), std::domain_error);
}

TEST(RateEfficiency, Values) {
    EXPECT_DOUBLE_EQ(rate_efficiency(0.5, 0.0, 0.2), 1.0);
    EXPECT_NEAR(rate_efficiency(3.0, 0.0, 0.2), 2.414960542893017, 1e-14);
    EXPECT_NEAR(rate_efficiency(3.0, 0.0, 0.2, 2), rate_efficiency(3.0, 0.0, 0.2, 3), 1e-15);
    EXPECT_GT(rate_efficiency(3.0, 0.0, 0.2), 0.0);
    for (double n : {0.5, 1.0}) {
        double prev = rate_efficiency(n, 0.0, 0.2);
        for (double l = 1.0; l <= 100.0; l += 1.0) {
            const double e = rate_efficiency(n, l, 0.2);
            ASSERT_LT(e, prev);
            ASSERT_GT(e, 0.0);
            prev = e;
        }
    }
}

TEST(RateEfficiency, BrightSourcesRiseThenFall) {
    // With a saturated numerator the one-pass denominator falls faster at
    // first, so E peaks a few km out before decreasing for good.
    for (double n : {3.0, 10.0}) {
        EXPECT_GT(rate_efficiency(n, 1.0, 0.2), rate_efficiency(n, 0.0, 0.2));
        int turns = 0;
        double prev = rate_efficiency(n, 0.0, 0.2);
        bool rising = true;
        for (double l = 0.25; l <= 150.0; l += 0.25) {
            const double e = rate_efficiency(n, l, 0.2);
            if (rising && e < prev) {
                rising = false;
                ++turns;
            } else if (!rising && e > prev) {
                ++turns;
            }
            prev = e;
        }
        EXPECT_EQ(turns, 1) << n;
        const double cross = efficiency_crossing(n, 0.2);
        EXPECT_GT(rate_efficiency(n, cross - 0.5, 0.2), 1.0);
        EXPECT_LT(rate_efficiency(n, cross + 0.5, 0.2), 1.0);
    }
    EXPECT_THROW(rate_efficiency(3.0, 1.0, 0.2, 4), std::invalid_argument);
    EXPECT_THROW(rate_efficiency(0.0, 1.0, 0.2), std::domain_error);
}

TEST(AdvantageDistance, Values) {
    EXPECT_EQ(advantage_distance(0.5, 0.2), 0.0);
    EXPECT_EQ(advantage_distance(0.25, 0.2), 0.0);
    EXPECT_NEAR(advantage_distance(5.0, 0.2), 25.0, 1e-12);
    EXPECT_NEAR(advantage_distance(3.0, 0.2), 25.0 * std::log10(6.0), 1e-12);
    EXPECT_THROW(advantage_distance(0.0, 0.2), std::domain_error);
}

TEST(AdvantageDistance, MatchesThreePassCrossing) {
    for (double n : {1.0, 3.0, 10.0}) {
        const double l = efficiency_crossing(n, 0.2, 3);
        EXPECT_NEAR(l, advantage_distance(n, 0.2), 1e-6) << n;
        EXPECT_NEAR(rate_efficiency(n, l, 0.2), 1.0, 1e-9);
    }
    EXPECT_EQ(efficiency_crossing(0.5, 0.2), 0.0);
    // The two-pass variant crosses later.
    EXPECT_GT(efficiency_crossing(3.0, 0.2, 2), efficiency_crossing(3.0, 0.2, 3));
}
