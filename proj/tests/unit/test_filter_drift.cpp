#include <cmath>
#include <sstream>

#include <gtest/gtest.h>

#include "driftcam/filter_drift.hpp"

using namespace driftcam;

TEST(ClosedFormG, OriginIsHalf) {
    for (double mu : {0.1, 1.0, 3.0}) {
        EXPECT_EQ(closed_form_g(0.0, 0.0, 1, mu), 0.5);
        EXPECT_EQ(closed_form_g(0.0, 0.0, -1, mu), 0.5);
    }
}

TEST(ClosedFormG, LimitsStayInsideUnitInterval) {
    const double hi = closed_form_g(0.0, 1e6, 1, 1.0);
    EXPECT_LT(hi, 1.0);
    EXPECT_GT(hi, 1.0 - 1e-15);
    const double lo = closed_form_g(0.0, 1e6, -1, 1.0);
    EXPECT_GT(lo, 0.0);
    EXPECT_LT(lo, 1e-300);
    EXPECT_TRUE(std::isfinite(closed_form_g(1e8, -1e8, 1, 2.0)));
}

TEST(ClosedFormG, BranchesAreComplementary) {
    SeededRng rng(1, 0);
    for (int i = 0; i < 1000; ++i) {
        const double t = 3.0 * rng.uniform(), b = 4.0 * rng.normal(), mu = 0.1 + 2.0 * rng.uniform();
        EXPECT_NEAR(closed_form_g(t, b, -1, mu), 1.0 - closed_form_g(t, b, 1, mu), 1e-15);
    }
}

TEST(ClosedFormG, RejectsBadInput) {
    EXPECT_THROW(closed_form_g(0.0, 0.0, 1, 0.0), std::invalid_argument);
    EXPECT_THROW(closed_form_g(0.0, 0.0, 0, 1.0), std::invalid_argument);
    EXPECT_THROW(drift_mu(0.0, 0.0, -1.0), std::invalid_argument);
}

TEST(DriftMu, SpecExamples) {
    EXPECT_EQ(drift_mu(0.0, 0.0, 1.5), 1.5);
    EXPECT_LT(drift_mu(0.0, 500.0, 1.0), 1e-100);
    EXPECT_NEAR(drift_mu(0.0, -500.0, 1.0), 2.0, 1e-15);
    SeededRng rng(2, 0);
    for (int i = 0; i < 1000; ++i) {
        const double t = rng.uniform(), b = rng.normal(), mu = 0.2 + rng.uniform();
        EXPECT_EQ(drift_mu(t, b, mu), 2.0 * mu * closed_form_g(t, b, -1, mu));
        // Oracle: direct formula 2 mu / (1 + exp(2 mu b + 2 mu^2 t)).
        EXPECT_NEAR(drift_mu(t, b, mu), 2.0 * mu / (1.0 + std::exp(2 * mu * b + 2 * mu * mu * t)), 1e-13);
    }
}

TEST(MuPlusMinus, SpecExamples) {
    EXPECT_EQ(mu_plus_minus(0.5, 1.0), std::make_pair(1.0, 1.0));
    EXPECT_EQ(mu_plus_minus(0.25, 2.0), std::make_pair(3.0, 1.0));
    EXPECT_THROW(mu_plus_minus(0.0, 1.0), std::invalid_argument);
    EXPECT_THROW(mu_plus_minus(1.0, 1.0), std::invalid_argument);
}

TEST(MuPlusMinus, BalanceIdentity) {
    SeededRng rng(3, 0);
    for (int i = 0; i < 100000; ++i) {
        const double g = std::max(1e-12, rng.uniform()), mu = 0.01 + 3.0 * rng.uniform();
        const auto [plus, minus] = mu_plus_minus(g, mu);
        EXPECT_LE(std::abs(g * plus - (1.0 - g) * minus), 1e-12);
    }
}

TEST(MuPlusMinus, ConsistencyTriangle) {
    SeededRng rng(4, 0);
    for (int i = 0; i < 1000; ++i) {
        const double t = rng.uniform(), b = rng.normal(), mu = 0.2 + rng.uniform();
        const auto [p_plus, unused_a] = mu_plus_minus(closed_form_g(t, b, 1, mu), mu);
        const auto [unused_b, m_minus] = mu_plus_minus(closed_form_g(t, b, -1, mu), mu);
        EXPECT_NEAR(drift_mu(t, b, mu), p_plus, 1e-14);
        EXPECT_NEAR(drift_mu(t, b, mu), m_minus, 1e-14);
    }
}

TEST(SimulateHiddenPath, Invariants) {
    const auto grid = make_grid(1e-3, 2000);
    for (std::uint64_t i = 0; i < 50; ++i) {
        SeededRng rng(5, i);
        const double mu = 0.5 + 0.5 * static_cast<double>(i % 4);
        const auto h = simulate_hidden_path(DriftScenario::sample(mu, rng), grid, rng);
        EXPECT_EQ(h.S[0], 0.0);
        EXPECT_EQ(h.Y[0], 0.0);
        EXPECT_EQ(h.g[0], 0.5);
        for (std::size_t k = 0; k < grid.n_points(); ++k) {
            EXPECT_GT(h.mu_t[k], 0.0);
            EXPECT_LT(h.mu_t[k], 2.0 * mu);
            EXPECT_GT(h.g[k], 0.0);
            EXPECT_LT(h.g[k], 1.0);
            EXPECT_EQ(h.Y[k], h.scenario.epsilon() * h.S[k]);
        }
    }
}

TEST(SimulateHiddenPath, FairSignHasCenteredTerminal) {
    const auto grid = make_grid(0.01, 100);
    double s = 0.0;
    const int n = 10000;
    for (int i = 0; i < n; ++i) {
        SeededRng rng(6, i);
        s += simulate_hidden_path(DriftScenario::sample(1.0, rng), grid, rng).Y.back();
    }
    EXPECT_LE(std::abs(s / n), 0.03);
}

TEST(SimulateHiddenPath, PinnedPlusTerminalMeanIsIntegratedDrift) {
    const auto grid = make_grid(0.01, 100);
    double y = 0.0, drift = 0.0;
    const int n = 10000;
    for (int i = 0; i < n; ++i) {
        SeededRng rng(6, i);
        const auto h = simulate_hidden_path(DriftScenario(1.0, 1), grid, rng);
        y += h.Y.back();
        drift += riemann_left(h.mu_t).back();
    }
    EXPECT_GT(drift / n, 0.0);
    EXPECT_LE(std::abs(y / n - drift / n), 0.03);
}

TEST(EulerFilter, FirstStepWithoutNoise) {
    const auto grid = make_grid(0.01, 3);
    const auto zero = PathSample::constant(grid, 0.0);
    const double mu = 1.3;
    const auto sol = euler_filter_sde(zero, 1, mu);
    EXPECT_EQ(sol.path[0], 0.5);
    EXPECT_DOUBLE_EQ(sol.path[1], 0.5 + 2.0 * mu * mu * 0.25 * 0.01);
    EXPECT_EQ(sol.clamp_events, 0u);
}

TEST(EulerFilter, ErrorShrinksUnderRefinement) {
    const auto fine = make_grid(1.0 / 4096, 4096);
    double e_coarse = 0.0, e_fine = 0.0;
    for (std::uint64_t i = 0; i < 64; ++i) {
        SeededRng rng(7, i);
        const auto B = sample_brownian(fine, rng);
        const auto Bc = B.coarsen(16);
        const double exact = closed_form_g(1.0, B.back(), 1, 1.0);
        e_fine += std::pow(euler_filter_sde(B, 1, 1.0).path.back() - exact, 2);
        e_coarse += std::pow(euler_filter_sde(Bc, 1, 1.0).path.back() - exact, 2);
    }
    EXPECT_LT(e_fine, e_coarse);
}

TEST(EulerFilter, NoClampingAtModerateSteps) {
    const auto grid = make_grid(1e-3, 1000);
    for (std::uint64_t i = 0; i < 100; ++i) {
        SeededRng rng(8, i);
        const auto B = sample_brownian(grid, rng);
        for (double mu : {0.5, 1.0, 2.0}) {
            const auto sol = euler_filter_sde(B, i % 2 ? 1 : -1, mu);
            EXPECT_EQ(sol.clamp_events, 0u);
            for (double g : sol.path.values()) {
                EXPECT_GT(g, 0.0);
                EXPECT_LT(g, 1.0);
            }
        }
    }
}

TEST(EulerDrift, FixedPointsAndStart) {
    const auto grid = make_grid(0.01, 10);
    SeededRng rng(9, 0);
    const auto B = sample_brownian(grid, rng);
    EXPECT_EQ(euler_drift_sde(B, 1.7).path[0], 1.7);
    // Both coefficients vanish at 0 and 2 mu: -m^2(2mu - m) and -m(2mu - m).
    for (double m : {0.0, 2.0 * 1.7}) {
        EXPECT_EQ(-m * m * (2 * 1.7 - m), 0.0);
        EXPECT_EQ(-m * (2 * 1.7 - m), 0.0);
    }
}

TEST(EulerDrift, ErrorShrinksUnderRefinement) {
    const auto fine = make_grid(1.0 / 4096, 4096);
    double e_coarse = 0.0, e_fine = 0.0;
    for (std::uint64_t i = 0; i < 64; ++i) {
        SeededRng rng(10, i);
        const auto B = sample_brownian(fine, rng);
        const double exact = drift_mu(1.0, B.back(), 1.0);
        e_fine += std::pow(euler_drift_sde(B, 1.0).path.back() - exact, 2);
        e_coarse += std::pow(euler_drift_sde(B.coarsen(16), 1.0).path.back() - exact, 2);
    }
    EXPECT_LT(e_fine, e_coarse);
}

TEST(BayesFilter, FlatObservationStaysHalf) {
    const auto grid = make_grid(0.1, 10);
    const auto w = bayes_filter(PathSample::constant(grid, 0.0), PathSample::constant(grid, 0.8),
                                PathSample::constant(grid, 0.8));
    for (double p : w.p.values()) EXPECT_EQ(p, 0.5);
}

TEST(BayesFilter, ConstantDriftClosedForm) {
    const auto grid = make_grid(0.01, 200);
    SeededRng rng(11, 0);
    const auto Y = sample_brownian(grid, rng);
    const double c = 1.4;
    const auto w = bayes_filter(Y, PathSample::constant(grid, c), PathSample::constant(grid, 0.0));
    for (std::size_t k = 0; k < grid.n_points(); ++k) {
        EXPECT_NEAR(w.log_odds[k], c * Y[k] - c * c * grid.time(k) / 2.0, 1e-12);
        EXPECT_DOUBLE_EQ(w.p[k], logistic(w.log_odds[k]));
    }
    EXPECT_EQ(w.p[0], 0.5);
}

TEST(BayesFilter, GridMismatchThrows) {
    const auto a = PathSample::constant(make_grid(0.1, 10), 0.0);
    const auto b = PathSample::constant(make_grid(0.1, 11), 1.0);
    EXPECT_THROW(bayes_filter(a, b, b), std::invalid_argument);
}

TEST(BayesFilter, ConvergesToClosedFormUnderRefinement) {
    const auto fine = make_grid(1.0 / 65536, 65536);
    int improved = 0;
    const int n = 16;
    for (int i = 0; i < n; ++i) {
        SeededRng rng(12, static_cast<std::uint64_t>(i));
        const auto h = simulate_hidden_path(DriftScenario::sample(1.0, rng), fine, rng);
        auto err = [&](std::size_t f) {
            const auto g = h.g.coarsen(f);
            const auto w = bayes_filter(h.Y.coarsen(f), h.mu_plus.coarsen(f), h.mu_minus.coarsen(f));
            double e = 0.0;
            for (std::size_t k = 0; k < g.size(); ++k) e = std::max(e, std::abs(w.p[k] - g[k]));
            return e;
        };
        if (err(4) < err(16)) ++improved;
    }
    EXPECT_GE(improved, 14);
}

TEST(HiddenCsv, Header) {
    SeededRng rng(13, 0);
    const auto h = simulate_hidden_path(DriftScenario(1.0, -1), make_grid(0.5, 2), rng);
    std::ostringstream os;
    write_hidden_csv(os, h);
    EXPECT_EQ(os.str().substr(0, os.str().find('\n')), "t,B,mu_t,S,Y,g");
}
