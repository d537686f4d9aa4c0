#include <cmath>
#include <sstream>

#include <gtest/gtest.h>

#include "driftcam/bm_battery.hpp"
#include "driftcam/ensembles.hpp"
#include "driftcam/levy_transform.hpp"
#include "driftcam/stats.hpp"

using namespace driftcam;

namespace {

Ensemble brownian(double dt, std::size_t steps, std::size_t n, std::uint64_t seed) {
    return Ensemble("brownian", brownian_paths(TimeGrid(dt, steps), n, seed));
}

Ensemble mapped(const Ensemble& base, PathSample (*f)(const PathSample&)) {
    std::vector<PathSample> out;
    for (const auto& p : base.paths()) out.push_back(f(p));
    return Ensemble("mapped", std::move(out));
}

PathSample absolute(const PathSample& p) {
    std::vector<double> v(p.values().begin(), p.values().end());
    for (auto& x : v) x = std::abs(x);
    return PathSample(p.grid(), std::move(v));
}

}  // namespace

TEST(Ensemble, RejectsSinglePathAndMixedGrids) {
    const auto grid = TimeGrid(0.01, 10);
    EXPECT_THROW(Ensemble("one", {PathSample::constant(grid, 0.0)}), InsufficientData);
    EXPECT_THROW(Ensemble("mixed", {PathSample::constant(grid, 0.0),
                                    PathSample::constant(TimeGrid(0.01, 11), 0.0)}),
                 std::invalid_argument);
}

TEST(Ensemble, StepsAndIncrements) {
    const auto ens = brownian(0.01, 10, 5, 1);
    const auto a = ens.at_step(3);
    const auto d = ens.increments(2, 7);
    for (std::size_t i = 0; i < 5; ++i) {
        EXPECT_EQ(a[i], ens[i][3]);
        EXPECT_EQ(d[i], ens[i][7] - ens[i][2]);
    }
}

TEST(TerminalMoments, ConstantZeroFailsVariance) {
    const auto grid = TimeGrid(0.01, 100);
    const Ensemble ens("zero", std::vector<PathSample>(200, PathSample::constant(grid, 0.0)));
    const auto e = test_terminal_moments(ens, 0.05);
    EXPECT_FALSE(e.pass);
    EXPECT_FALSE(e.diagnostic.empty());
}

TEST(TerminalMoments, ConstantDriftRejectsMean) {
    const auto grid = TimeGrid(0.01, 100);
    const Ensemble ens("drifted", drifted_paths(1.0, grid, 10000, 2));
    const auto e = test_terminal_moments(ens, 0.05);
    EXPECT_FALSE(e.pass);
    double z = 0.0;
    for (const auto& [k, v] : e.details) if (k == "z_mean") z = v;
    EXPECT_NEAR(z, 100.0, 5.0);
}

TEST(TerminalMoments, NeedsHundredPaths) {
    EXPECT_THROW(test_terminal_moments(brownian(0.01, 10, 99, 3), 0.05), InsufficientData);
}

TEST(TerminalMoments, AcceptsBrownian) {
    EXPECT_TRUE(test_terminal_moments(brownian(0.01, 100, 2000, 4), 0.01).pass);
}

TEST(IncrementNormality, CoinFlipsReject) {
    const double dt = 0.01;
    const auto grid = TimeGrid(dt, 100);
    std::vector<PathSample> paths;
    for (std::uint64_t i = 0; i < 500; ++i) {
        SeededRng rng(5, i);
        std::vector<double> inc(grid.n_steps());
        for (auto& x : inc) x = rng.sign() * std::sqrt(dt);
        paths.push_back(path_from_increments(grid, inc));
    }
    const auto e = test_increment_normality(Ensemble("coins", std::move(paths)), 100, 0.05);
    EXPECT_FALSE(e.pass);
    EXPECT_LT(e.p_value, 1e-10);
}

TEST(IncrementNormality, TooFewSamples) {
    EXPECT_THROW(test_increment_normality(brownian(0.1, 1, 2, 6), 1, 0.05), InsufficientData);
    EXPECT_THROW(test_increment_normality(brownian(0.1, 10, 20, 6), 3, 0.05), std::invalid_argument);
}

TEST(IncrementNormality, AcceptsBrownian) {
    EXPECT_TRUE(test_increment_normality(brownian(0.01, 100, 500, 7), 10, 0.01).pass);
}

TEST(QuadraticVariationTest, UnitIntegrandMatchesIntegrator) {
    const auto base = brownian(0.001, 1000, 50, 8);
    for (const auto& p : base.paths()) {
        const double qv = quadratic_variation(p);
        EXPECT_NEAR(quadratic_variation(ito_sum_left(PathSample::constant(p.grid(), 1.0), p)), qv,
                    1e-12 * qv);
        EXPECT_NEAR(quadratic_variation(ito_sum_left(sign_integrand(p), p)), qv, 1e-12 * qv);
    }
}

TEST(QuadraticVariationTest, BrownianNearHorizon) {
    const auto ens = brownian(1e-4, 10000, 100, 9);
    double m = 0.0;
    for (const auto& p : ens.paths()) m += quadratic_variation(p);
    m /= 100.0;
    EXPECT_GE(m, 0.99);
    EXPECT_LE(m, 1.01);
    EXPECT_TRUE(test_quadratic_variation(ens, 0.01).pass);
}

TEST(QuadraticVariationTest, DoubledClockRejects) {
    // M_{2t} on a grid of dt: increments of a Brownian path over 2 dt.
    const auto fine = brownian(0.005, 200, 500, 10);
    std::vector<PathSample> paths;
    const TimeGrid grid(0.005, 100);
    for (const auto& p : fine.paths()) {
        std::vector<double> v(grid.n_points());
        for (std::size_t k = 0; k < v.size(); ++k) v[k] = p[2 * k];
        paths.push_back(PathSample(grid, std::move(v)));
    }
    const auto e = test_quadratic_variation(Ensemble("fast", std::move(paths)), 0.05);
    EXPECT_FALSE(e.pass);
    EXPECT_NEAR(e.statistic, 1.0, 0.05);
}

TEST(SelfFiltration, ConstantDriftRejectsIntercept) {
    const auto grid = TimeGrid(0.01, 100);
    const Ensemble ens("drifted", drifted_paths(1.0, grid, 2000, 11));
    const auto e = test_self_filtration_martingale(ens, 0.5, 1.0, 0.05);
    EXPECT_FALSE(e.pass);
    double coef = 0.0;
    for (const auto& [k, v] : e.details) if (k == "coef_intercept") coef = v;
    EXPECT_NEAR(coef, 0.5, 0.1);
}

TEST(SelfFiltration, AcceptsBrownian) {
    EXPECT_TRUE(test_self_filtration_martingale(brownian(0.01, 100, 2000, 12), 0.5, 1.0, 0.01).pass);
}

TEST(SelfFiltration, RevealedSignRejectsHiddenSignPasses) {
    const auto grid = TimeGrid(0.01, 100);
    const auto hidden = hidden_paths(1.0, grid, 4000, 13);
    std::vector<PathSample> ys;
    Regressor eps{"epsilon", {}};
    for (const auto& h : hidden) {
        ys.push_back(h.Y);
        eps.values.push_back(h.scenario.epsilon());
    }
    const Ensemble ens("hidden", std::move(ys));
    EXPECT_TRUE(test_self_filtration_martingale(ens, 0.5, 1.0, 0.01).pass);
    const std::vector<Regressor> extra{eps};
    const auto revealed = test_self_filtration_martingale(ens, 0.5, 1.0, 0.01, extra);
    EXPECT_FALSE(revealed.pass);
}

TEST(SelfFiltration, DropsCollinearColumns) {
    const auto ens = brownian(0.01, 100, 500, 14);
    std::vector<double> twice;
    for (const auto& p : ens.paths()) twice.push_back(2.0 * p[50]);
    const std::vector<Regressor> extra{{"twice_M_s", twice}};
    const auto e = test_self_filtration_martingale(ens, 0.5, 1.0, 0.05, extra);
    EXPECT_NE(e.diagnostic.find("collinear"), std::string::npos);
    EXPECT_THROW(test_self_filtration_martingale(ens, 1.0, 0.5, 0.05), std::invalid_argument);
}

TEST(Independence, BrownianCorrelationsSmall) {
    const std::size_t n = 2000;
    const auto ens = brownian(0.01, 100, n, 15);
    const auto pairs = consecutive_pairs(ens.grid(), 10);
    EXPECT_EQ(pairs.size(), 9u);
    for (const auto& q : pairs) {
        const auto a = ens.increments(q.a_begin, q.a_end);
        const auto b = ens.increments(q.b_begin, q.b_end);
        EXPECT_LE(std::abs(stats::correlation(a, b)), 3.0 / std::sqrt(static_cast<double>(n)));
    }
    EXPECT_TRUE(test_increment_independence(ens, pairs, 0.01).pass);
}

TEST(Independence, CommonFactorRejects) {
    const auto grid = TimeGrid(0.01, 100);
    std::vector<PathSample> paths;
    for (std::uint64_t i = 0; i < 200; ++i) {
        SeededRng rng(16, i);
        const double z = rng.normal();
        std::vector<double> v(grid.n_points());
        for (std::size_t k = 0; k < v.size(); ++k) v[k] = grid.time(k) * z;
        paths.push_back(PathSample(grid, std::move(v)));
    }
    const Ensemble ens("tz", std::move(paths));
    const auto e = test_increment_independence(ens, consecutive_pairs(grid, 10), 0.05);
    EXPECT_FALSE(e.pass);
    double worst = 0.0;
    for (const auto& [k, v] : e.details) if (k == "max_abs_correlation") worst = v;
    EXPECT_NEAR(worst, 1.0, 1e-9);
}

TEST(Independence, ReflectedPathRejects) {
    const auto ens = mapped(brownian(0.01, 100, 5000, 17), absolute);
    EXPECT_FALSE(test_increment_independence(ens, consecutive_pairs(ens.grid(), 10), 0.05).pass);
}

TEST(Battery, BonferroniAndVerdict) {
    const auto ens = brownian(0.01, 100, 1000, 18);
    const auto r = run_battery(ens);
    EXPECT_DOUBLE_EQ(r.corrected_alpha, 0.01);
    EXPECT_EQ(r.entries.size(), 5u);
    bool all = true;
    for (const auto& e : r.entries) {
        EXPECT_EQ(e.threshold, 0.01);
        EXPECT_EQ(e.pass, e.p_value >= e.threshold);
        all = all && e.pass;
    }
    EXPECT_EQ(r.verdict, all);
    EXPECT_TRUE(r.verdict);
    EXPECT_EQ(*r.config.martingale_s, 0.5);
    EXPECT_EQ(*r.config.martingale_t, 1.0);
    EXPECT_THROW(run_battery(ens, BatteryConfig{1.0}), std::invalid_argument);
}

TEST(Battery, DriftedEnsembleFails) {
    const auto grid = TimeGrid(0.01, 100);
    EXPECT_FALSE(run_battery(Ensemble("drifted", drifted_paths(1.0, grid, 1000, 19))).verdict);
}

TEST(Battery, JsonAndCsv) {
    const auto r = run_battery(brownian(0.01, 100, 200, 20));
    const auto j = to_json(r);
    EXPECT_EQ(j["tests"].size(), 5u);
    EXPECT_EQ(j["verdict"].get<bool>(), r.verdict);
    EXPECT_EQ(j["tests"][0]["test"], "terminal_moments");
    std::ostringstream out;
    write_report_csv(out, r);
    EXPECT_EQ(out.str().substr(0, out.str().find('\n')), "test,statistic,p_value,pass");
    EXPECT_THROW(r.entry("nope"), std::out_of_range);
}
