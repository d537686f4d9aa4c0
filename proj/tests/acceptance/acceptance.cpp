// One line per criterion: PASS/FAIL, the measured quantities and wall time.
// Exit status 3 if any criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "driftcam/bm_battery.hpp"
#include "driftcam/concat_scheme.hpp"
#include "driftcam/emery_discrete.hpp"
#include "driftcam/ensembles.hpp"
#include "driftcam/filter_drift.hpp"
#include "driftcam/harness.hpp"
#include "driftcam/parallel.hpp"
#include "driftcam/stats.hpp"

using namespace driftcam;

namespace {

const unsigned kJobs = std::max(1u, std::thread::hardware_concurrency());

struct Outcome {
    bool pass = false;
    std::string detail;
};

template <typename... Args>
std::string fmt(const char* f, Args... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

double max_gap(const PathSample& a, const PathSample& b) {
    double e = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) e = std::max(e, std::abs(a[k] - b[k]));
    return e;
}

Outcome balance_identity() {
    SeededRng rng(101, 0);
    double worst = 0.0;
    for (int i = 0; i < 1000000; ++i) {
        double g = rng.uniform();
        if (g <= 0.0) g = 0.5;
        const double mu = 0.01 + 10.0 * rng.uniform();
        const auto [plus, minus] = mu_plus_minus(g, mu);
        worst = std::max(worst, std::abs(g * plus - (1.0 - g) * minus));
    }
    return {worst <= 1e-12, fmt("max |g mu+ - (1-g) mu-| = %.3e over 1e6 samples", worst)};
}

Outcome drift_range() {
    const TimeGrid grid(1e-3, 2000);
    std::size_t violations = 0, points = 0;
    std::ostringstream os;
    for (double mu : {0.5, 1.0, 2.0}) {
        const auto paths = hidden_paths(mu, grid, 1000, 202, kJobs);
        double lo = INFINITY, hi = -INFINITY;
        for (const auto& h : paths) {
            for (double m : h.mu_t.values()) {
                ++points;
                lo = std::min(lo, m);
                hi = std::max(hi, m);
                if (!(m > 0.0 && m < 2.0 * mu)) ++violations;
            }
        }
        os << fmt("mu=%g: [%.3e, %.6f] ", mu, lo, hi);
    }
    os << fmt("violations %zu of %zu", violations, points);
    return {violations == 0, os.str()};
}

Outcome filter_identity() {
    // Paths on a fine grid; the filter runs on the coarse grids 2^-12 and 2^-14.
    const std::size_t fine_steps = std::size_t{1} << 18;
    const TimeGrid fine(1.0 / static_cast<double>(fine_steps), fine_steps);
    const std::size_t n = 256;
    std::vector<double> e12(n), e14(n);
    parallel_for(n, kJobs, [&](std::size_t i) {
        SeededRng rng(303, i);
        const auto scenario = DriftScenario::sample(1.0, rng);
        const auto h = build_hidden_path(scenario, sample_brownian(fine, rng));
        auto err = [&](std::size_t f) {
            const auto w = bayes_filter(h.Y.coarsen(f), h.mu_plus.coarsen(f), h.mu_minus.coarsen(f));
            return max_gap(w.p, h.g.coarsen(f));
        };
        e12[i] = err(64);
        e14[i] = err(16);
    });
    // Same-grid check on a path simulated directly at 2^-12.
    const TimeGrid g12(1.0 / 4096, 4096);
    double same_grid = 0.0;
    for (std::size_t i = 0; i < 16; ++i) {
        SeededRng rng(304, i);
        const auto h = simulate_hidden_path(DriftScenario::sample(1.0, rng), g12, rng);
        same_grid = std::max(same_grid, max_gap(bayes_filter(h.Y, h.mu_plus, h.mu_minus).p, h.g));
    }
    std::size_t improved = 0;
    for (std::size_t i = 0; i < n; ++i) improved += e14[i] < e12[i];
    const double worst12 = *std::max_element(e12.begin(), e12.end());
    const double frac = static_cast<double>(improved) / static_cast<double>(n);
    return {worst12 <= 0.02 && frac >= 0.9,
            fmt("max err at 2^-12 = %.4f (<= 0.02), improved at 2^-14 on %zu/%zu = %.3f (>= 0.9), "
                "same-grid max err %.2e",
                worst12, improved, n, frac, same_grid)};
}

Outcome strong_convergence() {
    const std::size_t n = 512;
    const double mu = 1.0;
    const TimeGrid fine(1.0 / 1024, 1024);
    std::vector<double> fc(n), ff(n), dc(n), df(n);
    parallel_for(n, kJobs, [&](std::size_t i) {
        SeededRng rng(404, i);
        const int eps = rng.sign();
        const auto B = sample_brownian(fine, rng);
        const auto Bc = B.coarsen(4);
        const double T = fine.horizon();
        const double g = closed_form_g(T, B.back(), eps, mu);
        const double m = drift_mu(T, B.back(), mu);
        fc[i] = euler_filter_sde(Bc, eps, mu).path.back() - g;
        ff[i] = euler_filter_sde(B, eps, mu).path.back() - g;
        dc[i] = euler_drift_sde(Bc, mu).path.back() - m;
        df[i] = euler_drift_sde(B, mu).path.back() - m;
    });
    auto rms = [](const std::vector<double>& v) {
        double s = 0.0;
        for (double x : v) s += x * x;
        return std::sqrt(s / static_cast<double>(v.size()));
    };
    const double rf = rms(fc) / rms(ff), rd = rms(dc) / rms(df);
    const bool ok = rf >= 1.4 && rf <= 3.2 && rd >= 1.4 && rd <= 3.2;
    return {ok, fmt("filter RMS %.3e -> %.3e ratio %.3f; drift RMS %.3e -> %.3e ratio %.3f "
                    "(dt 2^-8 vs 2^-10, band [1.4, 3.2])",
                    rms(fc), rms(ff), rf, rms(dc), rms(df), rd)};
}

std::string failing_tests(const BMTestReport& r) {
    std::string s;
    for (const auto& e : r.entries) {
        s += fmt(" %s p=%.3g%s", e.name.c_str(), e.p_value, e.pass ? "" : "(FAIL)");
    }
    return s;
}

Outcome brownianity() {
    const TimeGrid grid(1e-3, 1000);
    const std::size_t n = 2000;
    const auto hidden = hidden_paths(1.0, grid, n, 505, kJobs);
    std::vector<PathSample> ys;
    for (const auto& h : hidden) ys.push_back(h.Y);
    const auto ry = run_battery(Ensemble("hidden_Y", std::move(ys)));

    const ConcatConfig cc{1.0, 0.1, grid, 506};
    const auto concat = concat_paths(cc, n, kJobs);
    std::vector<PathSample> ms;
    for (const auto& c : concat) ms.push_back(c.path.M);
    const auto rm = run_battery(Ensemble("concat_M", std::move(ms)));

    std::size_t rejected = 0;
    for (std::uint64_t run = 0; run < 20; ++run) {
        const Ensemble s("drifted", drifted_paths(1.0, grid, n, run_seed(507, run), kJobs));
        rejected += !test_terminal_moments(s, 0.05).pass;
    }
    const double rate = static_cast<double>(rejected) / 20.0;
    const bool ok = ry.verdict && rm.verdict && rate >= 0.99;
    return {ok, "Y:" + std::string(ry.verdict ? "pass" : "FAIL") + failing_tests(ry) + "; M:" +
                    (rm.verdict ? "pass" : "FAIL") + failing_tests(rm) +
                    fmt("; S=t+B rejected %zu/20", rejected)};
}

Outcome segment_bounds() {
    const double mu = 1.0, delta = 0.05, dt = 1e-5;
    const std::size_t n = 1000;
    std::vector<SegmentBoundReport> reports(n);
    parallel_for(n, kJobs, [&](std::size_t i) {
        SeededRng rng(606, i);
        const auto inc = sample_increments(dt, cap_steps(delta, dt), rng);
        reports[i] = check_segment_bounds(run_segment(1, inc, mu, delta, dt), mu);
    });
    std::size_t vs = 0, vf = 0, vg = 0;
    double ratio_s = 0.0, ratio_f = 0.0;
    for (const auto& r : reports) {
        vs += r.violations_S;
        vg += r.violations_S_grid;
        vf += r.violations_filter;
        ratio_s = std::max(ratio_s, r.max_abs_S / r.bound_S);
        ratio_f = std::max(ratio_f, r.max_filter_gap / r.bound_filter);
    }
    return {vs == 0 && vf == 0,
            fmt("violations |S|<=2dh: %zu, |g-1/2|<=dh(2mu+3mu^2)/2: %zu over %zu segments; "
                "max usage %.3f and %.3f of the bounds; beyond the zero-crossing landing slack: %zu",
                vs, vf, n, ratio_s, ratio_f, vg)};
}

Outcome drift_bound() {
    const ConcatConfig cc{1.0, 0.1, TimeGrid(1e-4, 10000), 707};
    const auto concat = concat_paths(cc, 100, kJobs);
    std::size_t failing = 0, seg_viol = 0;
    double worst = 0.0, realized = 0.0, nominal = 0.0;
    for (const auto& c : concat) {
        const auto r = check_drift_bound(c, cc);
        failing += !r.pass;
        seg_viol += r.segment_violations;
        worst = std::max(worst, r.max_deviation);
        realized = std::max(realized, r.realized_bound);
        nominal = r.nominal_bound;
    }
    return {failing == 0 && seg_viol == 0,
            fmt("max |mu_t - mu| = %.4f, realized bound %.4f, nominal %.2f; failing paths %zu/100, "
                "segment violations %zu",
                worst, realized, nominal, failing, seg_viol)};
}

Outcome renewal() {
    const double mu = 1.0, delta = 0.05, dt = 1e-4;
    SeededRng rng(808, 0);
    SegmentSampler sampler(mu, delta, dt, rng);
    std::vector<double> gammas;
    gammas.reserve(10000);
    for (int l = 0; l < 10000; ++l) gammas.push_back(sampler.next().gamma);
    const std::vector<double> a(gammas.begin(), gammas.begin() + 5000);
    const std::vector<double> b(gammas.begin() + 5000, gammas.end());
    const auto ks = stats::ks_two_sample(a, b);
    double tau5 = 0.0, tau10 = 0.0;
    for (std::size_t l = 0; l < 10000; ++l) {
        tau10 += gammas[l];
        if (l + 1 == 5000) tau5 = tau10;
    }
    const double r5 = tau5 / 5000.0, r10 = tau10 / 10000.0;
    const double change = std::abs(r10 - r5) / r5;
    return {ks.p_value >= 0.01 && change < 0.05,
            fmt("KS halves D=%.4f p=%.3f (>= 0.01); tau_L/L %.6f -> %.6f, change %.4f (< 0.05)",
                ks.statistic, ks.p_value, r5, r10, change)};
}

Outcome discrete_exactness() {
    const auto R = [](const char* s) { return parse_rational(s); };
    struct Case {
        std::string name;
        BiasedBitLaw law;
        std::size_t window, bits;
    };
    const std::vector<Case> cases{
        {"const 1/2", BiasedBitLaw::constant(R("1/2")), 2, 4},
        {"const 3/5", BiasedBitLaw::constant(R("3/5")), 2, 6},
        {"const 7/10", BiasedBitLaw::constant(R("7/10")), 2, 6},
        {"periodic 1/2,3/5,7/10", BiasedBitLaw::periodic({R("1/2"), R("3/5"), R("7/10")}), 2, 6},
        {"periodic 2/3,1/3", BiasedBitLaw::periodic({R("2/3"), R("1/3")}), 3, 4},
        {"table mixed", BiasedBitLaw::table({R("3/5"), R("1/2"), R("7/10"), R("1/3"), R("9/10"),
                                             R("2/5"), R("1/2"), R("4/5"), R("3/10"), R("1/2"),
                                             R("3/5"), R("7/10"), R("1/4"), R("1/2"), R("2/3"),
                                             R("1/2"), R("3/4"), R("1/2"), R("3/5"), R("1/2"),
                                             R("7/10"), R("1/2"), R("1/2"), R("1/2"), R("1/2"),
                                             R("1/2"), R("1/2"), R("1/2"), R("1/2"), R("1/2")}),
         2, 6},
    };
    std::ostringstream os;
    bool ok = true;
    for (const auto& c : cases) {
        const auto family = build_index_family(c.window, c.bits);
        const auto law = exact_joint_law(c.law, family, c.window, c.bits);
        const auto r = check_exactness(law);
        bool marginal_ok = true;
        for (const auto& m : law.marginals) {
            marginal_ok = marginal_ok && m.product_plus == (1 - m.undecided) / 2;
        }
        const bool pass = r.pass() && marginal_ok;
        ok = ok && pass;
        os << c.name << " (" << law.referenced.size() << " bits, undecided "
           << to_string(law.undecided_mass) << "): " << (pass ? "ok" : "FAIL") << "; ";
    }
    return {ok, os.str()};
}

Outcome index_family() {
    const auto f = build_index_family(64, 8, 4);
    const auto c = check_family(f);
    return {c.pass(), fmt("disjoint %d, below_owner %d, levels (a) %d, levels disjoint (b) %d, "
                          "residual closed (c) %d; deepest index %lld",
                          c.disjoint, c.below_owner, c.levels_bounded, c.levels_disjoint,
                          c.residual_closed, static_cast<long long>(f.horizon()))};
}

Outcome calibration() {
    const auto config = nlohmann::json::parse(
        R"({"dt": 0.01, "n_steps": 100, "n_paths": 500, "n_runs": 200, "alpha": 0.05, "seed": 1111})");
    const auto r = run_calibrate(config, kJobs);
    std::ostringstream os;
    for (const auto& row : r.report["rejection_rates"]) {
        os << row["test"].get<std::string>() << fmt(" %.3f", row["rate"].get<double>())
           << (row["gated"].get<bool>() ? (row["pass"].get<bool>() ? "" : "(FAIL)") : "(info)")
           << "; ";
    }
    os << "band [0.025, 0.10]";
    return {r.accepted, os.str()};
}

}  // namespace

int main() {
    struct Criterion {
        const char* name;
        std::function<Outcome()> run;
        double limit_seconds;  // 0: no runtime limit
    };
    const std::vector<Criterion> criteria{
        {"AC1 balance identity", balance_identity, 1.0},
        {"AC2 drift range", drift_range, 0.0},
        {"AC3 filter identity", filter_identity, 60.0},
        {"AC4 strong convergence", strong_convergence, 0.0},
        {"AC5 brownianity", brownianity, 300.0},
        {"AC6 segment bounds", segment_bounds, 0.0},
        {"AC7 drift sup bound", drift_bound, 0.0},
        {"AC8 segment renewal", renewal, 0.0},
        {"AC9 discrete exactness", discrete_exactness, 60.0},
        {"AC10 index family", index_family, 0.0},
        {"AC11 battery calibration", calibration, 0.0},
    };
    int failures = 0;
    for (const auto& c : criteria) {
        const auto start = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = c.run();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        const double secs =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        bool pass = o.pass;
        std::string timing = fmt("%.2fs", secs);
        if (c.limit_seconds > 0.0) {
            timing += fmt(" (limit %.0fs)", c.limit_seconds);
            if (secs >= c.limit_seconds) pass = false;
        }
        if (!pass) ++failures;
        std::cout << (pass ? "PASS " : "FAIL ") << c.name << ": " << o.detail << " [" << timing
                  << "]" << std::endl;
    }
    std::cout << (failures == 0 ? "all criteria passed" : fmt("%d criteria failed", failures))
              << std::endl;
    return failures == 0 ? 0 : kExitAcceptance;
}
