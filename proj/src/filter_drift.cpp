#include "driftcam/filter_drift.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <stdexcept>
#include <string>
#include <tuple>

namespace driftcam {

namespace {

constexpr double kLowest = std::numeric_limits<double>::min();
constexpr double kHighest = 1.0 - 0x1.0p-53;
constexpr double kEulerEdge = 1e-15;

void require_mu(double mu, const char* what) {
    if (!(mu > 0.0) || !std::isfinite(mu)) {
        throw std::invalid_argument(std::string(what) + ": mu must be positive");
    }
}

void require_sign(int epsilon, const char* what) {
    if (epsilon != 1 && epsilon != -1) {
        throw std::invalid_argument(std::string(what) + ": epsilon must be +1 or -1");
    }
}

double exponent(double t, double b, double mu) { return 2.0 * mu * b + 2.0 * mu * mu * t; }

}  // namespace

DriftScenario::DriftScenario(double mu, int epsilon) : mu_(mu), epsilon_(epsilon) {
    require_mu(mu, "DriftScenario");
    require_sign(epsilon, "DriftScenario");
}

DriftScenario DriftScenario::sample(double mu, SeededRng& rng) {
    return DriftScenario(mu, rng.sign());
}

double logistic(double x) noexcept {
    double y;
    if (x >= 0.0) {
        y = 1.0 / (1.0 + std::exp(-x));
    } else {
        const double e = std::exp(x);
        y = e / (1.0 + e);
    }
    return std::clamp(y, kLowest, kHighest);
}

double closed_form_g(double t, double b, int epsilon, double mu) {
    require_mu(mu, "closed_form_g");
    require_sign(epsilon, "closed_form_g");
    const double a = exponent(t, b, mu);
    return epsilon == 1 ? logistic(a) : logistic(-a);
}

double drift_mu(double t, double b, double mu) {
    return 2.0 * mu * closed_form_g(t, b, -1, mu);
}

std::pair<double, double> mu_plus_minus(double g, double mu) {
    require_mu(mu, "mu_plus_minus");
    if (!(g > 0.0 && g < 1.0)) {
        throw std::invalid_argument("mu_plus_minus: g must lie in (0, 1)");
    }
    return {2.0 * mu * (1.0 - g), 2.0 * mu * g};
}

HiddenDriftPath build_hidden_path(const DriftScenario& scenario, PathSample B) {
    const TimeGrid& grid = B.grid();
    const double mu = scenario.mu();
    const int eps = scenario.epsilon();
    const std::size_t n = grid.n_points();

    std::vector<double> drift(n), g(n), plus(n), minus(n);
    for (std::size_t k = 0; k < n; ++k) {
        const double t = grid.time(k);
        drift[k] = drift_mu(t, B[k], mu);
        g[k] = closed_form_g(t, B[k], eps, mu);
        std::tie(plus[k], minus[k]) = mu_plus_minus(g[k], mu);
    }
    PathSample mu_t(grid, std::move(drift));
    PathSample S = riemann_left(mu_t) + B;
    PathSample Y = static_cast<double>(eps) * S;
    return HiddenDriftPath{scenario,
                           std::move(B),
                           std::move(mu_t),
                           std::move(S),
                           std::move(Y),
                           PathSample(grid, std::move(g)),
                           PathSample(grid, std::move(plus)),
                           PathSample(grid, std::move(minus))};
}

HiddenDriftPath simulate_hidden_path(const DriftScenario& scenario, const TimeGrid& grid,
                                     SeededRng& rng) {
    return build_hidden_path(scenario, sample_brownian(grid, rng));
}

EulerSolution euler_filter_sde(const PathSample& B, int epsilon, double mu) {
    require_mu(mu, "euler_filter_sde");
    require_sign(epsilon, "euler_filter_sde");
    const double dt = B.grid().dt();
    const double eps = static_cast<double>(epsilon);
    std::vector<double> g(B.size());
    std::size_t clamps = 0;
    g[0] = 0.5;
    for (std::size_t k = 0; k + 1 < g.size(); ++k) {
        const double x = g[k];
        const double q = x * (1.0 - x);
        double next = x + 2.0 * mu * mu * (eps * q + q * (1.0 - 2.0 * x)) * dt +
                      2.0 * mu * eps * q * (B[k + 1] - B[k]);
        if (next < kEulerEdge || next > 1.0 - kEulerEdge) {
            next = std::clamp(next, kEulerEdge, 1.0 - kEulerEdge);
            ++clamps;
        }
        g[k + 1] = next;
    }
    return {PathSample(B.grid(), std::move(g)), clamps};
}

EulerSolution euler_drift_sde(const PathSample& B, double mu) {
    require_mu(mu, "euler_drift_sde");
    const double dt = B.grid().dt();
    const double top = 2.0 * mu;
    const double lo = kEulerEdge * top;
    const double hi = (1.0 - kEulerEdge) * top;
    std::vector<double> m(B.size());
    std::size_t clamps = 0;
    m[0] = mu;
    for (std::size_t k = 0; k + 1 < m.size(); ++k) {
        const double x = m[k];
        const double spread = x * (top - x);
        double next = x - x * spread * dt - spread * (B[k + 1] - B[k]);
        if (next < lo || next > hi) {
            next = std::clamp(next, lo, hi);
            ++clamps;
        }
        m[k + 1] = next;
    }
    return {PathSample(B.grid(), std::move(m)), clamps};
}

BayesWeights bayes_filter(const PathSample& Y, const PathSample& mu_plus,
                          const PathSample& mu_minus) {
    if (!(Y.grid() == mu_plus.grid()) || !(Y.grid() == mu_minus.grid())) {
        throw std::invalid_argument("bayes_filter: inputs live on different grids");
    }
    const double dt = Y.grid().dt();
    std::vector<double> u(Y.size()), p(Y.size());
    u[0] = 0.0;
    for (std::size_t j = 0; j + 1 < u.size(); ++j) {
        const double a = mu_plus[j];
        const double b = mu_minus[j];
        u[j + 1] = u[j] + (a + b) * (Y[j + 1] - Y[j]) - 0.5 * (a * a - b * b) * dt;
    }
    for (std::size_t k = 0; k < u.size(); ++k) p[k] = logistic(u[k]);
    return {PathSample(Y.grid(), std::move(u)), PathSample(Y.grid(), std::move(p))};
}

void write_hidden_csv(std::ostream& out, const HiddenDriftPath& path) {
    out << "t,B,mu_t,S,Y,g\n";
    const TimeGrid& grid = path.B.grid();
    for (std::size_t k = 0; k < grid.n_points(); ++k) {
        out << format_double(grid.time(k)) << ',' << format_double(path.B[k]) << ','
            << format_double(path.mu_t[k]) << ',' << format_double(path.S[k]) << ','
            << format_double(path.Y[k]) << ',' << format_double(path.g[k]) << '\n';
    }
}

}  // namespace driftcam
