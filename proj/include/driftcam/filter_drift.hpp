#pragma once

// A Brownian motion B, a hidden fair sign epsilon and a drift process mu_t
// built from B alone such that Y = epsilon * S, dS = mu_t dt + dB, carries
// no information about epsilon beyond what a driftless Brownian motion would.
//
// With a = 2 mu b + 2 mu^2 t the closed forms are
//   g(t, b)  = logistic(a)       if epsilon = +1,  logistic(-a) otherwise,
//   mu_t     = 2 mu logistic(-a) in (0, 2 mu),
//   mu^+ = 2 mu (1 - g),  mu^- = 2 mu g,
// and the Bayes posterior P[epsilon = 1 | F^Y] coincides with g.

#include <cstddef>
#include <iosfwd>
#include <utility>

#include "driftcam/grid_paths.hpp"

namespace driftcam {

/// Drift level and hidden sign.
class DriftScenario {
public:
    DriftScenario(double mu, int epsilon);

    /// Draws epsilon fair from `rng`.
    static DriftScenario sample(double mu, SeededRng& rng);

    double mu() const noexcept { return mu_; }
    int epsilon() const noexcept { return epsilon_; }

private:
    double mu_;
    int epsilon_;
};

struct HiddenDriftPath {
    DriftScenario scenario;
    PathSample B;
    PathSample mu_t;
    PathSample S;
    PathSample Y;
    PathSample g;
    PathSample mu_plus;
    PathSample mu_minus;
};

/// Log-odds U and posterior p = logistic(U) of the hidden sign given Y.
struct BayesWeights {
    PathSample log_odds;
    PathSample p;
};

/// Euler solution together with the number of steps that had to be pulled
/// back into the invariant interval.
struct EulerSolution {
    PathSample path;
    std::size_t clamp_events = 0;
};

/// 1 / (1 + exp(-x)), evaluated without overflow and kept strictly inside (0, 1).
double logistic(double x) noexcept;

double closed_form_g(double t, double b, int epsilon, double mu);
double drift_mu(double t, double b, double mu);
std::pair<double, double> mu_plus_minus(double g, double mu);

HiddenDriftPath simulate_hidden_path(const DriftScenario& scenario, const TimeGrid& grid,
                                     SeededRng& rng);
/// Same construction on a given Brownian path.
HiddenDriftPath build_hidden_path(const DriftScenario& scenario, PathSample B);

/// Euler-Maruyama for dg = 2mu^2[eps g(1-g) + g(1-g)(1-2g)]dt + 2 mu eps g(1-g) dB,
/// g_0 = 1/2, clamped to [1e-15, 1 - 1e-15].
EulerSolution euler_filter_sde(const PathSample& B, int epsilon, double mu);

/// Euler-Maruyama for dm = -m^2(2mu - m)dt - m(2mu - m)dB, m_0 = mu, clamped to
/// [1e-15 * 2mu, (1 - 1e-15) * 2mu].
EulerSolution euler_drift_sde(const PathSample& B, double mu);

/// Posterior of the sign from the observation Y and the two candidate drifts.
/// Never sees epsilon: only Y and (mu^+, mu^-) enter.
BayesWeights bayes_filter(const PathSample& Y, const PathSample& mu_plus,
                          const PathSample& mu_minus);

/// Columns t,B,mu_t,S,Y,g.
void write_hidden_csv(std::ostream& out, const HiddenDriftPath& path);

}  // namespace driftcam
