#include "driftcam/bm_battery.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <string>

#include <Eigen/Dense>

#include "driftcam/levy_transform.hpp"
#include "driftcam/stats.hpp"

namespace driftcam {

namespace {

constexpr std::size_t kMinTerminalPaths = 100;
constexpr std::size_t kMinNormalitySamples = 20;

std::size_t step_of(const TimeGrid& grid, double t, const char* what) {
    const double x = t / grid.dt();
    const double k = std::round(x);
    if (!(t >= 0.0) || k > static_cast<double>(grid.n_steps()) || std::abs(x - k) > 1e-6) {
        throw std::invalid_argument(std::string(what) + ": time " + format_double(t) +
                                    " is not a grid point");
    }
    return static_cast<std::size_t>(k);
}

TestEntry finish(TestEntry e, double alpha) {
    e.threshold = alpha;
    if (!std::isfinite(e.p_value)) {
        e.p_value = 0.0;
        if (e.diagnostic.empty()) e.diagnostic = "non-finite statistic";
    }
    e.p_value = std::clamp(e.p_value, 0.0, 1.0);
    e.pass = e.p_value >= alpha;
    return e;
}

}  // namespace

Ensemble::Ensemble(std::string source, std::vector<PathSample> paths)
    : source_(std::move(source)), paths_(std::move(paths)) {
    if (paths_.size() < 2) {
        throw InsufficientData("Ensemble: need at least two paths, got " +
                               std::to_string(paths_.size()));
    }
    for (const auto& p : paths_) {
        if (!(p.grid() == paths_.front().grid())) {
            throw std::invalid_argument("Ensemble: paths live on different grids");
        }
    }
}

std::vector<double> Ensemble::at_step(std::size_t k) const {
    std::vector<double> v(paths_.size());
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = paths_[i][k];
    return v;
}

std::vector<double> Ensemble::increments(std::size_t from, std::size_t to) const {
    std::vector<double> v(paths_.size());
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = paths_[i][to] - paths_[i][from];
    return v;
}

const TestEntry& BMTestReport::entry(std::string_view name) const {
    for (const auto& e : entries) {
        if (e.name == name) return e;
    }
    throw std::out_of_range("BMTestReport: no test named " + std::string(name));
}

TestEntry test_terminal_moments(const Ensemble& ensemble, double alpha) {
    const std::size_t n = ensemble.n_paths();
    if (n < kMinTerminalPaths) {
        throw InsufficientData("terminal_moments: need at least 100 paths, got " + std::to_string(n));
    }
    const double T = ensemble.grid().horizon();
    const auto terminal = ensemble.at_step(ensemble.grid().n_steps());
    const double m = stats::mean(terminal);
    const double v = stats::variance(terminal);
    const double nd = static_cast<double>(n);

    TestEntry e;
    e.name = "terminal_moments";
    const double z = m / std::sqrt(T / nd);
    e.statistic = z;
    const double p_mean = stats::normal_two_sided(z);
    double p_var = 0.0;
    const double chi = (nd - 1.0) * v / T;
    if (v > 0.0 && std::isfinite(v)) {
        p_var = stats::chi_square_two_sided(chi, nd - 1.0);
    } else {
        e.diagnostic = "degenerate ensemble: zero terminal variance";
    }
    e.p_value = std::min(1.0, 2.0 * std::min(p_mean, p_var));
    e.details = {{"mean", m},         {"z_mean", z},     {"p_mean", p_mean},
                 {"variance", v},     {"chi2_var", chi}, {"p_var", p_var}};
    return finish(std::move(e), alpha);
}

TestEntry test_increment_normality(const Ensemble& ensemble, std::size_t n_subintervals,
                                   double alpha) {
    const TimeGrid& grid = ensemble.grid();
    if (n_subintervals == 0 || grid.n_steps() % n_subintervals != 0) {
        throw std::invalid_argument("increment_normality: n_subintervals must divide n_steps");
    }
    const std::size_t total = ensemble.n_paths() * n_subintervals;
    if (total < kMinNormalitySamples) {
        throw InsufficientData("increment_normality: " + std::to_string(total) +
                               " increments, need at least 20");
    }
    const std::size_t width = grid.n_steps() / n_subintervals;
    const double scale = 1.0 / std::sqrt(static_cast<double>(width) * grid.dt());
    std::vector<double> pooled;
    pooled.reserve(total);
    for (const auto& path : ensemble.paths()) {
        for (std::size_t j = 0; j < n_subintervals; ++j) {
            pooled.push_back((path[(j + 1) * width] - path[j * width]) * scale);
        }
    }
    const auto ks = stats::ks_normal(std::move(pooled));
    TestEntry e;
    e.name = "increment_normality";
    e.statistic = ks.statistic;
    e.p_value = ks.p_value;
    e.details = {{"n_samples", static_cast<double>(total)},
                 {"n_subintervals", static_cast<double>(n_subintervals)}};
    return finish(std::move(e), alpha);
}

TestEntry test_quadratic_variation(const Ensemble& ensemble, double alpha) {
    const TimeGrid& grid = ensemble.grid();
    const double T = grid.horizon();
    const double dt = grid.dt();
    double pooled = 0.0;
    double rel = 0.0;
    for (const auto& path : ensemble.paths()) {
        const double qv = quadratic_variation(path);
        pooled += qv / dt;
        rel += qv / T - 1.0;
    }
    const double dof = static_cast<double>(ensemble.n_paths() * grid.n_steps());
    rel /= static_cast<double>(ensemble.n_paths());
    const double band = std::max(0.02, 6.0 * std::sqrt(2.0 * dt / T));

    TestEntry e;
    e.name = "quadratic_variation";
    e.statistic = rel;
    e.p_value = stats::chi_square_two_sided(pooled, dof);
    e.details = {{"chi2", pooled},
                 {"dof", dof},
                 {"band", band},
                 {"within_band", std::abs(rel) <= band ? 1.0 : 0.0}};
    return finish(std::move(e), alpha);
}

std::vector<Regressor> default_regressors(const Ensemble& ensemble, std::size_t s_step) {
    const std::size_t n = ensemble.n_paths();
    std::vector<Regressor> cols{{"intercept", std::vector<double>(n, 1.0)},
                                {"M_s", std::vector<double>(n)},
                                {"sign_M_s", std::vector<double>(n)},
                                {"abs_M_s", std::vector<double>(n)},
                                {"running_max", std::vector<double>(n)},
                                {"local_time", std::vector<double>(n)}};
    for (std::size_t i = 0; i < n; ++i) {
        const PathSample& p = ensemble[i];
        const double m = p[s_step];
        cols[1].values[i] = m;
        cols[2].values[i] = sign_of(m);
        cols[3].values[i] = std::abs(m);
        double top = p[0];
        for (std::size_t k = 0; k <= s_step; ++k) top = std::max(top, p[k]);
        cols[4].values[i] = top;
        const double start = p[0];
        double lt = 0.0;
        double x = 0.0;
        for (std::size_t k = 0; k < s_step; ++k) {
            const double next = p[k + 1] - start;
            lt -= sign_of(x) * (next - x);
            x = next;
        }
        cols[5].values[i] = lt + std::abs(x);
    }
    return cols;
}

TestEntry test_self_filtration_martingale(const Ensemble& ensemble, double s, double t,
                                          double alpha, std::span<const Regressor> extra) {
    const TimeGrid& grid = ensemble.grid();
    const std::size_t ks = step_of(grid, s, "self_filtration_martingale");
    const std::size_t kt = step_of(grid, t, "self_filtration_martingale");
    if (!(ks < kt)) throw std::invalid_argument("self_filtration_martingale: need s < t");

    auto cols = default_regressors(ensemble, ks);
    for (const auto& r : extra) {
        if (r.values.size() != ensemble.n_paths()) {
            throw std::invalid_argument("self_filtration_martingale: regressor '" + r.name +
                                        "' has the wrong length");
        }
        cols.push_back(r);
    }
    const auto n = static_cast<Eigen::Index>(ensemble.n_paths());
    const auto p = static_cast<Eigen::Index>(cols.size());
    if (n <= p + 1) {
        throw InsufficientData("self_filtration_martingale: " + std::to_string(n) +
                               " paths for " + std::to_string(p) + " regressors");
    }

    Eigen::MatrixXd X(n, p);
    for (Eigen::Index j = 0; j < p; ++j) {
        for (Eigen::Index i = 0; i < n; ++i) X(i, j) = cols[static_cast<std::size_t>(j)].values[static_cast<std::size_t>(i)];
    }
    const auto dy = ensemble.increments(ks, kt);
    const Eigen::VectorXd y = Eigen::Map<const Eigen::VectorXd>(dy.data(), n);

    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(X);
    qr.setThreshold(1e-10);
    const Eigen::Index rank = qr.rank();

    TestEntry e;
    e.name = "self_filtration_martingale";
    std::string dropped;
    const auto& perm = qr.colsPermutation().indices();
    for (Eigen::Index j = rank; j < p; ++j) {
        if (!dropped.empty()) dropped += ", ";
        dropped += cols[static_cast<std::size_t>(perm(j))].name;
    }
    if (!dropped.empty()) e.diagnostic = "collinear regressors dropped: " + dropped;
    if (rank == 0) {
        e.diagnostic = "no usable regressors";
        e.p_value = 0.0;
        return finish(std::move(e), alpha);
    }

    Eigen::MatrixXd Xr(n, rank);
    for (Eigen::Index j = 0; j < rank; ++j) Xr.col(j) = X.col(perm(j));
    const Eigen::VectorXd beta = Xr.colPivHouseholderQr().solve(y);
    const Eigen::VectorXd resid = y - Xr * beta;
    const double rss = resid.squaredNorm();
    const double tss = y.squaredNorm();
    const double d1 = static_cast<double>(rank);
    const double d2 = static_cast<double>(n - rank);
    const double sigma2 = rss / d2;
    const double F = rss > 0.0 ? ((tss - rss) / d1) / sigma2 : INFINITY;

    e.statistic = F;
    e.p_value = stats::f_upper(F, d1, d2);
    e.details.emplace_back("s", s);
    e.details.emplace_back("t", t);
    e.details.emplace_back("dof_regression", d1);
    e.details.emplace_back("dof_residual", d2);
    const Eigen::MatrixXd cov = sigma2 * (Xr.transpose() * Xr).inverse();
    for (Eigen::Index j = 0; j < rank; ++j) {
        const auto& name = cols[static_cast<std::size_t>(perm(j))].name;
        e.details.emplace_back("coef_" + name, beta(j));
        e.details.emplace_back("t_" + name, beta(j) / std::sqrt(cov(j, j)));
    }
    return finish(std::move(e), alpha);
}

std::vector<IntervalPair> consecutive_pairs(const TimeGrid& grid, std::size_t n_subintervals) {
    if (n_subintervals < 2 || grid.n_steps() % n_subintervals != 0) {
        throw std::invalid_argument(
            "consecutive_pairs: need at least two subintervals dividing n_steps");
    }
    const std::size_t w = grid.n_steps() / n_subintervals;
    std::vector<IntervalPair> pairs;
    for (std::size_t j = 0; j + 1 < n_subintervals; ++j) {
        pairs.push_back({j * w, (j + 1) * w, (j + 1) * w, (j + 2) * w});
    }
    return pairs;
}

TestEntry test_increment_independence(const Ensemble& ensemble,
                                      std::span<const IntervalPair> pairs, double alpha) {
    if (pairs.empty()) throw std::invalid_argument("increment_independence: no interval pairs");
    const std::size_t n = ensemble.n_paths();
    if (n < 4) throw InsufficientData("increment_independence: need at least four paths");
    const std::size_t last = ensemble.grid().n_steps();
    for (const auto& pr : pairs) {
        const bool ordered = pr.a_begin < pr.a_end && pr.b_begin < pr.b_end && pr.a_end <= last &&
                             pr.b_end <= last;
        const bool disjoint = pr.a_end <= pr.b_begin || pr.b_end <= pr.a_begin;
        if (!ordered || !disjoint) {
            throw std::invalid_argument("increment_independence: intervals must be disjoint and in range");
        }
    }
    double chi = 0.0;
    double worst = 0.0;
    const double root = std::sqrt(static_cast<double>(n) - 3.0);
    constexpr double edge = 1.0 - 1e-15;
    for (const auto& pr : pairs) {
        const auto a = ensemble.increments(pr.a_begin, pr.a_end);
        const auto b = ensemble.increments(pr.b_begin, pr.b_end);
        const double r = std::clamp(stats::correlation(a, b), -edge, edge);
        worst = std::max(worst, std::abs(r));
        const double z = std::atanh(r) * root;
        chi += z * z;
    }
    TestEntry e;
    e.name = "increment_independence";
    e.statistic = chi;
    e.p_value = stats::chi_square_upper(chi, static_cast<double>(pairs.size()));
    e.details = {{"n_pairs", static_cast<double>(pairs.size())}, {"max_abs_correlation", worst}};
    return finish(std::move(e), alpha);
}

BMTestReport run_battery(const Ensemble& ensemble, const BatteryConfig& config) {
    if (!(config.alpha > 0.0 && config.alpha < 1.0)) {
        throw std::invalid_argument("run_battery: alpha must lie in (0, 1)");
    }
    const TimeGrid& grid = ensemble.grid();
    BMTestReport r;
    r.source = ensemble.source();
    r.n_paths = ensemble.n_paths();
    r.dt = grid.dt();
    r.n_steps = grid.n_steps();
    r.config = config;
    r.config.martingale_s = config.martingale_s.value_or(grid.time(grid.n_steps() / 2));
    r.config.martingale_t = config.martingale_t.value_or(grid.horizon());

    constexpr std::size_t k = 5;
    r.corrected_alpha = config.alpha / static_cast<double>(k);
    const double a = r.corrected_alpha;
    const auto pairs = consecutive_pairs(grid, config.n_subintervals);
    r.entries.push_back(test_terminal_moments(ensemble, a));
    r.entries.push_back(test_increment_normality(ensemble, config.n_subintervals, a));
    r.entries.push_back(test_quadratic_variation(ensemble, a));
    r.entries.push_back(
        test_self_filtration_martingale(ensemble, *r.config.martingale_s, *r.config.martingale_t, a));
    r.entries.push_back(test_increment_independence(ensemble, pairs, a));
    r.verdict = std::all_of(r.entries.begin(), r.entries.end(),
                            [](const TestEntry& e) { return e.pass; });
    return r;
}

nlohmann::json to_json(const TestEntry& entry) {
    nlohmann::json details = nlohmann::json::object();
    for (const auto& [key, value] : entry.details) details[key] = value;
    nlohmann::json j{{"test", entry.name},
                     {"statistic", entry.statistic},
                     {"p_value", entry.p_value},
                     {"threshold", entry.threshold},
                     {"pass", entry.pass},
                     {"details", details}};
    if (!entry.diagnostic.empty()) j["diagnostic"] = entry.diagnostic;
    return j;
}

nlohmann::json to_json(const BMTestReport& report) {
    nlohmann::json tests = nlohmann::json::array();
    for (const auto& e : report.entries) tests.push_back(to_json(e));
    nlohmann::json config{{"source", report.source},
                          {"n_paths", report.n_paths},
                          {"dt", report.dt},
                          {"n_steps", report.n_steps},
                          {"alpha", report.config.alpha},
                          {"corrected_alpha", report.corrected_alpha},
                          {"n_subintervals", report.config.n_subintervals}};
    if (report.config.martingale_s) config["martingale_s"] = *report.config.martingale_s;
    if (report.config.martingale_t) config["martingale_t"] = *report.config.martingale_t;
    return {{"config", config}, {"tests", tests}, {"verdict", report.verdict}};
}

void write_report_csv(std::ostream& out, const BMTestReport& report) {
    out << "test,statistic,p_value,pass\n";
    for (const auto& e : report.entries) {
        out << e.name << ',' << format_double(e.statistic) << ',' << format_double(e.p_value) << ','
            << (e.pass ? "true" : "false") << '\n';
    }
}

}  // namespace driftcam
