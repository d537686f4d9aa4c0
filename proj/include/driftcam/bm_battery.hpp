#pragma once

// Statistical battery for "is this ensemble a Brownian motion in its own
// filtration". Each test returns a p-value; the battery verdict applies a
// Bonferroni split of alpha across the tests it ran.

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "driftcam/grid_paths.hpp"

namespace driftcam {

/// Raised when a test has too few observations to produce a statistic.
class InsufficientData : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Paths on one common grid plus a tag naming the construction.
class Ensemble {
public:
    /// Throws InsufficientData for fewer than two paths.
    Ensemble(std::string source, std::vector<PathSample> paths);

    const std::string& source() const noexcept { return source_; }
    const TimeGrid& grid() const noexcept { return paths_.front().grid(); }
    std::size_t n_paths() const noexcept { return paths_.size(); }
    const PathSample& operator[](std::size_t i) const noexcept { return paths_[i]; }
    std::span<const PathSample> paths() const noexcept { return paths_; }

    /// Values at grid index k across all paths.
    std::vector<double> at_step(std::size_t k) const;
    std::vector<double> increments(std::size_t from, std::size_t to) const;

private:
    std::string source_;
    std::vector<PathSample> paths_;
};

struct TestEntry {
    std::string name;
    double statistic = 0.0;
    double p_value = 1.0;
    double threshold = 0.0;  // pass iff p_value >= threshold
    bool pass = false;
    std::string diagnostic;
    std::vector<std::pair<std::string, double>> details;
};

struct BatteryConfig {
    double alpha = 0.05;
    std::size_t n_subintervals = 10;
    std::optional<double> martingale_s;  // default T/2
    std::optional<double> martingale_t;  // default T
};

struct BMTestReport {
    std::string source;
    std::size_t n_paths = 0;
    double dt = 0.0;
    std::size_t n_steps = 0;
    BatteryConfig config;
    double corrected_alpha = 0.0;
    std::vector<TestEntry> entries;
    bool verdict = false;

    const TestEntry& entry(std::string_view name) const;
};

/// A named column of per-path values used as an extra regressor.
struct Regressor {
    std::string name;
    std::vector<double> values;
};

/// Two disjoint index ranges [a_begin, a_end) and [b_begin, b_end) in steps.
struct IntervalPair {
    std::size_t a_begin, a_end, b_begin, b_end;
};

/// Needs at least 100 paths.
TestEntry test_terminal_moments(const Ensemble& ensemble, double alpha);
TestEntry test_increment_normality(const Ensemble& ensemble, std::size_t n_subintervals,
                                   double alpha);
TestEntry test_quadratic_variation(const Ensemble& ensemble, double alpha);

/// 1, M_s, sign(M_s), |M_s|, max_{u<=s} M_u and the Tanaka residual at s.
std::vector<Regressor> default_regressors(const Ensemble& ensemble, std::size_t s_step);

/// F-test that the regression of M_t - M_s on the regressors has all
/// coefficients zero. `extra` columns are appended to the defaults.
TestEntry test_self_filtration_martingale(const Ensemble& ensemble, double s, double t,
                                          double alpha, std::span<const Regressor> extra = {});

TestEntry test_increment_independence(const Ensemble& ensemble,
                                      std::span<const IntervalPair> pairs, double alpha);
/// Adjacent pairs of `n_subintervals` equal pieces of the horizon.
std::vector<IntervalPair> consecutive_pairs(const TimeGrid& grid, std::size_t n_subintervals);

BMTestReport run_battery(const Ensemble& ensemble, const BatteryConfig& config = {});

nlohmann::json to_json(const TestEntry& entry);
nlohmann::json to_json(const BMTestReport& report);
/// Columns test,statistic,p_value,pass.
void write_report_csv(std::ostream& out, const BMTestReport& report);

}  // namespace driftcam
