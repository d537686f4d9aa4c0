#include "driftcam/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <memory>
#include <sstream>

#include <openssl/evp.h>

#include "driftcam/bm_battery.hpp"
#include "driftcam/concat_scheme.hpp"
#include "driftcam/emery_discrete.hpp"
#include "driftcam/ensembles.hpp"
#include "driftcam/filter_drift.hpp"
#include "driftcam/levy_transform.hpp"
#include "driftcam/parallel.hpp"

namespace driftcam {

namespace {

using json = nlohmann::json;

// Typed, validated access to one experiment's configuration object.
class Params {
public:
    explicit Params(const json& j) : j_(j) {
        if (!j_.is_object()) throw ConfigError("config must be a JSON object");
    }

    bool has(const char* key) const { return j_.contains(key) && !j_.at(key).is_null(); }
    const json& raw(const char* key) const {
        if (!has(key)) throw ConfigError(std::string("missing required field '") + key + "'");
        return j_.at(key);
    }

    double number(const char* key) const {
        const auto& v = raw(key);
        if (!v.is_number()) throw ConfigError(std::string("field '") + key + "' must be a number");
        const double x = v.get<double>();
        if (!std::isfinite(x)) throw ConfigError(std::string("field '") + key + "' must be finite");
        return x;
    }
    double number(const char* key, double fallback) const { return has(key) ? number(key) : fallback; }

    double positive(const char* key) const {
        const double x = number(key);
        if (!(x > 0.0)) throw ConfigError(std::string("field '") + key + "' must be positive");
        return x;
    }
    double positive(const char* key, double fallback) const {
        return has(key) ? positive(key) : fallback;
    }

    std::uint64_t count(const char* key) const {
        const auto& v = raw(key);
        if (!v.is_number_integer() || v.get<long long>() < 0) {
            throw ConfigError(std::string("field '") + key + "' must be a nonnegative integer");
        }
        return v.get<std::uint64_t>();
    }
    std::uint64_t count(const char* key, std::uint64_t fallback) const {
        return has(key) ? count(key) : fallback;
    }

    std::string text(const char* key, const std::string& fallback) const {
        if (!has(key)) return fallback;
        const auto& v = raw(key);
        if (!v.is_string()) throw ConfigError(std::string("field '") + key + "' must be a string");
        return v.get<std::string>();
    }

    std::uint64_t seed() const { return count("seed"); }

    double alpha() const {
        const double a = number("alpha", 0.05);
        if (!(a > 0.0 && a < 1.0)) throw ConfigError("field 'alpha' must lie in (0, 1)");
        return a;
    }

    TimeGrid grid() const {
        const double dt = positive("dt");
        std::uint64_t steps = 0;
        if (has("n_steps")) {
            steps = count("n_steps");
        } else {
            const double T = positive("T");
            const double ratio = T / dt;
            steps = static_cast<std::uint64_t>(std::llround(ratio));
            if (std::abs(ratio - static_cast<double>(steps)) > 1e-6 * std::max(1.0, ratio)) {
                throw ConfigError("T must be a whole number of dt steps");
            }
        }
        if (steps == 0) throw ConfigError("grid needs at least one step");
        return TimeGrid(dt, steps);
    }

private:
    const json& j_;
};

std::size_t at_least(std::uint64_t v, std::uint64_t floor, const char* what) {
    if (v < floor) {
        throw ConfigError(std::string(what) + " must be at least " + std::to_string(floor));
    }
    return static_cast<std::size_t>(v);
}

json grid_json(const TimeGrid& g) {
    return {{"dt", g.dt()}, {"n_steps", g.n_steps()}, {"T", g.horizon()}};
}

BatteryConfig battery_config(const Params& p, const TimeGrid& grid) {
    BatteryConfig c;
    c.alpha = p.alpha();
    c.n_subintervals = at_least(p.count("n_subintervals", 10), 2, "n_subintervals");
    if (grid.n_steps() % c.n_subintervals != 0) {
        throw ConfigError("n_subintervals must divide the number of steps");
    }
    if (p.has("martingale_s")) c.martingale_s = p.number("martingale_s");
    if (p.has("martingale_t")) c.martingale_t = p.number("martingale_t");
    return c;
}

std::string report_csv(const BMTestReport& r) {
    std::ostringstream os;
    write_report_csv(os, r);
    return os.str();
}

}  // namespace

ExperimentResult run_hidden(const json& config, unsigned jobs) {
    const Params p(config);
    const double mu = p.positive("mu");
    const TimeGrid grid = p.grid();
    const std::size_t n = at_least(p.count("n_paths"), 100, "n_paths");
    const std::uint64_t seed = p.seed();
    const auto battery = battery_config(p, grid);
    const std::size_t csv_paths = std::min<std::size_t>(p.count("csv_paths", 10), n);
    const std::size_t coarsen = at_least(p.count("filter_coarsen", 4), 1, "filter_coarsen");
    std::optional<int> pinned;
    const std::string eps_mode = p.text("epsilon", "random");
    if (eps_mode == "+1") {
        pinned = 1;
    } else if (eps_mode == "-1") {
        pinned = -1;
    } else if (eps_mode != "random") {
        throw ConfigError("field 'epsilon' must be \"random\", \"+1\" or \"-1\"");
    }

    const auto paths = hidden_paths(mu, grid, n, seed, jobs, pinned);

    // Per-path diagnostics, reduced in path order.
    struct PathStats {
        double min_mu, max_mu, balance, same_grid, coarse;
        std::size_t range_violations;
    };
    std::vector<PathStats> stats(n);
    const bool can_coarsen = coarsen > 1 && grid.n_steps() % coarsen == 0;
    parallel_for(n, jobs, [&](std::size_t i) {
        const auto& h = paths[i];
        PathStats s{INFINITY, -INFINITY, 0.0, 0.0, 0.0, 0};
        for (std::size_t k = 0; k < h.mu_t.size(); ++k) {
            s.min_mu = std::min(s.min_mu, h.mu_t[k]);
            s.max_mu = std::max(s.max_mu, h.mu_t[k]);
            if (!(h.mu_t[k] > 0.0 && h.mu_t[k] < 2.0 * mu)) ++s.range_violations;
            s.balance = std::max(s.balance, std::abs(h.g[k] * h.mu_plus[k] - (1.0 - h.g[k]) * h.mu_minus[k]));
        }
        const auto w = bayes_filter(h.Y, h.mu_plus, h.mu_minus);
        for (std::size_t k = 0; k < w.p.size(); ++k) s.same_grid = std::max(s.same_grid, std::abs(w.p[k] - h.g[k]));
        if (can_coarsen) {
            const auto g = h.g.coarsen(coarsen);
            const auto wc = bayes_filter(h.Y.coarsen(coarsen), h.mu_plus.coarsen(coarsen),
                                         h.mu_minus.coarsen(coarsen));
            for (std::size_t k = 0; k < g.size(); ++k) s.coarse = std::max(s.coarse, std::abs(wc.p[k] - g[k]));
        }
        stats[i] = s;
    });

    PathStats total{INFINITY, -INFINITY, 0.0, 0.0, 0.0, 0};
    std::size_t plus = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const auto& s = stats[i];
        total.min_mu = std::min(total.min_mu, s.min_mu);
        total.max_mu = std::max(total.max_mu, s.max_mu);
        total.balance = std::max(total.balance, s.balance);
        total.same_grid = std::max(total.same_grid, s.same_grid);
        total.coarse = std::max(total.coarse, s.coarse);
        total.range_violations += s.range_violations;
        if (paths[i].scenario.epsilon() == 1) ++plus;
    }

    std::vector<PathSample> ys;
    std::vector<double> eps(n);
    ys.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        ys.push_back(paths[i].Y);
        eps[i] = paths[i].scenario.epsilon();
    }
    const Ensemble ensemble("hidden_Y", std::move(ys));
    const auto report = run_battery(ensemble, battery);
    const Regressor eps_col{"epsilon", eps};
    const auto revealed = test_self_filtration_martingale(
        ensemble, *report.config.martingale_s, *report.config.martingale_t, report.corrected_alpha,
        std::span<const Regressor>(&eps_col, 1));

    ExperimentResult r;
    json filter{{"same_grid_max_error", total.same_grid}};
    if (can_coarsen) {
        filter["coarse_factor"] = coarsen;
        filter["coarse_dt"] = grid.dt() * static_cast<double>(coarsen);
        filter["coarse_max_error"] = total.coarse;
    }
    r.report = {{"command", "hidden"},
                {"parameters",
                 {{"mu", mu}, {"grid", grid_json(grid)}, {"n_paths", n}, {"seed", seed},
                  {"alpha", battery.alpha}, {"epsilon", eps_mode}}},
                {"epsilon_plus_count", plus},
                {"drift_range",
                 {{"min", total.min_mu}, {"max", total.max_mu}, {"upper", 2.0 * mu},
                  {"violations", total.range_violations}}},
                {"balance_identity_max", total.balance},
                {"filter_consistency", filter},
                {"battery", to_json(report)},
                {"information_hiding",
                 {{"without_epsilon", to_json(report.entry("self_filtration_martingale"))},
                  {"with_epsilon", to_json(revealed)}}}};
    r.accepted = report.verdict && total.range_violations == 0;
    r.report["accepted"] = r.accepted;

    r.files.push_back({"battery.csv", report_csv(report)});
    for (std::size_t i = 0; i < csv_paths; ++i) {
        std::ostringstream os;
        write_hidden_csv(os, paths[i]);
        r.files.push_back({"hidden_path_" + std::to_string(i) + ".csv", os.str()});
    }
    return r;
}

ExperimentResult run_concat(const json& config, unsigned jobs) {
    const Params p(config);
    const double mu = p.positive("mu");
    const double delta = p.positive("delta");
    const TimeGrid grid = p.grid();
    const std::size_t n = at_least(p.count("n_paths"), 100, "n_paths");
    const auto battery = battery_config(p, grid);
    const std::size_t csv_paths = std::min<std::size_t>(p.count("csv_paths", 10), n);
    const ConcatConfig cc{mu, delta, grid, p.seed()};
    try {
        cc.validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }

    const auto paths = concat_paths(cc, n, jobs);

    struct PathStats {
        DriftBoundReport bound;
        std::size_t segments, threshold_stops, seg_S, seg_S_grid, seg_filter;
        double gamma_sum, worst_S_ratio, worst_filter_ratio;
    };
    std::vector<PathStats> stats(n);
    parallel_for(n, jobs, [&](std::size_t i) {
        PathStats s{check_drift_bound(paths[i], cc), 0, 0, 0, 0, 0, 0.0, 0.0, 0.0};
        for (const auto& seg : paths[i].segments) {
            ++s.segments;
            s.gamma_sum += seg.gamma;
            if (seg.stop_reason == StopReason::Threshold) ++s.threshold_stops;
            const auto l = check_segment_bounds(seg, mu);
            s.seg_S += l.violations_S;
            s.seg_S_grid += l.violations_S_grid;
            s.seg_filter += l.violations_filter;
            s.worst_S_ratio = std::max(s.worst_S_ratio, l.max_abs_S / l.bound_S);
            s.worst_filter_ratio = std::max(s.worst_filter_ratio, l.max_filter_gap / l.bound_filter);
        }
        stats[i] = s;
    });

    std::size_t segments = 0, thresholds = 0, seg_S = 0, seg_S_grid = 0, seg_filter = 0,
                violating = 0;
    double gamma_sum = 0.0, max_dev = 0.0, dhat = 0.0, worst_S = 0.0, worst_filter = 0.0;
    for (const auto& s : stats) {
        segments += s.segments;
        thresholds += s.threshold_stops;
        seg_S += s.seg_S;
        seg_S_grid += s.seg_S_grid;
        seg_filter += s.seg_filter;
        gamma_sum += s.gamma_sum;
        max_dev = std::max(max_dev, s.bound.max_deviation);
        dhat = std::max(dhat, s.bound.delta_hat_max);
        worst_S = std::max(worst_S, s.worst_S_ratio);
        worst_filter = std::max(worst_filter, s.worst_filter_ratio);
        if (!s.bound.pass) ++violating;
    }
    const double constant = 3.0 * mu * mu * mu + 2.0 * mu * mu;

    std::vector<PathSample> ms;
    ms.reserve(n);
    for (const auto& c : paths) ms.push_back(c.path.M);
    const Ensemble ensemble("concat_M", std::move(ms));
    const auto report = run_battery(ensemble, battery);

    ExperimentResult r;
    r.report = {{"command", "concat"},
                {"parameters",
                 {{"mu", mu}, {"delta", delta}, {"grid", grid_json(grid)}, {"n_paths", n},
                  {"seed", cc.seed}, {"alpha", battery.alpha}}},
                {"segments",
                 {{"total", segments},
                  {"mean_per_path", static_cast<double>(segments) / static_cast<double>(n)},
                  {"mean_gamma", gamma_sum / static_cast<double>(segments)},
                  {"threshold_fraction",
                   static_cast<double>(thresholds) / static_cast<double>(segments)}}},
                {"drift_bound",
                 {{"nominal_bound", delta * constant},
                  {"max_deviation", max_dev},
                  {"delta_hat_max", dhat},
                  {"realized_bound", dhat * constant},
                  {"violating_paths", violating}}},
                {"segment_bounds",
                 {{"segments_checked", segments},
                  {"violations_S", seg_S},
                  {"violations_S_beyond_crossing_slack", seg_S_grid},
                  {"violations_filter", seg_filter},
                  {"max_S_over_bound", worst_S},
                  {"max_filter_over_bound", worst_filter}}},
                {"battery", to_json(report)}};
    r.accepted = report.verdict && violating == 0;
    r.report["accepted"] = r.accepted;

    r.files.push_back({"battery.csv", report_csv(report)});
    for (std::size_t i = 0; i < csv_paths; ++i) {
        std::ostringstream path_csv, seg_csv;
        write_concat_csv(path_csv, paths[i].path);
        write_segments_csv(seg_csv, paths[i].segments);
        r.files.push_back({"concat_path_" + std::to_string(i) + ".csv", path_csv.str()});
        r.files.push_back({"segments_" + std::to_string(i) + ".csv", seg_csv.str()});
    }
    return r;
}

ExperimentResult run_discrete(const json& config, unsigned jobs) {
    (void)jobs;
    const Params p(config);
    BiasedBitLaw law = [&] {
        try {
            return BiasedBitLaw::from_json(p.raw("law"));
        } catch (const ConfigError&) {
            throw;
        } catch (const std::exception& e) {
            throw ConfigError(std::string("law: ") + e.what());
        }
    }();
    const std::size_t window = at_least(p.count("window"), 1, "window");
    const std::size_t bits = at_least(p.count("bits_per_set"), 1, "bits_per_set");
    const std::size_t depth = static_cast<std::size_t>(p.count("depth", 4));
    const std::size_t horizon = at_least(p.count("diffuse_horizon", 100), 1, "diffuse_horizon");
    const std::size_t samples = static_cast<std::size_t>(p.count("mc_samples", 0));
    ExtractorKind kind;
    try {
        kind = extractor_from_string(p.text("extractor", "balanced"));
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }

    const auto family = build_index_family(window, bits, depth);
    const auto fam_check = check_family(family);
    const std::size_t needed = enumeration_bits(family, window, bits);
    if (needed > kEnumerationBudget) {
        throw ConfigError("exact enumeration refused: " + std::to_string(needed) +
                          " sign bits referenced, budget is " + std::to_string(kEnumerationBudget));
    }
    JointLaw joint;
    DiffuseReport diffuse;
    try {
        joint = exact_joint_law(law, family, window, bits, kind);
        diffuse = check_diffuse(law, static_cast<std::int64_t>(horizon));
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }
    const auto exact = check_exactness(joint);

    json terms = json::array();
    for (const auto& t : diffuse.terms) terms.push_back(to_string(t));
    json family_report = family.to_json();
    family_report["checks"] = {{"disjoint", fam_check.disjoint},
                               {"below_owner", fam_check.below_owner},
                               {"levels_bounded", fam_check.levels_bounded},
                               {"levels_disjoint", fam_check.levels_disjoint},
                               {"residual_closed", fam_check.residual_closed},
                               {"failures", fam_check.failures},
                               {"pass", fam_check.pass()}};

    ExperimentResult r;
    r.report = {{"command", "discrete"},
                {"parameters",
                 {{"law", law.to_json()}, {"window", window}, {"bits_per_set", bits},
                  {"depth", depth}, {"extractor", std::string(to_string(kind))}}},
                {"diffuse",
                 {{"horizon", horizon},
                  {"partial_sum", to_string(diffuse.partial_sum)},
                  {"partial_sum_value", diffuse.partial_sum.convert_to<double>()},
                  {"tail_sum", to_string(diffuse.tail_sum)},
                  {"tail_threshold", diffuse.tail_threshold},
                  {"flagged_non_diffuse", diffuse.flagged_non_diffuse}}},
                {"family", family_report},
                {"exact_law", joint.to_json()},
                {"exactness",
                 {{"fair", exact.fair},
                  {"products_fair", exact.products_fair},
                  {"factorized", exact.factorized},
                  {"conditionally_fair", exact.conditionally_fair},
                  {"failures", exact.failures},
                  {"pass", exact.pass()}}}};

    if (samples > 0) {
        const std::uint64_t seed = p.seed();
        std::vector<std::size_t> plus(window, 0), undecided(window, 0), used(window, 0);
        for (std::size_t s = 0; s < samples; ++s) {
            SeededRng rng(seed, s);
            const auto rec = scramble(law, family, rng, window, kind);
            for (std::size_t j = 0; j < window; ++j) {
                const auto& e = rec.entries[j];
                if (e.product == 1) ++plus[j];
                if (!e.decided) ++undecided[j];
                used[j] += e.bits_consumed;
            }
        }
        std::ostringstream os;
        os << "n,samples,product_plus_freq,undecided_freq,mean_bits\n";
        const double ns = static_cast<double>(samples);
        for (std::size_t j = 0; j < window; ++j) {
            os << -static_cast<std::int64_t>(j) << ',' << samples << ','
               << format_double(static_cast<double>(plus[j]) / ns) << ','
               << format_double(static_cast<double>(undecided[j]) / ns) << ','
               << format_double(static_cast<double>(used[j]) / ns) << '\n';
        }
        r.files.push_back({"scramble_summary.csv", os.str()});
        r.report["monte_carlo"] = {{"samples", samples}, {"seed", seed}};
    }
    r.files.push_back({"exact_law.json", joint.to_json().dump(2) + "\n"});
    r.accepted = fam_check.pass() && exact.pass();
    r.report["accepted"] = r.accepted;
    return r;
}

ExperimentResult run_calibrate(const json& config, unsigned jobs) {
    const Params p(config);
    const std::size_t runs = at_least(p.count("n_runs"), 1, "n_runs");
    const std::size_t n = at_least(p.count("n_paths"), 100, "n_paths");
    const TimeGrid grid = p.grid();
    const auto battery = battery_config(p, grid);
    const std::uint64_t seed = p.seed();
    const double alpha = battery.alpha;

    const std::vector<std::string> names{"terminal_moments", "increment_normality",
                                         "quadratic_variation", "self_filtration_martingale",
                                         "increment_independence"};
    // rejected[r][t] for test t in run r; the last column is the Bonferroni battery.
    std::vector<std::vector<char>> rejected(runs, std::vector<char>(names.size() + 1, 0));
    parallel_for(runs, jobs, [&](std::size_t run) {
        const Ensemble ensemble("brownian", brownian_paths(grid, n, run_seed(seed, run)));
        const double s = battery.martingale_s.value_or(grid.time(grid.n_steps() / 2));
        const double t = battery.martingale_t.value_or(grid.horizon());
        const auto pairs = consecutive_pairs(grid, battery.n_subintervals);
        const std::vector<TestEntry> entries{
            test_terminal_moments(ensemble, alpha),
            test_increment_normality(ensemble, battery.n_subintervals, alpha),
            test_quadratic_variation(ensemble, alpha),
            test_self_filtration_martingale(ensemble, s, t, alpha),
            test_increment_independence(ensemble, pairs, alpha)};
        const double corrected = alpha / static_cast<double>(entries.size());
        bool battery_reject = false;
        for (std::size_t k = 0; k < entries.size(); ++k) {
            rejected[run][k] = !entries[k].pass;
            battery_reject = battery_reject || entries[k].p_value < corrected;
        }
        rejected[run][names.size()] = battery_reject;
    });

    const double lo = alpha / 2.0, hi = 2.0 * alpha;
    json rates = json::array();
    std::ostringstream os;
    os << "test,rejections,runs,rate,pass\n";
    bool ok = true;
    for (std::size_t k = 0; k <= names.size(); ++k) {
        std::size_t count = 0;
        for (const auto& row : rejected) count += row[k] ? 1 : 0;
        const double rate = static_cast<double>(count) / static_cast<double>(runs);
        const bool gated = k < names.size();
        const bool pass = rate >= lo && rate <= hi;
        if (gated) ok = ok && pass;
        const std::string name = gated ? names[k] : "battery_bonferroni";
        rates.push_back({{"test", name}, {"rejections", count}, {"rate", rate},
                         {"pass", pass}, {"gated", gated}});
        os << name << ',' << count << ',' << runs << ',' << format_double(rate) << ','
           << (pass ? "true" : "false") << '\n';
    }

    ExperimentResult r;
    r.report = {{"command", "calibrate"},
                {"parameters",
                 {{"n_runs", runs}, {"n_paths", n}, {"grid", grid_json(grid)}, {"seed", seed},
                  {"alpha", alpha}, {"n_subintervals", battery.n_subintervals}}},
                {"acceptance_band", {lo, hi}},
                {"rejection_rates", rates}};
    r.accepted = ok;
    r.report["accepted"] = ok;
    r.files.push_back({"calibration.csv", os.str()});
    return r;
}

ExperimentResult run_experiment(const std::string& command, const json& config, unsigned jobs) {
    if (command == "hidden") return run_hidden(config, jobs);
    if (command == "concat") return run_concat(config, jobs);
    if (command == "discrete") return run_discrete(config, jobs);
    if (command == "calibrate") return run_calibrate(config, jobs);
    throw ConfigError("unknown command '" + command + "'");
}

json load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file " + path.string());
    try {
        json j = json::parse(in);
        if (!j.is_object()) throw ConfigError("config file must hold a JSON object");
        return j;
    } catch (const json::parse_error& e) {
        throw ConfigError("config file " + path.string() + ": " + e.what());
    }
}

std::string render_report(const ExperimentResult& result) { return result.report.dump(2) + "\n"; }

std::string sha256_hex(const std::string& bytes) {
    std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), EVP_MD_CTX_free);
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1 ||
        EVP_DigestUpdate(ctx.get(), bytes.data(), bytes.size()) != 1 ||
        EVP_DigestFinal_ex(ctx.get(), digest, &len) != 1) {
        throw std::runtime_error("sha256: digest failed");
    }
    std::ostringstream os;
    for (unsigned int i = 0; i < len; ++i) {
        os << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(digest[i]);
    }
    return os.str();
}

namespace {

std::string utc_timestamp() {
    const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

void write_file(const std::filesystem::path& path, const std::string& contents) {
    std::ofstream out(path, std::ios::binary);
    out << contents;
    if (!out) throw std::runtime_error("cannot write " + path.string());
}

}  // namespace

void write_outputs(const std::filesystem::path& dir, const std::string& command,
                   const json& config, const ExperimentResult& result) {
    std::filesystem::create_directories(dir);
    std::vector<OutputFile> files = result.files;
    files.push_back({"report.json", render_report(result)});
    json listing = json::array();
    for (const auto& f : files) {
        write_file(dir / f.name, f.contents);
        listing.push_back({{"path", f.name}, {"bytes", f.contents.size()}, {"sha256", sha256_hex(f.contents)}});
    }
    const json manifest{{"artifact", "drift-camouflage"},
                        {"version", kArtifactVersion},
                        {"command", command},
                        {"config", config},
                        {"timestamp", utc_timestamp()},
                        {"accepted", result.accepted},
                        {"files", listing}};
    write_file(dir / "manifest.json", manifest.dump(2) + "\n");
}

int run_cli(const CliOptions& options) {
    try {
        json config = load_config(options.config);
        if (config.contains("command")) {
            if (!config["command"].is_string() || config["command"].get<std::string>() != options.command) {
                throw ConfigError("config file is for command '" + config["command"].dump() +
                                  "', not '" + options.command + "'");
            }
        }
        config["command"] = options.command;
        if (options.seed) config["seed"] = *options.seed;
        if (options.jobs == 0) throw ConfigError("--jobs must be at least 1");

        const auto result = run_experiment(options.command, config, options.jobs);
        write_outputs(options.out, options.command, config, result);
        std::cout << options.command << ": " << (result.accepted ? "accepted" : "REJECTED")
                  << ", " << result.files.size() + 2 << " files in " << options.out.string() << '\n';
        return result.accepted ? kExitOk : kExitAcceptance;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const std::exception& e) {
        std::cerr << "runtime error: " << e.what() << '\n';
        return kExitRuntime;
    }
}

}  // namespace driftcam
