#include "driftcam/concat_scheme.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <stdexcept>
#include <string>

#include "driftcam/filter_drift.hpp"
#include "driftcam/levy_transform.hpp"

namespace driftcam {

void ConcatConfig::validate() const {
    if (!(mu > 0.0) || !std::isfinite(mu)) throw std::invalid_argument("concat: mu must be positive");
    if (!(delta > 0.0) || !std::isfinite(delta)) {
        throw std::invalid_argument("concat: delta must be positive");
    }
    (void)cap_steps(delta, grid.dt());
}

std::string_view to_string(StopReason reason) noexcept {
    return reason == StopReason::Threshold ? "threshold" : "time_cap";
}

double SegmentRecord::sup_abs_N() const {
    double m = 0.0;
    for (double x : N.values()) m = std::max(m, std::abs(x));
    return m;
}

double SegmentRecord::delta_hat() const { return std::max(sup_abs_N(), gamma); }

std::size_t cap_steps(double delta, double dt) {
    const auto steps = static_cast<std::size_t>(std::floor(delta / dt * (1.0 + 1e-12)));
    if (steps == 0) {
        throw std::invalid_argument("concat: delta must be at least one grid step");
    }
    return steps;
}

SegmentRecord run_segment(std::size_t index, std::span<const double> increments, double mu,
                          double delta, double dt, std::size_t start_step) {
    if (!(mu > 0.0)) throw std::invalid_argument("run_segment: mu must be positive");
    if (!(delta > 0.0)) throw std::invalid_argument("run_segment: delta must be positive");
    const std::size_t cap = cap_steps(delta, dt);
    if (increments.size() < cap) {
        throw std::invalid_argument("run_segment: need " + std::to_string(cap) +
                                    " increments, got " + std::to_string(increments.size()));
    }

    std::vector<double> w{0.0}, drift, s{0.0}, h, n{0.0};
    w.reserve(cap + 1);
    s.reserve(cap + 1);
    n.reserve(cap + 1);
    drift.reserve(cap + 1);
    h.reserve(cap + 1);

    StopReason reason = StopReason::TimeCap;
    std::size_t k = 0;
    while (k < cap) {
        const double t = static_cast<double>(k) * dt;
        drift.push_back(drift_mu(t, w[k], mu));
        h.push_back(sign_of(s[k]));
        w.push_back(w[k] + increments[k]);
        s.push_back(s[k] + drift[k] * dt + increments[k]);
        n.push_back(n[k] + h[k] * (s[k + 1] - s[k]));
        ++k;
        if (std::abs(n[k]) >= delta) {
            reason = StopReason::Threshold;
            break;
        }
    }
    drift.push_back(drift_mu(static_cast<double>(k) * dt, w[k], mu));
    h.push_back(sign_of(s[k]));

    const TimeGrid grid(dt, k);
    return SegmentRecord{index,
                         start_step,
                         static_cast<double>(start_step) * dt,
                         k,
                         static_cast<double>(k) * dt,
                         reason,
                         PathSample(grid, std::move(w)),
                         PathSample(grid, std::move(drift)),
                         PathSample(grid, std::move(s)),
                         PathSample(grid, std::move(h)),
                         PathSample(grid, std::move(n))};
}

SegmentSampler::SegmentSampler(double mu, double delta, double dt, SeededRng& rng)
    : mu_(mu), delta_(delta), dt_(dt), cap_(cap_steps(delta, dt)), rng_(rng) {
    pending_.reserve(2 * cap_);
}

SegmentRecord SegmentSampler::next() {
    const double sd = std::sqrt(dt_);
    while (pending_.size() < cap_) pending_.push_back(sd * rng_.normal());
    SegmentRecord seg = run_segment(++index_, pending_, mu_, delta_, dt_, consumed_);
    pending_.erase(pending_.begin(), pending_.begin() + static_cast<std::ptrdiff_t>(seg.stop_step));
    consumed_ += seg.stop_step;
    return seg;
}

Concatenation build_concatenation(const ConcatConfig& config, SeededRng& rng) {
    config.validate();
    const TimeGrid& grid = config.grid;
    const std::size_t n = grid.n_steps();

    std::vector<double> b(n + 1, 0.0), s(n + 1, 0.0), m(n + 1, 0.0), mu(n + 1, config.mu),
        h(n + 1, -1.0);
    std::vector<std::size_t> owner(n + 1, 1);
    std::vector<double> taus{0.0};
    std::vector<SegmentRecord> segments;

    SegmentSampler sampler(config.mu, config.delta, grid.dt(), rng);
    std::size_t pos = 0;
    while (pos < n) {
        SegmentRecord seg = sampler.next();
        const std::size_t take = std::min(seg.stop_step, n - pos);
        for (std::size_t i = 0; i <= take; ++i) {
            b[pos + i] = b[pos] + seg.W[i];
            s[pos + i] = s[pos] + seg.S_tilde[i];
            m[pos + i] = m[pos] + seg.N[i];
        }
        for (std::size_t i = 0; i < take; ++i) {
            mu[pos + i] = seg.mu_tilde[i];
            h[pos + i] = seg.H[i];
            owner[pos + i] = seg.index;
        }
        if (take < seg.stop_step) {
            // Horizon cuts this segment: its running values own the last point.
            mu[n] = seg.mu_tilde[take];
            h[n] = seg.H[take];
            owner[n] = seg.index;
        } else {
            // A fresh segment would start here: mu_0 = mu and sign(0) = -1.
            owner[pos + take] = seg.index + 1;
        }
        pos += take;
        taus.push_back(seg.start_time + seg.gamma);
        segments.push_back(std::move(seg));

        // Renewal guard: the segment count must stay within ten
        // times the horizon over the realized mean duration.
        const double mean_steps =
            static_cast<double>(sampler.steps_consumed()) / static_cast<double>(segments.size());
        if (static_cast<double>(segments.size()) > 10.0 * static_cast<double>(n) / mean_steps + 10.0) {
            throw std::runtime_error("build_concatenation: segment count exceeded renewal cap");
        }
    }

    return Concatenation{ConcatPath{PathSample(grid, std::move(b)), PathSample(grid, std::move(s)),
                                    PathSample(grid, std::move(mu)), PathSample(grid, std::move(h)),
                                    PathSample(grid, std::move(m)), std::move(taus),
                                    std::move(owner)},
                         std::move(segments)};
}

DriftBoundReport check_drift_bound(const Concatenation& concat, const ConcatConfig& config) {
    const double mu = config.mu;
    const double constant = 3.0 * mu * mu * mu + 2.0 * mu * mu;
    DriftBoundReport r{};
    r.nominal_bound = config.delta * constant;
    for (const auto& seg : concat.segments) r.delta_hat_max = std::max(r.delta_hat_max, seg.delta_hat());
    r.realized_bound = r.delta_hat_max * constant;

    const auto& path = concat.path;
    for (std::size_t k = 0; k < path.mu.size(); ++k) {
        const double dev = std::abs(path.mu[k] - mu);
        r.max_deviation = std::max(r.max_deviation, dev);
        const std::size_t l = path.segment_index[k];
        if (l >= 1 && l <= concat.segments.size() &&
            dev > concat.segments[l - 1].delta_hat() * constant) {
            ++r.segment_violations;
        }
    }
    r.pass = r.max_deviation <= r.realized_bound;
    return r;
}

SegmentBoundReport check_segment_bounds(const SegmentRecord& segment, double mu) {
    SegmentBoundReport r{};
    r.delta_hat = segment.delta_hat();
    r.bound_S = 2.0 * r.delta_hat;
    r.bound_filter = r.delta_hat * (2.0 * mu + 3.0 * mu * mu) / 2.0;
    const TimeGrid& grid = segment.W.grid();
    double landing = 0.0;
    for (std::size_t k = 0; k < grid.n_points(); ++k) {
        const double s = std::abs(segment.S_tilde[k]);
        if (k > 0 && sign_of(segment.S_tilde[k]) != sign_of(segment.S_tilde[k - 1])) landing = s;
        r.max_abs_S = std::max(r.max_abs_S, s);
        if (s > r.bound_S) ++r.violations_S;
        if (s > r.bound_S + landing) ++r.violations_S_grid;
        const double gap = std::abs(closed_form_g(grid.time(k), segment.W[k], -1, mu) - 0.5);
        r.max_filter_gap = std::max(r.max_filter_gap, gap);
        if (gap > r.bound_filter) ++r.violations_filter;
    }
    r.pass = r.violations_S == 0 && r.violations_filter == 0;
    return r;
}

double tail_truncation_stability(const Concatenation& concat, std::size_t L) {
    if (L > concat.segments.size()) {
        throw std::invalid_argument("tail_truncation_stability: L exceeds the segment count");
    }
    const auto& M = concat.path.M;
    const std::size_t n = M.grid().n_steps();
    std::size_t frozen = 0;
    for (std::size_t l = 0; l < L; ++l) frozen += concat.segments[l].stop_step;
    if (frozen >= n) return 0.0;
    double worst = 0.0;
    for (std::size_t k = frozen; k <= n; ++k) worst = std::max(worst, std::abs(M[k] - M[frozen]));
    return worst;
}

void write_concat_csv(std::ostream& out, const ConcatPath& path) {
    out << "t,S,mu,H,M,segment_index\n";
    const TimeGrid& grid = path.S.grid();
    for (std::size_t k = 0; k < grid.n_points(); ++k) {
        out << format_double(grid.time(k)) << ',' << format_double(path.S[k]) << ','
            << format_double(path.mu[k]) << ',' << path.H[k] << ',' << format_double(path.M[k])
            << ',' << path.segment_index[k] << '\n';
    }
}

void write_segments_csv(std::ostream& out, std::span<const SegmentRecord> segments) {
    out << "l,tau_prev,gamma,stop_reason,delta_hat\n";
    for (const auto& seg : segments) {
        out << seg.index << ',' << format_double(seg.start_time) << ',' << format_double(seg.gamma)
            << ',' << to_string(seg.stop_reason) << ',' << format_double(seg.delta_hat()) << '\n';
    }
}

}  // namespace driftcam
