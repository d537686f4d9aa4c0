#pragma once

// Restarted hidden-drift construction. Each segment l runs the closed-form
// drift on its own shifted Brownian motion W^l, Levy-transforms the drifted
// path and stops as soon as the transform leaves (-delta, delta) or delta time
// has elapsed. Gluing the segments end to end gives a drift that never strays
// more than delta (3 mu^3 + 2 mu^2) from mu and an integral M = (H . S) that
// is a Brownian motion in its own filtration.

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string_view>
#include <vector>

#include "driftcam/grid_paths.hpp"

namespace driftcam {

struct ConcatConfig {
    double mu;
    double delta;
    TimeGrid grid;
    std::uint64_t seed;

    void validate() const;
};

enum class StopReason { Threshold, TimeCap };

std::string_view to_string(StopReason reason) noexcept;

struct SegmentRecord {
    std::size_t index;       // l, starting at 1
    std::size_t start_step;  // tau_{l-1} in grid steps
    double start_time;       // tau_{l-1}
    std::size_t stop_step;   // gamma_l in grid steps
    double gamma;
    StopReason stop_reason;
    PathSample W;
    PathSample mu_tilde;
    PathSample S_tilde;
    PathSample H;
    PathSample N;  // stopped at gamma; all arrays end at the stop point

    double sup_abs_N() const;
    /// max(sup |N|, gamma): the delta that the realized segment actually obeys.
    double delta_hat() const;
};

/// Largest step count whose time does not exceed delta.
std::size_t cap_steps(double delta, double dt);

/// One segment driven by `increments` (at least cap_steps(delta, dt) of them;
/// only the first gamma/dt are consumed).
SegmentRecord run_segment(std::size_t index, std::span<const double> increments, double mu,
                          double delta, double dt, std::size_t start_step = 0);

/// Draws consecutive segments from one Brownian stream, carrying unused
/// increments over to the next segment.
class SegmentSampler {
public:
    SegmentSampler(double mu, double delta, double dt, SeededRng& rng);

    SegmentRecord next();
    /// Increments consumed so far, in order.
    std::size_t steps_consumed() const noexcept { return consumed_; }

private:
    double mu_;
    double delta_;
    double dt_;
    std::size_t cap_;
    SeededRng& rng_;
    std::vector<double> pending_;
    std::size_t index_ = 0;
    std::size_t consumed_ = 0;
};

struct ConcatPath {
    PathSample B;
    PathSample S;
    PathSample mu;
    PathSample H;
    PathSample M;
    std::vector<double> taus;                 // tau_0 = 0, tau_1, ...
    std::vector<std::size_t> segment_index;  // owner segment of the step starting at each point
};

struct Concatenation {
    ConcatPath path;
    std::vector<SegmentRecord> segments;
};

/// Segments are generated until they cover the horizon; the last one is cut
/// at T in the glued path but kept whole in `segments`.
Concatenation build_concatenation(const ConcatConfig& config, SeededRng& rng);

struct DriftBoundReport {
    double max_deviation;     // max_k |mu_k - mu|
    double nominal_bound;       // delta (3 mu^3 + 2 mu^2)
    double delta_hat_max;     // max over segments of delta_hat
    double realized_bound;    // delta_hat_max (3 mu^3 + 2 mu^2)
    std::size_t segment_violations;  // points exceeding their own segment's bound
    bool pass;
};

DriftBoundReport check_drift_bound(const Concatenation& concat, const ConcatConfig& config);

struct SegmentBoundReport {
    double delta_hat;
    double max_abs_S;        // over t <= gamma
    double bound_S;          // 2 delta_hat
    std::size_t violations_S;
    /// Same count against 2 delta_hat + |S| just after the latest sign change,
    /// the slack a grid path picks up when it jumps over zero.
    std::size_t violations_S_grid;
    double max_filter_gap;   // max |g - 1/2| over t <= gamma
    double bound_filter;     // delta_hat (2 mu + 3 mu^2) / 2
    std::size_t violations_filter;
    bool pass;
};

SegmentBoundReport check_segment_bounds(const SegmentRecord& segment, double mu);

/// max_t |M_t - M^(L)_t| where M^(L) keeps the first L segments and freezes
/// afterwards.
double tail_truncation_stability(const Concatenation& concat, std::size_t L);

/// Columns t,S,mu,H,M,segment_index.
void write_concat_csv(std::ostream& out, const ConcatPath& path);
/// Columns l,tau_prev,gamma,stop_reason,delta_hat.
void write_segments_csv(std::ostream& out, std::span<const SegmentRecord> segments);

}  // namespace driftcam
