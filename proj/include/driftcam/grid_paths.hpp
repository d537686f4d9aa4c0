#pragma once

// Uniform time grids, sampled real-valued paths, reproducible Brownian
// generation and the left-endpoint integral sums every other module uses.

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace driftcam {

/// Uniform grid t_k = k * dt, k = 0..n_steps.
class TimeGrid {
public:
    TimeGrid(double dt, std::size_t n_steps);

    double dt() const noexcept { return dt_; }
    std::size_t n_steps() const noexcept { return n_steps_; }
    std::size_t n_points() const noexcept { return n_steps_ + 1; }
    double time(std::size_t k) const noexcept { return static_cast<double>(k) * dt_; }
    double horizon() const noexcept { return time(n_steps_); }
    std::vector<double> times() const;

    friend bool operator==(const TimeGrid&, const TimeGrid&) = default;

private:
    double dt_;
    std::size_t n_steps_;
};

/// Validating factory; signed step count so that non-positive input is reported
/// instead of wrapping.
TimeGrid make_grid(double dt, std::int64_t n_steps);

/// A real path sampled on every point of a grid.
class PathSample {
public:
    PathSample(TimeGrid grid, std::vector<double> values);

    /// Constant path on `grid`.
    static PathSample constant(TimeGrid grid, double value);

    const TimeGrid& grid() const noexcept { return grid_; }
    std::span<const double> values() const noexcept { return values_; }
    std::size_t size() const noexcept { return values_.size(); }
    double operator[](std::size_t k) const noexcept { return values_[k]; }
    double front() const noexcept { return values_.front(); }
    double back() const noexcept { return values_.back(); }

    /// Every `factor`-th point, on the grid with step factor*dt.
    PathSample coarsen(std::size_t factor) const;
    /// Points 0..n_steps of this path.
    PathSample prefix(std::size_t n_steps) const;

    friend bool operator==(const PathSample&, const PathSample&) = default;

private:
    TimeGrid grid_;
    std::vector<double> values_;
};

/// One independent random stream, derived from a master seed and a stream id
/// by a counter-based split (splitmix64 over (seed, stream_id)). Identical
/// (seed, stream_id) pairs reproduce identical draws.
class SeededRng {
public:
    SeededRng(std::uint64_t seed, std::uint64_t stream_id);

    std::uint64_t seed() const noexcept { return seed_; }
    std::uint64_t stream_id() const noexcept { return stream_id_; }

    double normal();
    double uniform();
    /// +1 or -1 with probability 1/2 each.
    int sign();
    /// Uniform integer in [0, bound), bound > 0, without modulo bias.
    std::uint64_t below(std::uint64_t bound);
    std::uint64_t bits();

private:
    std::uint64_t seed_;
    std::uint64_t stream_id_;
    std::mt19937_64 engine_;
    std::normal_distribution<double> gauss_{0.0, 1.0};
};

std::uint64_t splitmix64(std::uint64_t x) noexcept;

/// Standard Brownian motion on `grid`: values[0] = 0, N(0, dt) increments.
PathSample sample_brownian(const TimeGrid& grid, SeededRng& rng);

/// n_steps i.i.d. N(0, dt) increments.
std::vector<double> sample_increments(double dt, std::size_t n_steps, SeededRng& rng);

/// Partial sums of increments, starting from 0.
PathSample path_from_increments(const TimeGrid& grid, std::span<const double> increments);

/// out[k] = sum_{j<k} integrand[j] * (integrator[j+1] - integrator[j]).
PathSample ito_sum_left(const PathSample& integrand, const PathSample& integrator);

/// out[k] = sum_{j<k} integrand[j] * dt.
PathSample riemann_left(const PathSample& integrand);

/// Sum of squared increments over the whole path.
double quadratic_variation(const PathSample& path);

PathSample operator+(const PathSample& a, const PathSample& b);
PathSample operator-(const PathSample& a, const PathSample& b);
PathSample operator*(double c, const PathSample& a);

/// Shortest decimal text that parses back to exactly `x`.
std::string format_double(double x);

/// CSV with header `t,value`, one row per grid point.
void write_path_csv(std::ostream& out, const PathSample& path);
/// Inverse of write_path_csv; the grid is recovered from the t column.
PathSample read_path_csv(std::istream& in);

}  // namespace driftcam
