#include "driftcam/grid_paths.hpp"

#include <array>
#include <charconv>
#include <cmath>
#include <istream>
#include <limits>
#include <ostream>
#include <stdexcept>
#include <string>
#include <system_error>

namespace driftcam {

namespace {

void require_same_grid(const PathSample& a, const PathSample& b, const char* what) {
    if (!(a.grid() == b.grid())) {
        throw std::invalid_argument(std::string(what) + ": paths live on different grids");
    }
}

}  // namespace

TimeGrid::TimeGrid(double dt, std::size_t n_steps) : dt_(dt), n_steps_(n_steps) {
    if (!(dt > 0.0) || !std::isfinite(dt)) {
        throw std::invalid_argument("TimeGrid: dt must be positive and finite");
    }
    if (n_steps == 0) {
        throw std::invalid_argument("TimeGrid: n_steps must be at least 1");
    }
}

std::vector<double> TimeGrid::times() const {
    std::vector<double> t(n_points());
    for (std::size_t k = 0; k < t.size(); ++k) t[k] = time(k);
    return t;
}

TimeGrid make_grid(double dt, std::int64_t n_steps) {
    if (n_steps <= 0) {
        throw std::invalid_argument("make_grid: n_steps must be positive");
    }
    return TimeGrid(dt, static_cast<std::size_t>(n_steps));
}

PathSample::PathSample(TimeGrid grid, std::vector<double> values)
    : grid_(grid), values_(std::move(values)) {
    if (values_.size() != grid_.n_points()) {
        throw std::invalid_argument("PathSample: expected " + std::to_string(grid_.n_points()) +
                                    " values, got " + std::to_string(values_.size()));
    }
}

PathSample PathSample::constant(TimeGrid grid, double value) {
    return PathSample(grid, std::vector<double>(grid.n_points(), value));
}

PathSample PathSample::coarsen(std::size_t factor) const {
    if (factor == 0 || grid_.n_steps() % factor != 0) {
        throw std::invalid_argument("PathSample::coarsen: factor must divide n_steps");
    }
    TimeGrid coarse(grid_.dt() * static_cast<double>(factor), grid_.n_steps() / factor);
    std::vector<double> v(coarse.n_points());
    for (std::size_t k = 0; k < v.size(); ++k) v[k] = values_[k * factor];
    return PathSample(coarse, std::move(v));
}

PathSample PathSample::prefix(std::size_t n_steps) const {
    if (n_steps == 0 || n_steps > grid_.n_steps()) {
        throw std::invalid_argument("PathSample::prefix: step count out of range");
    }
    return PathSample(TimeGrid(grid_.dt(), n_steps),
                      std::vector<double>(values_.begin(), values_.begin() + n_steps + 1));
}

std::uint64_t splitmix64(std::uint64_t x) noexcept {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

SeededRng::SeededRng(std::uint64_t seed, std::uint64_t stream_id)
    : seed_(seed), stream_id_(stream_id) {
    // Stream key: the master seed mixed with the stream counter, then expanded
    // into a full seed sequence for the engine.
    std::uint64_t key = splitmix64(seed) ^ splitmix64(stream_id * 0xd1b54a32d192ed03ULL + 1);
    std::array<std::uint32_t, 8> words{};
    for (std::size_t i = 0; i < words.size(); i += 2) {
        key = splitmix64(key);
        words[i] = static_cast<std::uint32_t>(key);
        words[i + 1] = static_cast<std::uint32_t>(key >> 32);
    }
    std::seed_seq seq(words.begin(), words.end());
    engine_.seed(seq);
}

double SeededRng::normal() { return gauss_(engine_); }

double SeededRng::uniform() {
    // 53 random mantissa bits, in [0, 1).
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

int SeededRng::sign() { return (engine_() >> 63) != 0 ? 1 : -1; }

std::uint64_t SeededRng::below(std::uint64_t bound) {
    if (bound == 0) throw std::invalid_argument("SeededRng::below: bound must be positive");
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                                std::numeric_limits<std::uint64_t>::max() % bound;
    std::uint64_t x;
    do {
        x = engine_();
    } while (x >= limit);
    return x % bound;
}

std::uint64_t SeededRng::bits() { return engine_(); }

std::vector<double> sample_increments(double dt, std::size_t n_steps, SeededRng& rng) {
    const double sd = std::sqrt(dt);
    std::vector<double> inc(n_steps);
    for (auto& x : inc) x = sd * rng.normal();
    return inc;
}

PathSample path_from_increments(const TimeGrid& grid, std::span<const double> increments) {
    if (increments.size() != grid.n_steps()) {
        throw std::invalid_argument("path_from_increments: increment count does not match grid");
    }
    std::vector<double> v(grid.n_points());
    v[0] = 0.0;
    for (std::size_t k = 0; k < increments.size(); ++k) v[k + 1] = v[k] + increments[k];
    return PathSample(grid, std::move(v));
}

PathSample sample_brownian(const TimeGrid& grid, SeededRng& rng) {
    const auto inc = sample_increments(grid.dt(), grid.n_steps(), rng);
    return path_from_increments(grid, inc);
}

PathSample ito_sum_left(const PathSample& integrand, const PathSample& integrator) {
    require_same_grid(integrand, integrator, "ito_sum_left");
    std::vector<double> out(integrand.size());
    out[0] = 0.0;
    for (std::size_t j = 0; j + 1 < out.size(); ++j) {
        out[j + 1] = out[j] + integrand[j] * (integrator[j + 1] - integrator[j]);
    }
    return PathSample(integrand.grid(), std::move(out));
}

PathSample riemann_left(const PathSample& integrand) {
    const double dt = integrand.grid().dt();
    std::vector<double> out(integrand.size());
    out[0] = 0.0;
    for (std::size_t j = 0; j + 1 < out.size(); ++j) out[j + 1] = out[j] + integrand[j] * dt;
    return PathSample(integrand.grid(), std::move(out));
}

double quadratic_variation(const PathSample& path) {
    double qv = 0.0;
    for (std::size_t k = 0; k + 1 < path.size(); ++k) {
        const double d = path[k + 1] - path[k];
        qv += d * d;
    }
    return qv;
}

PathSample operator+(const PathSample& a, const PathSample& b) {
    require_same_grid(a, b, "operator+");
    std::vector<double> v(a.size());
    for (std::size_t k = 0; k < v.size(); ++k) v[k] = a[k] + b[k];
    return PathSample(a.grid(), std::move(v));
}

PathSample operator-(const PathSample& a, const PathSample& b) {
    require_same_grid(a, b, "operator-");
    std::vector<double> v(a.size());
    for (std::size_t k = 0; k < v.size(); ++k) v[k] = a[k] - b[k];
    return PathSample(a.grid(), std::move(v));
}

PathSample operator*(double c, const PathSample& a) {
    std::vector<double> v(a.size());
    for (std::size_t k = 0; k < v.size(); ++k) v[k] = c * a[k];
    return PathSample(a.grid(), std::move(v));
}

std::string format_double(double x) {
    std::array<char, 64> buf{};
    auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), x);
    if (ec != std::errc{}) throw std::runtime_error("format_double: conversion failed");
    return std::string(buf.data(), end);
}

void write_path_csv(std::ostream& out, const PathSample& path) {
    out << "t,value\n";
    for (std::size_t k = 0; k < path.size(); ++k) {
        out << format_double(path.grid().time(k)) << ',' << format_double(path[k]) << '\n';
    }
}

namespace {

double parse_double(std::string_view s) {
    double x = 0.0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), x);
    if (ec != std::errc{} || ptr != s.data() + s.size()) {
        throw std::invalid_argument("read_path_csv: malformed number '" + std::string(s) + "'");
    }
    return x;
}

}  // namespace

PathSample read_path_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line) || line != "t,value") {
        throw std::invalid_argument("read_path_csv: expected header 't,value'");
    }
    std::vector<double> t, v;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto comma = line.find(',');
        if (comma == std::string::npos) throw std::invalid_argument("read_path_csv: missing column");
        const std::string_view sv(line);
        t.push_back(parse_double(sv.substr(0, comma)));
        v.push_back(parse_double(sv.substr(comma + 1)));
    }
    if (t.size() < 2) throw std::invalid_argument("read_path_csv: need at least two rows");
    TimeGrid grid(t[1] - t[0], t.size() - 1);
    for (std::size_t k = 0; k < t.size(); ++k) {
        if (t[k] != grid.time(k)) {
            throw std::invalid_argument("read_path_csv: time column is not a uniform grid");
        }
    }
    return PathSample(grid, std::move(v));
}

}  // namespace driftcam
