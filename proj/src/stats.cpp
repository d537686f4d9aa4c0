#include "driftcam/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/distributions/fisher_f.hpp>
#include <boost/math/distributions/normal.hpp>

namespace driftcam::stats {

namespace bm = boost::math;

double normal_cdf(double x) { return bm::cdf(bm::normal_distribution<>(0.0, 1.0), x); }

double normal_two_sided(double z) {
    if (!std::isfinite(z)) return 0.0;
    return 2.0 * bm::cdf(bm::complement(bm::normal_distribution<>(0.0, 1.0), std::abs(z)));
}

double chi_square_upper(double x, double dof) {
    if (x <= 0.0) return 1.0;
    if (!std::isfinite(x)) return 0.0;
    return bm::cdf(bm::complement(bm::chi_squared_distribution<>(dof), x));
}

double chi_square_lower(double x, double dof) {
    if (x <= 0.0) return 0.0;
    if (!std::isfinite(x)) return 1.0;
    return bm::cdf(bm::chi_squared_distribution<>(dof), x);
}

double chi_square_two_sided(double x, double dof) {
    return std::min(1.0, 2.0 * std::min(chi_square_lower(x, dof), chi_square_upper(x, dof)));
}

double f_upper(double x, double d1, double d2) {
    if (x <= 0.0) return 1.0;
    if (!std::isfinite(x)) return 0.0;
    return bm::cdf(bm::complement(bm::fisher_f_distribution<>(d1, d2), x));
}

double kolmogorov_q(double lambda) {
    if (lambda <= 0.0) return 1.0;
    constexpr double pi = std::numbers::pi;
    if (lambda < 1.0) {
        // Jacobi-transformed series converges fast for small lambda.
        double s = 0.0;
        for (int k = 1; k <= 50; ++k) {
            const double j = 2.0 * k - 1.0;
            s += std::exp(-j * j * pi * pi / (8.0 * lambda * lambda));
        }
        return std::clamp(1.0 - std::sqrt(2.0 * pi) / lambda * s, 0.0, 1.0);
    }
    double s = 0.0;
    for (int k = 1; k <= 100; ++k) {
        const double term = std::exp(-2.0 * k * k * lambda * lambda);
        s += (k % 2 == 1 ? term : -term);
        if (term < 1e-300) break;
    }
    return std::clamp(2.0 * s, 0.0, 1.0);
}

double ks_p_value(double d, double effective_n) {
    const double r = std::sqrt(effective_n);
    return kolmogorov_q((r + 0.12 + 0.11 / r) * d);
}

KsResult ks_normal(std::vector<double> sample) {
    if (sample.empty()) throw std::invalid_argument("ks_normal: empty sample");
    std::sort(sample.begin(), sample.end());
    const double n = static_cast<double>(sample.size());
    double d = 0.0;
    for (std::size_t i = 0; i < sample.size(); ++i) {
        const double f = normal_cdf(sample[i]);
        d = std::max({d, static_cast<double>(i + 1) / n - f, f - static_cast<double>(i) / n});
    }
    return {d, ks_p_value(d, n)};
}

KsResult ks_two_sample(std::vector<double> a, std::vector<double> b) {
    if (a.empty() || b.empty()) throw std::invalid_argument("ks_two_sample: empty sample");
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    const double na = static_cast<double>(a.size());
    const double nb = static_cast<double>(b.size());
    std::size_t i = 0, j = 0;
    double d = 0.0;
    while (i < a.size() && j < b.size()) {
        const double x = std::min(a[i], b[j]);
        while (i < a.size() && a[i] == x) ++i;
        while (j < b.size() && b[j] == x) ++j;
        d = std::max(d, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
    }
    return {d, ks_p_value(d, na * nb / (na + nb))};
}

double mean(std::span<const double> x) {
    if (x.empty()) throw std::invalid_argument("mean: empty sample");
    double s = 0.0;
    for (double v : x) s += v;
    return s / static_cast<double>(x.size());
}

double variance(std::span<const double> x) {
    if (x.size() < 2) throw std::invalid_argument("variance: need two values");
    const double m = mean(x);
    double s = 0.0;
    for (double v : x) s += (v - m) * (v - m);
    return s / static_cast<double>(x.size() - 1);
}

double correlation(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size() || x.size() < 2) {
        throw std::invalid_argument("correlation: need two equal-length samples");
    }
    const double mx = mean(x), my = mean(y);
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxy += (x[i] - mx) * (y[i] - my);
        sxx += (x[i] - mx) * (x[i] - mx);
        syy += (y[i] - my) * (y[i] - my);
    }
    if (sxx == 0.0 || syy == 0.0) return 0.0;
    return sxy / std::sqrt(sxx * syy);
}

}  // namespace driftcam::stats
