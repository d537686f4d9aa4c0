#pragma once

// Small distribution helpers shared by the test battery and the acceptance
// checks. Distribution functions come from Boost.Math; only the Kolmogorov
// limit law is evaluated here.

#include <cstddef>
#include <span>
#include <vector>

namespace driftcam::stats {

double normal_cdf(double x);
/// P[|Z| >= |z|] for standard normal Z.
double normal_two_sided(double z);
/// Upper tail P[X >= x] of chi-square with `dof` degrees of freedom.
double chi_square_upper(double x, double dof);
/// Lower tail P[X <= x].
double chi_square_lower(double x, double dof);
/// min(1, 2 min(lower, upper)).
double chi_square_two_sided(double x, double dof);
/// Upper tail of the F distribution.
double f_upper(double x, double d1, double d2);

/// Kolmogorov limit law Q(lambda) = P[sup |bridge| > lambda].
double kolmogorov_q(double lambda);
/// Stephens' finite-sample form Q((sqrt(n) + 0.12 + 0.11/sqrt(n)) D).
double ks_p_value(double d, double effective_n);

struct KsResult {
    double statistic;
    double p_value;
};

/// One-sample KS of `sample` against the standard normal.
KsResult ks_normal(std::vector<double> sample);
/// Two-sample KS, ties handled by stepping over equal values jointly.
KsResult ks_two_sample(std::vector<double> a, std::vector<double> b);

double mean(std::span<const double> x);
/// Unbiased sample variance.
double variance(std::span<const double> x);
/// Pearson correlation; 0 when either side has zero spread.
double correlation(std::span<const double> x, std::span<const double> y);

}  // namespace driftcam::stats
