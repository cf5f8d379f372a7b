#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace cylwalk {

/// Least-squares line y = intercept + slope * x with coefficient of determination.
struct LineFit {
  double slope = 0;
  double intercept = 0;
  double r2 = 0;
};

LineFit fit_line(std::span<const double> x, std::span<const double> y);

double mean(std::span<const double> v);
double sample_stddev(std::span<const double> v);
/// Linear-interpolation quantile (type 7). Rejects empty input.
double quantile(std::vector<double> v, double p);
inline double median(std::vector<double> v) { return quantile(std::move(v), 0.5); }

/// sup_x |F_a(x) - F_b(x)| between empirical CDFs; handles ties exactly.
double ecdf_sup_distance(std::span<const double> a, std::span<const double> b);

struct TestResult {
  double statistic = 0;
  double p_value = 1;
};

/// Q(lambda) = 2 sum_{k>=1} (-1)^{k-1} exp(-2 k^2 lambda^2).
double kolmogorov_survival(double lambda);

/// Two-sample Kolmogorov-Smirnov test with the asymptotic p-value
/// (conservative for discrete data).
TestResult ks_two_sample(std::span<const double> a, std::span<const double> b);

/// Pearson chi-square against equal cell probabilities.
TestResult chi_square_uniform(std::span<const std::uint64_t> counts);

/// Pearson chi-square test of homogeneity for two samples of integer
/// values; cells with small expected counts are pooled into the tails.
TestResult chi_square_two_sample(std::span<const std::int64_t> a, std::span<const std::int64_t> b,
                                 double min_expected = 5.0);

double chi_square_survival(double x, double dof);

struct Interval {
  double lo = 0;
  double hi = 0;
};

/// Wilson score interval for a binomial proportion at normal quantile z.
Interval wilson_interval(std::uint64_t successes, std::uint64_t trials, double z = 1.959963984540054);

/// Slope of log(median(sample_i)) against log(x_i).
double log_median_slope(std::span<const double> x, const std::vector<std::vector<double>>& samples);

/// Percentile bootstrap interval for log_median_slope, resampling each
/// sample independently with replacement.
Interval bootstrap_log_median_slope(std::span<const double> x, const std::vector<std::vector<double>>& samples,
                                    int resamples, std::uint64_t seed, double level = 0.95);

}  // namespace cylwalk
