#include "cylwalk/stats.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <stdexcept>

#include <boost/math/distributions/chi_squared.hpp>

#include "cylwalk/rng.hpp"

namespace cylwalk {

LineFit fit_line(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) throw std::invalid_argument("fit_line needs >= 2 paired points");
  const double mx = mean(x);
  const double my = mean(y);
  double sxx = 0, sxy = 0, syy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx == 0) throw std::invalid_argument("fit_line needs distinct x values");
  LineFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  fit.r2 = syy == 0 ? 1.0 : (sxy * sxy) / (sxx * syy);
  return fit;
}

double mean(std::span<const double> v) {
  if (v.empty()) throw std::invalid_argument("mean of empty sample");
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double sample_stddev(std::span<const double> v) {
  if (v.size() < 2) return 0.0;
  const double m = mean(v);
  double ss = 0;
  for (double x : v) ss += (x - m) * (x - m);
  return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

double quantile(std::vector<double> v, double p) {
  if (v.empty()) throw std::invalid_argument("quantile of empty sample");
  if (p < 0 || p > 1) throw std::invalid_argument("quantile level must be in [0, 1]");
  std::sort(v.begin(), v.end());
  const double h = p * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (h - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

double ecdf_sup_distance(std::span<const double> a, std::span<const double> b) {
  if (a.empty() || b.empty()) throw std::invalid_argument("ecdf distance of empty sample");
  std::vector<double> sa(a.begin(), a.end());
  std::vector<double> sb(b.begin(), b.end());
  std::sort(sa.begin(), sa.end());
  std::sort(sb.begin(), sb.end());
  std::size_t i = 0, j = 0;
  double best = 0;
  const auto na = static_cast<double>(sa.size());
  const auto nb = static_cast<double>(sb.size());
  while (i < sa.size() || j < sb.size()) {
    double x;
    if (j >= sb.size() || (i < sa.size() && sa[i] <= sb[j])) {
      x = sa[i];
    } else {
      x = sb[j];
    }
    while (i < sa.size() && sa[i] == x) ++i;
    while (j < sb.size() && sb[j] == x) ++j;
    best = std::max(best, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
  }
  return best;
}

double kolmogorov_survival(double lambda) {
  if (lambda <= 0) return 1.0;
  if (lambda < 0.2) return 1.0;
  double sum = 0;
  for (int k = 1; k <= 100; ++k) {
    const double term = std::exp(-2.0 * k * k * lambda * lambda);
    sum += (k % 2 == 1 ? term : -term);
    if (term < 1e-17) break;
  }
  return std::clamp(2.0 * sum, 0.0, 1.0);
}

TestResult ks_two_sample(std::span<const double> a, std::span<const double> b) {
  const double D = ecdf_sup_distance(a, b);
  const double ne = static_cast<double>(a.size()) * static_cast<double>(b.size()) /
                    static_cast<double>(a.size() + b.size());
  const double sq = std::sqrt(ne);
  // Stephens' small-sample correction of the asymptotic distribution.
  const double lambda = (sq + 0.12 + 0.11 / sq) * D;
  return {D, kolmogorov_survival(lambda)};
}

double chi_square_survival(double x, double dof) {
  if (dof <= 0) return 1.0;
  if (x <= 0) return 1.0;
  boost::math::chi_squared dist(dof);
  return boost::math::cdf(boost::math::complement(dist, x));
}

TestResult chi_square_uniform(std::span<const std::uint64_t> counts) {
  if (counts.size() < 2) throw std::invalid_argument("chi-square needs >= 2 cells");
  const double total = static_cast<double>(std::accumulate(counts.begin(), counts.end(), std::uint64_t{0}));
  const double expected = total / static_cast<double>(counts.size());
  double stat = 0;
  for (auto c : counts) stat += (static_cast<double>(c) - expected) * (static_cast<double>(c) - expected) / expected;
  return {stat, chi_square_survival(stat, static_cast<double>(counts.size() - 1))};
}

TestResult chi_square_two_sample(std::span<const std::int64_t> a, std::span<const std::int64_t> b,
                                 double min_expected) {
  if (a.empty() || b.empty()) throw std::invalid_argument("chi-square of empty sample");
  std::map<std::int64_t, std::pair<double, double>> table;
  for (auto v : a) table[v].first += 1;
  for (auto v : b) table[v].second += 1;
  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());
  const double n = na + nb;
  // Pool adjacent values from the left until every pooled cell has enough mass.
  std::vector<std::pair<double, double>> cells;
  std::pair<double, double> acc{0, 0};
  for (const auto& [value, c] : table) {
    acc.first += c.first;
    acc.second += c.second;
    const double col = acc.first + acc.second;
    if (std::min(col * na / n, col * nb / n) >= min_expected) {
      cells.push_back(acc);
      acc = {0, 0};
    }
  }
  if (acc.first + acc.second > 0) {
    if (cells.empty()) {
      cells.push_back(acc);
    } else {
      cells.back().first += acc.first;
      cells.back().second += acc.second;
    }
  }
  if (cells.size() < 2) return {0.0, 1.0};
  double stat = 0;
  for (const auto& [ca, cb] : cells) {
    const double col = ca + cb;
    const double ea = col * na / n;
    const double eb = col * nb / n;
    stat += (ca - ea) * (ca - ea) / ea + (cb - eb) * (cb - eb) / eb;
  }
  return {stat, chi_square_survival(stat, static_cast<double>(cells.size() - 1))};
}

Interval wilson_interval(std::uint64_t successes, std::uint64_t trials, double z) {
  if (trials == 0) return {0.0, 1.0};
  const double n = static_cast<double>(trials);
  const double p = static_cast<double>(successes) / n;
  const double z2 = z * z;
  const double centre = (p + z2 / (2 * n)) / (1 + z2 / n);
  const double half = z * std::sqrt(p * (1 - p) / n + z2 / (4 * n * n)) / (1 + z2 / n);
  return {std::max(0.0, centre - half), std::min(1.0, centre + half)};
}

double log_median_slope(std::span<const double> x, const std::vector<std::vector<double>>& samples) {
  if (x.size() != samples.size()) throw std::invalid_argument("one sample per x value expected");
  std::vector<double> lx, ly;
  for (std::size_t i = 0; i < x.size(); ++i) {
    lx.push_back(std::log(x[i]));
    ly.push_back(std::log(median(samples[i])));
  }
  return fit_line(lx, ly).slope;
}

Interval bootstrap_log_median_slope(std::span<const double> x, const std::vector<std::vector<double>>& samples,
                                    int resamples, std::uint64_t seed, double level) {
  if (resamples < 1) throw std::invalid_argument("bootstrap needs >= 1 resample");
  Xoshiro256 rng = replica_stream(seed, 0xb0075ULL);
  std::vector<double> slopes;
  slopes.reserve(static_cast<std::size_t>(resamples));
  std::vector<std::vector<double>> draw(samples.size());
  for (int r = 0; r < resamples; ++r) {
    for (std::size_t i = 0; i < samples.size(); ++i) {
      const auto& s = samples[i];
      draw[i].resize(s.size());
      for (auto& v : draw[i]) v = s[static_cast<std::size_t>(rng.below(s.size()))];
    }
    slopes.push_back(log_median_slope(x, draw));
  }
  const double tail = (1 - level) / 2;
  return {quantile(slopes, tail), quantile(slopes, 1 - tail)};
}

}  // namespace cylwalk
