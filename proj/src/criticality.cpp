#include "cylwalk/criticality.hpp"

#include <array>
#include <cmath>
#include <stdexcept>

namespace cylwalk {

double chi(double lambda, int m, int d, double q_value) {
  if (!(lambda >= 0)) throw std::invalid_argument("chi needs lambda >= 0");
  if (m < 1 || m > d - 2) throw std::invalid_argument("chi needs 1 <= m <= d - 2");
  if (!(q_value >= 0 && q_value <= 1)) throw std::invalid_argument("chi needs q in [0, 1]");
  const double w = static_cast<double>(m) / (d + 1);
  return std::exp(lambda) * (w + (1 - w) * q_value);
}

ThresholdReport compose_report(int d, const QEstimate& q) {
  if (d < 4) throw std::invalid_argument("rho needs d >= 4");
  ThresholdReport r;
  r.d = d;
  r.q_used = q;
  const double w = 2.0 / (d + 1);
  r.rho = 7 * (w + (1 - w) * q.value);
  r.rho_err = 7 * (1 - w) * q.abs_error;
  r.holds = r.rho < 1;
  if (r.holds) {
    r.lambda0 = std::log(7.0) - 0.5 * std::log(r.rho);
    r.c0 = 8.0 * d / std::log(1 / r.rho);
  }
  return r;
}

ThresholdReport rho(int d, double tol) {
  if (d < 4) throw std::invalid_argument("rho needs d >= 4");
  return compose_report(d, q_quadrature(d - 1, tol));
}

ThresholdScan threshold_scan(int d_lo, int d_hi, double tol) {
  if (d_lo < 4 || d_hi > 64 || d_lo > d_hi) throw std::invalid_argument("scan range must lie within [4, 64]");
  ThresholdScan scan;
  for (int d = d_lo; d <= d_hi; ++d) {
    scan.reports.push_back(rho(d, tol));
    if (scan.reports.back().holds && !scan.minimal_holding) scan.minimal_holding = d;
  }
  return scan;
}

namespace {

constexpr std::array<std::array<int, 2>, 8> kStar{{{1, 0}, {1, 1}, {0, 1}, {-1, 1}, {-1, 0}, {-1, -1}, {0, -1}, {1, -1}}};

struct SawCounter {
  int n;
  int width;
  std::vector<char> used;
  std::uint64_t count = 0;

  void dfs(int x, int y, int depth) {
    if (depth == n) {
      ++count;
      return;
    }
    for (const auto& s : kStar) {
      const int nx = x + s[0], ny = y + s[1];
      const std::size_t id = static_cast<std::size_t>((ny + n) * width + (nx + n));
      if (used[id]) continue;
      used[id] = 1;
      dfs(nx, ny, depth + 1);
      used[id] = 0;
    }
  }
};

}  // namespace

std::uint64_t star_saw_count(int n) {
  if (n < 1 || n > 10) throw std::invalid_argument("star_saw_count supports 1 <= n <= 10");
  SawCounter c{n, 2 * n + 1, std::vector<char>(static_cast<std::size_t>((2 * n + 1) * (2 * n + 1)), 0)};
  c.used[static_cast<std::size_t>(n * c.width + n)] = 1;
  c.dfs(0, 0, 0);
  return c.count;
}

U0Record u0_placeholder(int d, double configured_u) {
  if (!(configured_u > 0)) throw std::invalid_argument("u must be positive");
  const ThresholdReport r = rho(d);
  if (!r.holds) throw std::invalid_argument("u0 is only meaningful when rho(d) < 1");
  return {d, configured_u, r.rho, *r.lambda0, *r.c0, "configured"};
}

}  // namespace cylwalk
