#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "cylwalk/stats.hpp"

namespace cylwalk {

enum class QMethod { Quadrature, MonteCarlo };

std::string to_string(QMethod m);

struct QEstimate {
  int nu = 0;
  double value = 0;
  /// Quadrature: bound on |value - q|. Monte Carlo: half-width of the 95%
  /// Wilson interval.
  double abs_error = 0;
  QMethod method = QMethod::Quadrature;

  // Monte Carlo only.
  std::uint64_t replicas = 0;
  std::uint64_t returned = 0;
  std::optional<Interval> ci;
  /// Upper estimate of the expected number of returns after the horizon,
  /// which bounds the downward bias of the truncated estimate.
  double truncation_bias = 0;
  double std_error = 0;

  // Quadrature only.
  double green = 0;
  double cutoff = 0;
};

/// e^{-x} I_0(x) for x >= 0, to about 1e-15 relative error.
double bessel_i0_scaled(double x);

/// q(nu) = 1 - 1/G(nu) with G(nu) = nu * int_0^inf (e^{-x} I_0(x))^nu dx.
/// nu = 1, 2 return exactly 1. Past the cutoff X the integrand is bracketed
/// analytically and the bracket midpoint is added; X is doubled until the
/// bracket half-width is below tol / 2. `cutoff` forces a fixed X instead.
QEstimate q_quadrature(int nu, double tol = 1e-10, std::optional<double> cutoff = std::nullopt);

/// Fraction of replicas of simple random walk on Z^nu returning to the
/// origin within `horizon` steps.
QEstimate q_monte_carlo(int nu, std::uint64_t horizon, std::uint64_t replicas, std::uint64_t seed);

/// One starting configuration of the q_N search: a plane F through the
/// origin column and a site z adjacent to F.
struct QNCandidate {
  std::string orientation;  // "vertical" if F contains the vertical axis, else "horizontal"
  std::string start;        // "transverse" or "above"
  std::int64_t height = 0;  // height of z
  std::uint64_t hits = 0;
  std::uint64_t replicas = 0;
  double value = 0;
  double std_error = 0;
};

struct QNOptions {
  /// Heights at which z (and, for horizontal planes, F) is placed.
  std::vector<std::int64_t> heights{0};
};

struct QNEstimate {
  int d = 0;
  int m = 0;
  int N = 0;
  std::uint64_t replicas = 0;
  double value = 0;
  double std_error = 0;
  std::vector<QNCandidate> candidates;
};

/// Monte Carlo estimate of sup_z P_z[H_F < T_{B~_0}] over the candidate
/// starting configurations. Requires d >= 3 and 1 <= m <= d - 2.
QNEstimate q_N_estimate(int d, int m, int N, std::uint64_t replicas, std::uint64_t seed,
                        const QNOptions& options = {});

}  // namespace cylwalk
