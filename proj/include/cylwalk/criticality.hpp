#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "cylwalk/return_probability.hpp"

namespace cylwalk {

/// chi(lambda) = e^lambda (m/(d+1) + (1 - m/(d+1)) q).
double chi(double lambda, int m, int d, double q_value);

struct ThresholdReport {
  int d = 0;
  QEstimate q_used;  // q(d - 1)
  double rho = 0;
  double rho_err = 0;
  bool holds = false;
  std::optional<double> lambda0;
  std::optional<double> c0;
};

/// rho(d) = 7 (2/(d+1) + (1 - 2/(d+1)) q(d-1)); lambda0 = log 7 - log(rho)/2
/// and c0 = 8d / log(1/rho) when rho < 1. Natural logarithms throughout.
ThresholdReport rho(int d, double tol = 1e-10);

/// Composes a report from a given q(d - 1).
ThresholdReport compose_report(int d, const QEstimate& q);

struct ThresholdScan {
  std::vector<ThresholdReport> reports;
  std::optional<int> minimal_holding;
};

ThresholdScan threshold_scan(int d_lo, int d_hi, double tol = 1e-10);

/// Number of n-step self-avoiding paths from the origin of Z^2 with steps
/// in the eight l-infinity unit directions. 1 <= n <= 10.
std::uint64_t star_saw_count(int n);

struct U0Record {
  int d = 0;
  double u = 0;
  double rho = 0;
  double lambda0 = 0;
  double c0 = 0;
  const char* source = "configured";
};

/// Echoes the configured occupation level together with the constants it
/// is meant to accompany. Rejects d where rho(d) >= 1.
U0Record u0_placeholder(int d, double configured_u);

}  // namespace cylwalk
