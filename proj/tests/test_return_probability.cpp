#include <doctest.h>

#include <boost/math/special_functions/bessel.hpp>
#include <cmath>
#include <numbers>

#include "cylwalk/return_probability.hpp"

using namespace cylwalk;

namespace {

// Watson's closed form for the simple cubic lattice Green function at the origin.
double watson_green() {
  return std::sqrt(6.0) / (32 * std::pow(std::numbers::pi, 3)) * std::tgamma(1.0 / 24) * std::tgamma(5.0 / 24) *
         std::tgamma(7.0 / 24) * std::tgamma(11.0 / 24);
}

// Composite Simpson on x = e^s with Boost's I0, plus the leading asymptotic
// tail nu * int_X^inf (2 pi x)^{-nu/2} (1 + 1/(8x))^nu dx, integrated numerically.
double simpson_q(int nu) {
  auto f = [nu](double x) {
    return std::pow(std::exp(-x) * boost::math::cyl_bessel_i(0, x), nu);
  };
  const double X = 600;
  const double a = -30, b = std::log(X);
  const int n = 200000;
  const double h = (b - a) / n;
  double s = 0;
  for (int i = 0; i <= n; ++i) {
    const double x = std::exp(a + i * h);
    const double w = (i == 0 || i == n) ? 1 : (i % 2 ? 4 : 2);
    s += w * f(x) * x;
  }
  double G = nu * s * h / 3;
  // tail via the asymptotic expansion of e^{-x} I0(x)
  auto g = [nu](double x) {
    const double t = 1 / (8 * x);
    const double series = 1 + t + 9 * t * t / 2 + 75 * t * t * t / 2;
    return std::pow(series / std::sqrt(2 * std::numbers::pi * x), nu);
  };
  const double A = std::log(X), B = std::log(X) + 60;
  double t = 0;
  const double k = (B - A) / n;
  for (int i = 0; i <= n; ++i) {
    const double x = std::exp(A + i * k);
    const double w = (i == 0 || i == n) ? 1 : (i % 2 ? 4 : 2);
    t += w * g(x) * x;
  }
  G += nu * t * k / 3;
  return 1 - 1 / G;
}

}  // namespace

TEST_CASE("recurrent dimensions return exactly 1") {
  for (int nu : {1, 2}) {
    auto q = q_quadrature(nu);
    CHECK(q.value == 1.0);
    CHECK(q.abs_error == 0.0);
    CHECK(q.method == QMethod::Quadrature);
  }
}

TEST_CASE("scaled Bessel I0 against Boost and the asymptotic series") {
  for (double x = 0; x <= 700; x += 0.37) {
    const double want = std::exp(-x) * boost::math::cyl_bessel_i(0, x);
    CHECK(bessel_i0_scaled(x) == doctest::Approx(want).epsilon(1e-13));
  }
  for (double x : {1e4, 1e6, 1e9}) {
    const double t = 1 / (8 * x);
    const double want = (1 + t + 4.5 * t * t) / std::sqrt(2 * std::numbers::pi * x);
    CHECK(bessel_i0_scaled(x) == doctest::Approx(want).epsilon(1e-12));
  }
}

TEST_CASE("q(3) against the closed form") {
  auto q = q_quadrature(3);
  const double exact = 1 - 1 / watson_green();
  CHECK(std::fabs(q.value - exact) <= q.abs_error);
  CHECK(q.abs_error <= 1e-9);
  CHECK(q.value == doctest::Approx(0.3405).epsilon(1e-4 / 0.3405));
}

TEST_CASE("q(nu) against an independent Simpson rule") {
  for (int nu : {4, 5, 8}) {
    auto q = q_quadrature(nu);
    CHECK(q.value == doctest::Approx(simpson_q(nu)).epsilon(1e-7));
  }
}

TEST_CASE("q is strictly decreasing and behaves like 1/(2 nu)") {
  double prev = 1;
  for (int nu = 3; nu <= 60; ++nu) {
    auto q = q_quadrature(nu);
    CHECK(q.value < prev);
    CHECK(q.abs_error <= 1e-9);
    prev = q.value;
  }
  auto q30 = q_quadrature(30);
  CHECK(std::fabs(2 * 30 * q30.value - 1) <= 0.1);
}

TEST_CASE("halving the cutoff stays within the reported error") {
  for (int nu : {3, 4, 6, 10}) {
    auto full = q_quadrature(nu);
    auto half = q_quadrature(nu, 1e-10, full.cutoff / 2);
    CHECK(std::fabs(full.value - half.value) <= half.abs_error + full.abs_error);
    auto coarse = q_quadrature(nu, 1e-10, 64);
    CHECK(std::fabs(full.value - coarse.value) <= coarse.abs_error + full.abs_error);
  }
}

TEST_CASE("Monte Carlo return probability") {
  auto a = q_monte_carlo(3, 5000, 20000, 7);
  auto b = q_monte_carlo(3, 5000, 20000, 7);
  CHECK(a.value == b.value);
  CHECK(a.returned == b.returned);
  CHECK(a.method == QMethod::MonteCarlo);
  REQUIRE(a.ci);
  CHECK(a.ci->lo <= a.value);
  CHECK(a.value <= a.ci->hi);
  const double q3 = q_quadrature(3).value;
  CHECK(std::fabs(a.value - q3) <= a.abs_error + a.truncation_bias + 0.005);

  // the truncation bound needs a transient walk
  CHECK_THROWS(q_monte_carlo(2, 100, 10, 1));

  auto short_h = q_monte_carlo(4, 10, 20000, 3);
  auto long_h = q_monte_carlo(4, 20000, 20000, 3);
  CHECK(long_h.value + long_h.abs_error >= short_h.value - short_h.abs_error);
  CHECK(long_h.truncation_bias < short_h.truncation_bias);
}

TEST_CASE("q_N estimate basics") {
  auto a = q_N_estimate(4, 2, 6, 400, 5);
  auto b = q_N_estimate(4, 2, 6, 400, 5);
  CHECK(a.value == b.value);
  CHECK(a.value <= 1.0);
  CHECK(a.value >= 0.0);
  CHECK(!a.candidates.empty());
  double best = 0;
  for (auto& c : a.candidates) {
    CHECK(c.replicas == 400);
    CHECK(c.value == doctest::Approx(static_cast<double>(c.hits) / 400));
    best = std::max(best, c.value);
  }
  CHECK(a.value == best);
  CHECK_THROWS(q_N_estimate(3, 2, 6, 10, 1));
}
