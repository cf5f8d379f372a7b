#include <doctest.h>

#include <cmath>
#include <set>
#include <utility>
#include <vector>

#include "cylwalk/criticality.hpp"

using namespace cylwalk;

namespace {

// Breadth-first growth of king-move self-avoiding walks in Z^2.
std::uint64_t king_walks(int n) {
  using Pt = std::pair<int, int>;
  std::vector<std::vector<Pt>> walks{{{0, 0}}};
  for (int step = 0; step < n; ++step) {
    std::vector<std::vector<Pt>> next;
    for (auto& w : walks) {
      const std::set<Pt> used(w.begin(), w.end());
      for (int dx = -1; dx <= 1; ++dx) {
        for (int dy = -1; dy <= 1; ++dy) {
          if (!dx && !dy) continue;
          Pt p{w.back().first + dx, w.back().second + dy};
          if (used.count(p)) continue;
          auto v = w;
          v.push_back(p);
          next.push_back(std::move(v));
        }
      }
    }
    walks = std::move(next);
  }
  return walks.size();
}

}  // namespace

TEST_CASE("chi") {
  CHECK(chi(0, 2, 17, 1.0) == doctest::Approx(1.0).epsilon(1e-15));
  const double q16 = q_quadrature(16).value;
  const double v = chi(0, 2, 17, q16);
  CHECK(v == doctest::Approx(2.0 / 18 + 16.0 / 18 * q16).epsilon(1e-15));
  CHECK(v < 1);
  double prev = 0;
  for (double l = 0; l <= 3; l += 0.125) {
    const double c = chi(l, 2, 10, 0.06);
    CHECK(c > prev);
    prev = c;
  }
  CHECK_THROWS(chi(-1, 2, 10, 0.1));
  CHECK_THROWS(chi(0, 9, 10, 0.1));
  CHECK_THROWS(chi(0, 2, 10, 1.5));
}

TEST_CASE("rho around the threshold") {
  auto r17 = rho(17);
  auto r16 = rho(16);
  CHECK(r17.holds);
  CHECK(!r16.holds);
  // pinned from the quadrature
  CHECK(r17.rho == doctest::Approx(0.98596315667602).epsilon(1e-11));
  CHECK(r16.rho == doctest::Approx(1.04507708400956).epsilon(1e-11));
  CHECK(!r16.lambda0);
  CHECK(!r16.c0);
  CHECK_THROWS(rho(3));
}

TEST_CASE("report fields follow their formulas") {
  for (int d = 4; d <= 40; ++d) {
    auto r = rho(d);
    const double q = q_quadrature(d - 1).value;
    CHECK(r.q_used.value == q);
    const double w = 2.0 / (d + 1);
    CHECK(r.rho == 7 * (w + (1 - w) * q));
    CHECK(r.rho_err <= 7 * r.q_used.abs_error);
    CHECK(r.holds == (r.rho < 1));
    if (r.holds) {
      REQUIRE(r.lambda0);
      REQUIRE(r.c0);
      CHECK(*r.lambda0 == std::log(7.0) - 0.5 * std::log(r.rho));
      CHECK(*r.c0 == 8.0 * d / std::log(1 / r.rho));
      CHECK(std::fabs(chi(*r.lambda0, 2, d, q) - std::sqrt(r.rho)) <= 1e-12);
      CHECK(std::sqrt(r.rho) < 1);
    }
  }
}

TEST_CASE("threshold scan") {
  auto scan = threshold_scan(4, 30, 1e-6);
  REQUIRE(scan.minimal_holding);
  CHECK(*scan.minimal_holding == 17);
  bool seen = false;
  double prev = 1e9;
  for (auto& r : scan.reports) {
    CHECK(r.q_used.abs_error <= 1e-4);
    CHECK(r.rho < prev);
    prev = r.rho;
    if (seen) CHECK(r.holds);
    seen = seen || r.holds;
    CHECK(r.holds == (r.d >= 17));
  }
  CHECK_THROWS(threshold_scan(3, 10));
  CHECK_THROWS(threshold_scan(4, 65));
}

TEST_CASE("star self-avoiding walks") {
  CHECK(star_saw_count(1) == 8);
  CHECK(star_saw_count(2) == 56);
  for (int n = 1; n <= 6; ++n) CHECK(star_saw_count(n) == king_walks(n));
  std::uint64_t bound = 8, prev = 0;
  for (int n = 1; n <= 8; ++n) {
    const auto a = star_saw_count(n);
    CHECK(a <= bound);
    if (n > 1) CHECK(a <= 7 * prev);
    prev = a;
    bound *= 7;
  }
  CHECK_THROWS(star_saw_count(0));
  CHECK_THROWS(star_saw_count(11));
}

TEST_CASE("configured u0 passthrough") {
  auto rec = u0_placeholder(17, 0.01);
  CHECK(rec.u == 0.01);
  CHECK(rec.d == 17);
  auto r = rho(17);
  CHECK(rec.lambda0 == *r.lambda0);
  CHECK(rec.c0 == *r.c0);
  CHECK(rec.rho == r.rho);
  CHECK(std::string(rec.source) == "configured");
  CHECK_THROWS(u0_placeholder(16, 0.01));
}
