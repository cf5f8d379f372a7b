#include "cylwalk/return_probability.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/random/discrete_distribution.hpp>

#include "cylwalk/geometry.hpp"
#include "cylwalk/rng.hpp"

namespace cylwalk {

std::string to_string(QMethod m) { return m == QMethod::Quadrature ? "quadrature" : "monte_carlo"; }

double bessel_i0_scaled(double x) {
  if (x < 0) throw std::invalid_argument("bessel_i0_scaled needs x >= 0");
  if (x <= 20.0) {
    const double t = x * x / 4;
    double term = 1, sum = 1;
    for (int k = 1; k < 200; ++k) {
      term *= t / (static_cast<double>(k) * k);
      sum += term;
      if (term < sum * 1e-17) break;
    }
    return sum * std::exp(-x);
  }
  // e^{-x} I0(x) ~ (2 pi x)^{-1/2} sum_k ((2k-1)!!)^2 / (k! 8^k x^k)
  double term = 1, sum = 1;
  for (int k = 1; k < 100; ++k) {
    const double next = term * (2.0 * k - 1) * (2.0 * k - 1) / (8.0 * k * x);
    if (next >= term) break;
    term = next;
    sum += term;
    if (term < sum * 1e-17) break;
  }
  return sum / std::sqrt(2 * std::numbers::pi * x);
}

namespace {

using Kronrod = boost::math::quadrature::gauss_kronrod<double, 61>;

/// nu * int_X^inf (c / sqrt(2 pi x))^nu dx. Since sqrt(2 pi x) f(x)
/// decreases to 1 on [1, inf), c = 1 gives a lower bound on the tail of G
/// and c = sqrt(2 pi X) f(X) an upper one.
double tail_integral(int nu, double X, double c) {
  const double half = nu / 2.0;
  return nu * std::pow(c, nu) * std::pow(2 * std::numbers::pi, -half) * std::pow(X, 1 - half) / (half - 1);
}

double tail_bound(int nu, double X) {
  return tail_integral(nu, X, std::sqrt(2 * std::numbers::pi * X) * bessel_i0_scaled(X));
}

}  // namespace

QEstimate q_quadrature(int nu, double tol, std::optional<double> cutoff) {
  if (nu < 1) throw std::invalid_argument("q needs nu >= 1");
  if (!(tol > 0)) throw std::invalid_argument("tolerance must be positive");
  QEstimate out;
  out.nu = nu;
  out.method = QMethod::Quadrature;
  if (nu <= 2) {
    out.value = 1.0;
    out.green = std::numeric_limits<double>::infinity();
    return out;
  }
  double X = 64;
  if (cutoff) {
    if (*cutoff < 1) throw std::invalid_argument("cutoff must be >= 1");
    X = *cutoff;
  } else {
    while (tail_bound(nu, X) - tail_integral(nu, X, 1.0) > tol && X < 1e300) X *= 2;
  }
  const double tail_hi = tail_bound(nu, X);
  const double tail_lo = tail_integral(nu, X, 1.0);
  const double n = nu;
  auto f = [nu](double x) { return std::pow(bessel_i0_scaled(x), nu); };
  double err_head = 0, err_body = 0;
  const double rel = 1e-14;
  const double head = n * Kronrod::integrate(f, 0.0, 1.0, 20, rel, &err_head);
  // x = e^s turns the algebraic tail into an exponentially decaying one.
  auto g = [&](double s) {
    const double x = std::exp(s);
    return f(x) * x;
  };
  const double body = n * Kronrod::integrate(g, 0.0, std::log(X), 20, rel, &err_body);
  const double G = head + body + 0.5 * (tail_lo + tail_hi);
  const double quad_err = n * (err_head + err_body) + 4 * std::numeric_limits<double>::epsilon() * G;
  const double err = quad_err + 0.5 * (tail_hi - tail_lo);
  out.green = G;
  out.cutoff = X;
  out.value = 1 - 1 / G;
  out.abs_error = err / ((G - err) * G);
  return out;
}

namespace {

using Discrete = boost::random::discrete_distribution<std::uint32_t, double>;

/// Exact law of the displacement after k steps: the split of k among the
/// axes is multinomial and the sign count per axis is binomial.
struct BlockLevel {
  std::uint64_t k = 0;
  Discrete split;
  std::vector<std::uint16_t> parts;
};

class BlockSampler {
 public:
  explicit BlockSampler(int nu) : nu_(nu) {
    constexpr std::uint64_t kMaxSplits = 1u << 20;
    std::uint64_t k = 2;
    for (; k <= 1024; k *= 2) {
      if (splits(k) > kMaxSplits) break;
      levels_.push_back(make_level(k));
    }
    const std::uint64_t kmax = levels_.empty() ? 0 : levels_.back().k;
    for (std::uint64_t n = 0; n <= kmax; ++n) {
      std::vector<double> p(n + 1);
      for (std::uint64_t h = 0; h <= n; ++h) {
        p[h] = std::exp(std::lgamma(n + 1.0) - std::lgamma(h + 1.0) - std::lgamma(n - h + 1.0) -
                        static_cast<double>(n) * std::numbers::ln2);
      }
      binomial_.emplace_back(p.begin(), p.end());
    }
  }

  /// Largest level with k < dist and k <= remaining, or nullptr.
  BlockLevel* pick(std::int64_t dist, std::uint64_t remaining) {
    for (auto it = levels_.rbegin(); it != levels_.rend(); ++it) {
      if (static_cast<std::int64_t>(it->k) < dist && it->k <= remaining) return &*it;
    }
    return nullptr;
  }

  void jump(BlockLevel& level, Xoshiro256& rng, std::span<std::int64_t> x) {
    const std::uint32_t idx = level.split(rng);
    const std::uint16_t* part = level.parts.data() + static_cast<std::size_t>(idx) * nu_;
    for (int a = 0; a < nu_; ++a) {
      const std::uint16_t na = part[a];
      if (na == 0) continue;
      const auto h = static_cast<std::int64_t>(binomial_[na](rng));
      x[static_cast<std::size_t>(a)] += 2 * h - na;
    }
  }

 private:
  std::uint64_t splits(std::uint64_t k) const {
    // C(k + nu - 1, nu - 1), saturating.
    double c = 1;
    for (int i = 1; i < nu_; ++i) c = c * static_cast<double>(k + static_cast<std::uint64_t>(i)) / i;
    return c > 1e18 ? static_cast<std::uint64_t>(1e18) : static_cast<std::uint64_t>(std::llround(c));
  }

  BlockLevel make_level(std::uint64_t k) {
    BlockLevel level;
    level.k = k;
    std::vector<double> prob;
    std::vector<std::uint16_t> cur(static_cast<std::size_t>(nu_));
    const double log_norm = std::lgamma(k + 1.0) - static_cast<double>(k) * std::log(static_cast<double>(nu_));
    auto rec = [&](auto&& self, int axis, std::uint64_t left, double log_p) -> void {
      if (axis == nu_ - 1) {
        cur[static_cast<std::size_t>(axis)] = static_cast<std::uint16_t>(left);
        level.parts.insert(level.parts.end(), cur.begin(), cur.end());
        prob.push_back(std::exp(log_p - std::lgamma(left + 1.0)));
        return;
      }
      for (std::uint64_t n = 0; n <= left; ++n) {
        cur[static_cast<std::size_t>(axis)] = static_cast<std::uint16_t>(n);
        self(self, axis + 1, left - n, log_p - std::lgamma(n + 1.0));
      }
    };
    rec(rec, 0, k, log_norm);
    level.split = Discrete(prob.begin(), prob.end());
    return level;
  }

  int nu_;
  std::vector<BlockLevel> levels_;
  std::vector<Discrete> binomial_;
};

}  // namespace

QEstimate q_monte_carlo(int nu, std::uint64_t horizon, std::uint64_t replicas, std::uint64_t seed) {
  if (nu < 3) throw std::invalid_argument("q_monte_carlo needs nu >= 3");
  if (replicas == 0) throw std::invalid_argument("q_monte_carlo needs >= 1 replica");
  BlockSampler sampler(nu);
  std::vector<std::int64_t> x(static_cast<std::size_t>(nu));
  std::uint64_t returned = 0;
  for (std::uint64_t r = 0; r < replicas; ++r) {
    Xoshiro256 rng = replica_stream(seed, r);
    std::fill(x.begin(), x.end(), 0);
    std::int64_t dist = 0;
    std::uint64_t n = 0;
    while (n < horizon) {
      // A block of k < dist steps cannot reach the origin.
      if (BlockLevel* level = sampler.pick(dist, horizon - n)) {
        sampler.jump(*level, rng, x);
        n += level->k;
        dist = 0;
        for (auto c : x) dist += c < 0 ? -c : c;
        continue;
      }
      const auto dir = rng.below(2 * static_cast<std::uint64_t>(nu));
      auto& c = x[dir >> 1];
      const std::int64_t before = c < 0 ? -c : c;
      c += (dir & 1) ? -1 : 1;
      dist += (c < 0 ? -c : c) - before;
      ++n;
      if (dist == 0) {
        ++returned;
        break;
      }
    }
  }
  QEstimate out;
  out.nu = nu;
  out.method = QMethod::MonteCarlo;
  out.replicas = replicas;
  out.returned = returned;
  out.value = static_cast<double>(returned) / static_cast<double>(replicas);
  out.ci = wilson_interval(returned, replicas);
  out.abs_error = std::max(out.value - out.ci->lo, out.ci->hi - out.value);
  out.std_error = std::sqrt(out.value * (1 - out.value) / static_cast<double>(replicas));
  // Local limit: P[S_n = 0] ~ 2 (nu / (2 pi n))^{nu/2} for even n, so the
  // expected number of visits after the horizon is about
  // (nu / 2 pi)^{nu/2} h^{1 - nu/2} / (nu/2 - 1).
  const double half = nu / 2.0;
  const double h = static_cast<double>(std::max<std::uint64_t>(horizon, 1));
  out.truncation_bias = std::pow(nu / (2 * std::numbers::pi), half) * std::pow(h, 1 - half) / (half - 1);
  return out;
}

namespace {

struct PlaneWalkSetup {
  std::vector<char> constrained;  // per axis 0..d
  std::vector<int> start;         // torus residues
  std::int64_t start_z = 0;
  std::int64_t plane_z = 0;       // used when the vertical axis is constrained
};

std::uint64_t plane_hits(const PlaneWalkSetup& s, int d, int N, std::uint64_t replicas, std::uint64_t seed,
                         std::uint64_t stream_base) {
  const HeightRange outer = block_heights(BlockKind::BTilde, 0, N);
  std::vector<int> x(static_cast<std::size_t>(d));
  std::uint64_t hits = 0;
  const auto dirs = 2 * static_cast<std::uint64_t>(d + 1);
  for (std::uint64_t r = 0; r < replicas; ++r) {
    Xoshiro256 rng = replica_stream(seed, stream_base + r);
    std::copy(s.start.begin(), s.start.end(), x.begin());
    std::int64_t z = s.start_z;
    int off = 0;
    for (int a = 0; a < d; ++a) off += s.constrained[static_cast<std::size_t>(a)] && x[static_cast<std::size_t>(a)] != 0;
    const bool vconstr = s.constrained[static_cast<std::size_t>(d)];
    if (vconstr && z != s.plane_z) ++off;
    while (true) {
      if (off == 0) {
        ++hits;
        break;
      }
      if (!outer.contains(z)) break;
      const auto dir = rng.below(dirs);
      const int axis = static_cast<int>(dir >> 1);
      const int sign = (dir & 1) ? -1 : 1;
      if (axis == d) {
        if (vconstr) off -= z != s.plane_z;
        z += sign;
        if (vconstr) off += z != s.plane_z;
      } else {
        auto& c = x[static_cast<std::size_t>(axis)];
        const bool con = s.constrained[static_cast<std::size_t>(axis)];
        if (con) off -= c != 0;
        c += sign;
        if (c == N) c = 0;
        if (c < 0) c = N - 1;
        if (con) off += c != 0;
      }
    }
  }
  return hits;
}

}  // namespace

QNEstimate q_N_estimate(int d, int m, int N, std::uint64_t replicas, std::uint64_t seed, const QNOptions& options) {
  if (d < 3) throw std::invalid_argument("q_N needs d >= 3");
  if (m < 1 || m > d - 2) throw std::invalid_argument("q_N needs 1 <= m <= d - 2");
  if (N < 2) throw std::invalid_argument("q_N needs N >= 2");
  if (replicas == 0) throw std::invalid_argument("q_N needs >= 1 replica");
  if (options.heights.empty()) throw std::invalid_argument("q_N needs at least one height");
  QNEstimate out{d, m, N, replicas, 0, 0, {}};

  auto run = [&](QNCandidate c, const PlaneWalkSetup& setup) {
    const std::uint64_t base = (out.candidates.size() + 1) << 40;
    c.replicas = replicas;
    c.hits = plane_hits(setup, d, N, replicas, seed, base);
    c.value = static_cast<double>(c.hits) / static_cast<double>(replicas);
    c.std_error = std::sqrt(c.value * (1 - c.value) / static_cast<double>(replicas));
    out.candidates.push_back(c);
  };

  for (std::int64_t h : options.heights) {
    // F spanned by e_0..e_{m-2} and the vertical axis; z one step off F along e_{m-1}.
    {
      PlaneWalkSetup s;
      s.constrained.assign(static_cast<std::size_t>(d + 1), 1);
      for (int a = 0; a < m - 1; ++a) s.constrained[static_cast<std::size_t>(a)] = 0;
      s.constrained[static_cast<std::size_t>(d)] = 0;
      s.start.assign(static_cast<std::size_t>(d), 0);
      s.start[static_cast<std::size_t>(m - 1)] = 1;
      s.start_z = h;
      run({"vertical", "transverse", h}, s);
    }
    // F spanned by e_0..e_{m-1} at height h.
    PlaneWalkSetup s;
    s.constrained.assign(static_cast<std::size_t>(d + 1), 1);
    for (int a = 0; a < m; ++a) s.constrained[static_cast<std::size_t>(a)] = 0;
    s.start.assign(static_cast<std::size_t>(d), 0);
    s.plane_z = h;
    s.start[static_cast<std::size_t>(m)] = 1;
    s.start_z = h;
    run({"horizontal", "transverse", h}, s);
    s.start[static_cast<std::size_t>(m)] = 0;
    s.start_z = h + 1;
    run({"horizontal", "above", h}, s);
  }
  const auto best = std::max_element(out.candidates.begin(), out.candidates.end(),
                                     [](const QNCandidate& a, const QNCandidate& b) { return a.value < b.value; });
  out.value = best->value;
  out.std_error = best->std_error;
  return out;
}

}  // namespace cylwalk
