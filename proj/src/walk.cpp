#include "cylwalk/walk.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace cylwalk {

// ---------------------------------------------------------------- FirstHitIndex

void FirstHitIndex::ensure_layer(std::int64_t z) {
  if (layers_ == 0) {
    constexpr std::int64_t kInitial = 64;
    base_ = z - kInitial / 2;
    layers_ = kInitial;
    hits_.assign(static_cast<std::size_t>(layers_) * cells_, kUnvisited);
    return;
  }
  if (z >= base_ && z < base_ + layers_) return;
  std::int64_t new_base = base_;
  std::int64_t new_layers = layers_;
  while (z < new_base) {
    new_base -= new_layers;
    new_layers *= 2;
  }
  while (z >= new_base + new_layers) new_layers *= 2;
  std::vector<std::uint32_t> grown(static_cast<std::size_t>(new_layers) * cells_, kUnvisited);
  const auto shift = static_cast<std::size_t>(base_ - new_base) * cells_;
  std::copy(hits_.begin(), hits_.end(), grown.begin() + static_cast<std::ptrdiff_t>(shift));
  hits_ = std::move(grown);
  base_ = new_base;
  layers_ = new_layers;
}

bool FirstHitIndex::record(Site s, std::uint64_t time) {
  if (time > kMaxTime) throw std::overflow_error("walk time exceeds the first-hit index range");
  if (window_ && !window_->contains(s.z)) return false;
  ensure_layer(s.z);
  auto& slot = hits_[static_cast<std::size_t>(s.z - base_) * cells_ + s.cell];
  if (slot != kUnvisited) return false;
  slot = static_cast<std::uint32_t>(time);
  if (size_ == 0) {
    z_min_ = z_max_ = s.z;
  } else {
    z_min_ = std::min<std::int64_t>(z_min_, s.z);
    z_max_ = std::max<std::int64_t>(z_max_, s.z);
  }
  ++size_;
  if (!cell_seen_[s.cell]) {
    cell_seen_[s.cell] = 1;
    if (++lines_hit_ == cells_) all_lines_at_ = time;
  }
  return true;
}

void FirstHitIndex::for_each(const std::function<void(Site, std::uint64_t)>& fn) const {
  for (std::int64_t layer = 0; layer < layers_; ++layer) {
    const auto row = static_cast<std::size_t>(layer) * cells_;
    for (std::uint32_t c = 0; c < cells_; ++c) {
      const std::uint32_t t = hits_[row + c];
      if (t != kUnvisited) fn(Site{c, static_cast<std::int32_t>(base_ + layer)}, t);
    }
  }
}

// -------------------------------------------------------------- TrajectoryStore

TrajectoryStore::TrajectoryStore(std::uint32_t cells, Site start, bool record_path,
                                 std::optional<HeightRange> index_window)
    : record_path_(record_path), position_(start), visited_(cells, index_window) {
  if (record_path_) path_.push_back(start);
  visited_.record(start, 0);
}

void TrajectoryStore::push(Site next) {
  ++time_;
  position_ = next;
  if (record_path_) path_.push_back(next);
  visited_.record(next, time_);
}

// ------------------------------------------------------------------------- Walk

StepStatus advance(TrajectoryStore& traj, const Cylinder& cyl, Xoshiro256& rng,
                   std::optional<std::uint64_t> step_cap) {
  if (step_cap && traj.time() >= *step_cap) return StepStatus::CapHit;
  Site s = traj.position();
  const int dir = static_cast<int>(rng.below(static_cast<std::uint64_t>(cyl.directions())));
  if (direction_axis(dir) == cyl.vertical_axis()) {
    const std::int64_t z = static_cast<std::int64_t>(s.z) + direction_sign(dir);
    if (z < INT32_MIN || z > INT32_MAX) throw std::overflow_error("walk height overflowed 32 bits");
  }
  traj.push(cyl.step(s, dir));
  return StepStatus::Ok;
}

Site draw_start(const Cylinder& cyl, StartLaw law, Xoshiro256& rng) {
  if (law == StartLaw::Origin) return Site{0, 0};
  const std::int64_t heights = 2 * static_cast<std::int64_t>(cyl.side()) + 1;
  const std::uint64_t idx = rng.below(static_cast<std::uint64_t>(heights) * cyl.cells());
  return Site{static_cast<std::uint32_t>(idx % cyl.cells()),
              static_cast<std::int32_t>(static_cast<std::int64_t>(idx / cyl.cells()) - cyl.side())};
}

namespace {
Cylinder checked_cylinder(const WalkConfig& cfg) {
  if (cfg.d < 1) throw std::invalid_argument("walk requires d >= 1");
  if (cfg.N < 2) throw std::invalid_argument("walk requires N >= 2");
  return Cylinder(cfg.d, cfg.N);
}
}  // namespace

Walk::Walk(const WalkConfig& cfg)
    : cfg_(cfg),
      cyl_(checked_cylinder(cfg)),
      rng_(replica_stream(cfg.seed, cfg.stream)),
      traj_(cyl_.cells(), draw_start(cyl_, cfg.start, rng_), cfg.record_path, cfg.index_window) {}

Walk::Walk(const WalkConfig& cfg, Site start)
    : cfg_(cfg),
      cyl_(checked_cylinder(cfg)),
      rng_(replica_stream(cfg.seed, cfg.stream)),
      traj_(cyl_.cells(), start, cfg.record_path, cfg.index_window) {}

// ------------------------------------------------------------- stopping times

StoppingTimes entrance_exit_times(std::span<const Site> path, const std::function<bool(Site)>& in_set) {
  StoppingTimes out;
  for (std::size_t n = 0; n < path.size(); ++n) {
    const bool inside = in_set(path[n]);
    if (inside && !out.entrance) out.entrance = n;
    if (!inside && !out.exit) out.exit = n;
    if (inside && n >= 1 && !out.hitting) out.hitting = n;
    if (out.entrance && out.exit && out.hitting) break;
  }
  return out;
}

// ------------------------------------------------------------------ excursions

namespace {
std::optional<std::uint64_t> clock_at(const std::vector<std::uint64_t>& clock, double t) {
  if (!(t >= 0)) throw std::invalid_argument("excursion index must be >= 0");
  const auto k = static_cast<std::uint64_t>(std::floor(t));
  if (k == 0) return std::uint64_t{0};
  if (k > clock.size()) return std::nullopt;
  return clock[static_cast<std::size_t>(k - 1)];
}
}  // namespace

std::optional<std::uint64_t> ExcursionLedger::return_time(double t) const { return clock_at(returns, t); }
std::optional<std::uint64_t> ExcursionLedger::departure_time(double t) const { return clock_at(departures, t); }

ExcursionTracker::ExcursionTracker(std::int64_t level, int N, std::size_t k_max)
    : inner_(block_heights(BlockKind::B, level, N)),
      outer_(block_heights(BlockKind::BTilde, level, N)),
      k_max_(k_max) {
  ledger_.level = level;
}

void ExcursionTracker::feed(std::uint64_t time, std::int64_t z) {
  if (complete()) return;
  if (!inside_) {
    if (inner_.contains(z)) {
      ledger_.returns.push_back(time);
      inside_ = true;
    }
  } else if (!outer_.contains(z)) {
    ledger_.departures.push_back(time);
    inside_ = false;
  }
}

ExcursionLedger excursions(std::span<const Site> path, std::int64_t j, int N, std::size_t k_max) {
  ExcursionTracker tracker(j, N, k_max);
  for (std::size_t n = 0; n < path.size() && !tracker.complete(); ++n) tracker.feed(n, path[n].z);
  return tracker.ledger();
}

LevelDepartureCounter::State& LevelDepartureCounter::state(std::int64_t j) {
  if (states_.empty()) {
    offset_ = j;
    states_.resize(1);
  }
  if (j < offset_) {
    const auto grow = static_cast<std::size_t>(offset_ - j);
    states_.insert(states_.begin(), grow, State{});
    offset_ = j;
  }
  if (j - offset_ >= static_cast<std::int64_t>(states_.size())) {
    states_.resize(static_cast<std::size_t>(j - offset_ + 1));
  }
  return states_[static_cast<std::size_t>(j - offset_)];
}

const LevelDepartureCounter::State* LevelDepartureCounter::find(std::int64_t j) const {
  if (states_.empty() || j < offset_ || j - offset_ >= static_cast<std::int64_t>(states_.size())) return nullptr;
  return &states_[static_cast<std::size_t>(j - offset_)];
}

void LevelDepartureCounter::feed(std::uint64_t /*time*/, std::int64_t z) {
  if (started_ && z == last_z_) return;
  started_ = true;
  last_z_ = z;
  const std::int64_t n = N_;
  // Blocks B_j containing z: (j-1)N <= z <= (j+1)N.
  auto floor_div = [](std::int64_t a, std::int64_t b) {
    std::int64_t q = a / b;
    if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
    return q;
  };
  const std::int64_t j_lo = -floor_div(-(z - n), n);  // ceil((z - N) / N)
  const std::int64_t j_hi = floor_div(z + n, n);
  for (std::int64_t j = j_lo; j <= j_hi; ++j) {
    State& s = state(j);
    if (!s.inside) {
      s.inside = true;
      ++s.returns;
    }
  }
  // Leaving B~_j happens at z = (j + 2)N or z = (j - 2)N when steps are unit.
  if (z % n == 0) {
    for (std::int64_t j : {z / n - 2, z / n + 2}) {
      if (find(j) == nullptr) continue;
      State& s = state(j);
      if (s.inside) {
        s.inside = false;
        ++s.departures;
        max_departures_ = std::max(max_departures_, s.departures);
      }
    }
  }
}

std::uint64_t LevelDepartureCounter::departures(std::int64_t j) const {
  const State* s = find(j);
  return s ? s->departures : 0;
}

std::uint64_t LevelDepartureCounter::returns(std::int64_t j) const {
  const State* s = find(j);
  return s ? s->returns : 0;
}

std::vector<std::int64_t> LevelDepartureCounter::visited_levels() const {
  std::vector<std::int64_t> out;
  for (std::size_t i = 0; i < states_.size(); ++i) {
    if (states_[i].returns > 0) out.push_back(offset_ + static_cast<std::int64_t>(i));
  }
  return out;
}

// ------------------------------------------------------------- tau and local time

void TauTracker::feed(std::uint64_t time, std::int64_t z) {
  if (seq_.times.empty()) {
    if (z % N_ == 0) {
      seq_.times.push_back(time);
      seq_.heights.push_back(z);
    }
    return;
  }
  const std::int64_t diff = z - seq_.heights.back();
  if (diff == N_ || diff == -N_) {
    seq_.times.push_back(time);
    seq_.heights.push_back(z);
  }
}

TauSequence tau_times(std::span<const Site> path, int N) {
  TauTracker tracker(N);
  for (std::size_t n = 0; n < path.size(); ++n) tracker.feed(n, path[n].z);
  return tracker.sequence();
}

std::uint64_t LevelLocalTime::total() const {
  std::uint64_t sum = 0;
  for (const auto& [level, c] : counts) sum += c;
  return sum;
}

std::uint64_t LevelLocalTime::max() const {
  std::uint64_t best = 0;
  for (const auto& [level, c] : counts) best = std::max(best, c);
  return best;
}

std::optional<LevelLocalTime> level_local_time(const TauSequence& taus, double t, int N) {
  if (!(t >= 0)) throw std::invalid_argument("local time index must be >= 0");
  const auto k = static_cast<std::size_t>(std::floor(t));
  if (k >= taus.heights.size()) return std::nullopt;
  LevelLocalTime out;
  for (std::size_t n = 0; n <= k; ++n) ++out.counts[taus.heights[n] / N];
  return out;
}

// -------------------------------------------------------------------- Z^nu walk

LatticePath walk_z_nu(int nu, std::uint64_t seed, std::uint64_t horizon) {
  if (nu < 1) throw std::invalid_argument("walk on Z^nu requires nu >= 1");
  LatticePath path;
  path.nu = nu;
  path.coords.assign(static_cast<std::size_t>(horizon + 1) * static_cast<std::size_t>(nu), 0);
  Xoshiro256 rng = replica_stream(seed, 0);
  const auto width = static_cast<std::size_t>(nu);
  for (std::uint64_t n = 1; n <= horizon; ++n) {
    auto* prev = path.coords.data() + (n - 1) * width;
    auto* cur = prev + width;
    std::copy(prev, prev + width, cur);
    const int dir = static_cast<int>(rng.below(2 * static_cast<std::uint64_t>(nu)));
    cur[direction_axis(dir)] += direction_sign(dir);
  }
  return path;
}

// ------------------------------------------------------------------- exit tails

ExitTailSummary exit_tail_stats(int d, int N, std::uint64_t replicas, std::uint64_t seed,
                                std::vector<double> s_grid) {
  if (replicas < 1) throw std::invalid_argument("exit_tail_stats requires replicas >= 1");
  if (d < 1 || N < 2) throw std::invalid_argument("exit_tail_stats requires d >= 1, N >= 2");
  std::sort(s_grid.begin(), s_grid.end());
  const HeightRange outer = block_heights(BlockKind::BTilde, 0, N);
  const auto dirs = static_cast<std::uint64_t>(2 * (d + 1));
  const std::uint64_t up = static_cast<std::uint64_t>(2 * d);
  const std::uint64_t down = up + 1;

  std::vector<std::uint64_t> exit_times;
  std::vector<std::uint64_t> tau1_times;
  exit_times.reserve(replicas);
  tau1_times.reserve(replicas);
  for (std::uint64_t r = 0; r < replicas; ++r) {
    Xoshiro256 rng = replica_stream(seed, r);
    std::int64_t z = 0;
    std::uint64_t n = 0;
    std::optional<std::uint64_t> tau1;
    // Torus moves do not affect either stopping time, so only the height is tracked.
    while (outer.contains(z) || !tau1) {
      const std::uint64_t dir = rng.below(dirs);
      ++n;
      if (dir == up) {
        ++z;
      } else if (dir == down) {
        --z;
      } else {
        continue;
      }
      if (!tau1 && (z == N || z == -N)) tau1 = n;
      if (!outer.contains(z) && exit_times.size() == r) exit_times.push_back(n);
    }
    tau1_times.push_back(*tau1);
  }

  ExitTailSummary out;
  out.d = d;
  out.N = N;
  out.replicas = replicas;
  out.s_grid = s_grid;
  const double scale = static_cast<double>(N) * N;
  auto survival = [&](const std::vector<std::uint64_t>& times, double s) {
    const auto above = std::count_if(times.begin(), times.end(),
                                     [&](std::uint64_t t) { return static_cast<double>(t) / scale > s; });
    return static_cast<double>(above) / static_cast<double>(times.size());
  };
  std::vector<double> xs_exit, ys_exit, xs_tau, ys_tau;
  for (double s : s_grid) {
    const double pe = survival(exit_times, s);
    const double pt = survival(tau1_times, s);
    out.exit_survival.push_back(pe);
    out.tau_survival.push_back(pt);
    if (pe > 0) {
      xs_exit.push_back(s);
      ys_exit.push_back(std::log(pe));
    }
    if (pt > 0) {
      xs_tau.push_back(s);
      ys_tau.push_back(std::log(pt));
    }
  }
  if (xs_exit.size() >= 2) out.exit_fit = fit_line(xs_exit, ys_exit);
  if (xs_tau.size() >= 2) out.tau_fit = fit_line(xs_tau, ys_tau);
  return out;
}

}  // namespace cylwalk
