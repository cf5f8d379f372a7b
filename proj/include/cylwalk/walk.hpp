#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <vector>

#include "cylwalk/geometry.hpp"
#include "cylwalk/rng.hpp"
#include "cylwalk/stats.hpp"

namespace cylwalk {

/// First-hit times of visited sites, stored densely level by level. The
/// cross-section of the cylinder is finite, so each height carries one
/// array of N^d entries; levels are allocated as the walk reaches them.
class FirstHitIndex {
 public:
  static constexpr std::uint32_t kUnvisited = std::numeric_limits<std::uint32_t>::max();
  static constexpr std::uint64_t kMaxTime = kUnvisited - 1;

  /// With a window, visits at heights outside it are dropped, which keeps
  /// memory bounded on long runs that only look at a few blocks. Everything
  /// below (size, z range, all_lines_hit_at) then refers to the window.
  explicit FirstHitIndex(std::uint32_t cells = 1, std::optional<HeightRange> window = std::nullopt)
      : cells_(cells), window_(window), cell_seen_(cells, 0) {}

  /// Records a visit at `time`; returns true on a first visit. Times must
  /// be nondecreasing across calls.
  bool record(Site s, std::uint64_t time);

  std::optional<std::uint64_t> first_hit(Site s) const {
    const std::uint32_t t = raw(s.cell, s.z);
    if (t == kUnvisited) return std::nullopt;
    return t;
  }
  /// kUnvisited when the site was never visited.
  std::uint32_t raw(std::uint32_t cell, std::int64_t z) const {
    const std::int64_t layer = z - base_;
    if (layer < 0 || layer >= layers_) return kUnvisited;
    return hits_[static_cast<std::size_t>(layer) * cells_ + cell];
  }
  bool visited_by(Site s, std::uint64_t n) const { return raw(s.cell, s.z) <= n; }

  std::uint32_t cells() const { return cells_; }
  std::size_t size() const { return size_; }
  bool empty() const { return size_ == 0; }
  std::int64_t z_min() const { return z_min_; }
  std::int64_t z_max() const { return z_max_; }
  /// Earliest time at which every vertical line {cell} x Z had been hit.
  std::optional<std::uint64_t> all_lines_hit_at() const { return all_lines_at_; }

  /// Visits every recorded site as fn(Site, first_hit_time).
  void for_each(const std::function<void(Site, std::uint64_t)>& fn) const;

 private:
  void ensure_layer(std::int64_t z);

  std::uint32_t cells_;
  std::optional<HeightRange> window_;
  std::int64_t base_ = 0;
  std::int64_t layers_ = 0;
  std::vector<std::uint32_t> hits_;
  std::size_t size_ = 0;
  std::int64_t z_min_ = 0;
  std::int64_t z_max_ = -1;
  std::vector<char> cell_seen_;
  std::uint32_t lines_hit_ = 0;
  std::optional<std::uint64_t> all_lines_at_;
};

/// Walk path together with the visited set X_[0,n] and first-hit times.
class TrajectoryStore {
 public:
  TrajectoryStore(std::uint32_t cells, Site start, bool record_path = true,
                  std::optional<HeightRange> index_window = std::nullopt);

  void push(Site next);

  std::uint64_t time() const { return time_; }
  Site position() const { return position_; }
  /// Empty unless the store was created with record_path.
  const std::vector<Site>& path() const { return path_; }
  bool records_path() const { return record_path_; }
  const FirstHitIndex& visited() const { return visited_; }

 private:
  bool record_path_;
  std::uint64_t time_ = 0;
  Site position_;
  std::vector<Site> path_;
  FirstHitIndex visited_;
};

enum class StartLaw { Origin, UniformB0 };

struct WalkConfig {
  int d = 1;
  int N = 2;
  std::uint64_t seed = 0;
  /// Replica index; selects an independent generator stream for `seed`.
  std::uint64_t stream = 0;
  StartLaw start = StartLaw::Origin;
  std::optional<std::uint64_t> step_cap;
  bool record_path = true;
  /// Restricts the first-hit index to these heights (see FirstHitIndex).
  std::optional<HeightRange> index_window;
};

enum class StepStatus { Ok, CapHit };

/// One simple-random-walk step: a uniform choice among the 2(d+1) signed
/// unit directions, also when N <= 2 makes some of them coincide.
StepStatus advance(TrajectoryStore& traj, const Cylinder& cyl, Xoshiro256& rng,
                   std::optional<std::uint64_t> step_cap = std::nullopt);

class Walk {
 public:
  explicit Walk(const WalkConfig& cfg);
  Walk(const WalkConfig& cfg, Site start);

  StepStatus advance() { return cylwalk::advance(traj_, cyl_, rng_, cfg_.step_cap); }

  const Cylinder& cylinder() const { return cyl_; }
  const WalkConfig& config() const { return cfg_; }
  const TrajectoryStore& trajectory() const { return traj_; }
  Site position() const { return traj_.position(); }
  std::uint64_t time() const { return traj_.time(); }
  Xoshiro256& rng() { return rng_; }

 private:
  WalkConfig cfg_;
  Cylinder cyl_;
  Xoshiro256 rng_;
  TrajectoryStore traj_;
};

Site draw_start(const Cylinder& cyl, StartLaw law, Xoshiro256& rng);

/// Entrance, exit and hitting times of a set; nullopt means the event was
/// not observed within the recorded path.
struct StoppingTimes {
  std::optional<std::uint64_t> entrance;  // H_U = inf{n >= 0 : X_n in U}
  std::optional<std::uint64_t> exit;      // T_U = inf{n >= 0 : X_n not in U}
  std::optional<std::uint64_t> hitting;   // H~_U = inf{n >= 1 : X_n in U}
};

StoppingTimes entrance_exit_times(std::span<const Site> path, const std::function<bool(Site)>& in_set);

/// Successive returns R_k to B_j and departures D_k from B~_j.
struct ExcursionLedger {
  std::int64_t level = 0;
  std::vector<std::uint64_t> returns;
  std::vector<std::uint64_t> departures;

  /// R_t = R_[t] with R_0 = 0; nullopt when not yet observed.
  std::optional<std::uint64_t> return_time(double t) const;
  std::optional<std::uint64_t> departure_time(double t) const;
};

class ExcursionTracker {
 public:
  ExcursionTracker(std::int64_t level, int N, std::size_t k_max = std::numeric_limits<std::size_t>::max());

  /// Feed X^{d+1}_n for n = 0, 1, 2, ... in order.
  void feed(std::uint64_t time, std::int64_t z);
  bool complete() const { return ledger_.departures.size() >= k_max_; }
  const ExcursionLedger& ledger() const { return ledger_; }

 private:
  HeightRange inner_;
  HeightRange outer_;
  std::size_t k_max_;
  bool inside_ = false;
  ExcursionLedger ledger_;
};

ExcursionLedger excursions(std::span<const Site> path, std::int64_t j, int N,
                           std::size_t k_max = std::numeric_limits<std::size_t>::max());

/// Departure counts from B~_j for every level j at once, fed with the
/// height process one step at a time.
class LevelDepartureCounter {
 public:
  explicit LevelDepartureCounter(int N) : N_(N) {}

  void feed(std::uint64_t time, std::int64_t z);
  std::uint64_t departures(std::int64_t j) const;
  std::uint64_t returns(std::int64_t j) const;
  std::uint64_t max_departures() const { return max_departures_; }
  /// Levels whose block B_j has been entered at least once.
  std::vector<std::int64_t> visited_levels() const;

 private:
  struct State {
    bool inside = false;
    std::uint64_t returns = 0;
    std::uint64_t departures = 0;
  };
  State& state(std::int64_t j);
  const State* find(std::int64_t j) const;

  int N_;
  bool started_ = false;
  std::int64_t last_z_ = 0;
  std::int64_t offset_ = 0;
  std::vector<State> states_;
  std::uint64_t max_departures_ = 0;
};

/// tau_0 = first visit to (Z/NZ)^d x NZ, tau_{k+1} = first later time the
/// height has moved by exactly N from its value at tau_k.
struct TauSequence {
  std::vector<std::uint64_t> times;
  std::vector<std::int64_t> heights;
};

class TauTracker {
 public:
  explicit TauTracker(int N) : N_(N) {}
  void feed(std::uint64_t time, std::int64_t z);
  const TauSequence& sequence() const { return seq_; }

 private:
  int N_;
  TauSequence seq_;
};

TauSequence tau_times(std::span<const Site> path, int N);

/// L_N(l, t) = #{n <= t : X^{d+1}_{tau_n} = l N}.
struct LevelLocalTime {
  std::map<std::int64_t, std::uint64_t> counts;

  std::uint64_t at(std::int64_t level) const {
    auto it = counts.find(level);
    return it == counts.end() ? 0 : it->second;
  }
  std::uint64_t total() const;
  std::uint64_t max() const;
};

/// nullopt when tau_[t] has not been observed.
std::optional<LevelLocalTime> level_local_time(const TauSequence& taus, double t, int N);

/// Simple random walk on Z^nu; coordinates stored row-major per step.
struct LatticePath {
  int nu = 1;
  std::vector<std::int64_t> coords;

  std::size_t length() const { return coords.size() / static_cast<std::size_t>(nu); }
  std::span<const std::int64_t> point(std::size_t n) const {
    return {coords.data() + n * static_cast<std::size_t>(nu), static_cast<std::size_t>(nu)};
  }
};

LatticePath walk_z_nu(int nu, std::uint64_t seed, std::uint64_t horizon);

struct ExitTailSummary {
  int d = 1;
  int N = 2;
  std::uint64_t replicas = 0;
  std::vector<double> s_grid;
  std::vector<double> exit_survival;  // P[T_{B~}/N^2 > s]
  std::vector<double> tau_survival;   // P[tau_1/N^2 > s]
  LineFit exit_fit;                   // log survival against s
  LineFit tau_fit;
};

ExitTailSummary exit_tail_stats(int d, int N, std::uint64_t replicas, std::uint64_t seed,
                                std::vector<double> s_grid = {1, 1.5, 2, 2.5, 3, 3.5, 4, 4.5, 5, 5.5, 6});

}  // namespace cylwalk
