#include "cylwalk/vacant.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <stdexcept>

#include "cylwalk/union_find.hpp"

namespace cylwalk {

FirstHitIndex index_of(const Cylinder& cyl, std::span<const CylinderPoint> sites) {
  FirstHitIndex idx(cyl.cells());
  for (const auto& p : sites) idx.record(cyl.pack(p), 0);
  return idx;
}

SlabSnapshot make_slab(const TraceView& trace, std::int64_t padding) {
  const auto& idx = trace.index();
  if (idx.empty()) return {trace, -padding, padding};
  return {trace, idx.z_min() - padding, idx.z_max() + padding};
}

ComponentLabeling label_components(const SlabSnapshot& slab) {
  const Cylinder& cyl = slab.trace.cylinder();
  const std::uint32_t cells = cyl.cells();
  const std::int64_t height = slab.z_max - slab.z_min + 1;
  const std::size_t sites = static_cast<std::size_t>(height) * cells;
  const auto top = static_cast<std::uint32_t>(sites);
  const std::uint32_t bottom = top + 1;
  UnionFind uf(sites + 2);
  auto vacant = [&](std::uint32_t cell, std::int64_t z) { return !slab.trace.visited(cell, z); };

  for (std::int64_t layer = 0; layer < height; ++layer) {
    const std::int64_t z = slab.z_min + layer;
    for (std::uint32_t cell = 0; cell < cells; ++cell) {
      if (!vacant(cell, z)) continue;
      const auto id = static_cast<std::uint32_t>(layer * cells + cell);
      for (int a = 0; a < cyl.dim(); ++a) {
        const std::uint32_t nb = cyl.shift_cell(cell, a, 1);
        if (vacant(nb, z)) uf.unite(id, static_cast<std::uint32_t>(layer * cells + nb));
      }
      if (layer + 1 < height && vacant(cell, z + 1)) uf.unite(id, id + cells);
      if (layer == 0) uf.unite(id, bottom);
      if (layer == height - 1) uf.unite(id, top);
    }
  }

  ComponentLabeling out;
  out.z_min = slab.z_min;
  out.z_max = slab.z_max;
  out.cells = cells;
  out.label.assign(sites, -1);
  std::vector<std::int32_t> dense(sites + 2, -1);
  auto dense_id = [&](std::uint32_t root) {
    if (dense[root] < 0) dense[root] = out.components++;
    return dense[root];
  };
  for (std::int64_t layer = 0; layer < height; ++layer) {
    for (std::uint32_t cell = 0; cell < cells; ++cell) {
      if (!vacant(cell, slab.z_min + layer)) continue;
      const auto id = static_cast<std::uint32_t>(layer * cells + cell);
      out.label[id] = dense_id(uf.find(id));
    }
  }
  out.top = dense_id(uf.find(top));
  out.bottom = dense_id(uf.find(bottom));
  return out;
}

bool is_disconnecting(const TraceView& trace) {
  const auto& idx = trace.index();
  // A vertical line missed by the trace is a vacant path between the ends.
  const auto all = idx.all_lines_hit_at();
  if (!all || *all > trace.time()) return false;

  const SlabSnapshot slab = make_slab(trace, 1);
  const Cylinder& cyl = trace.cylinder();
  const std::uint32_t cells = cyl.cells();
  const std::int64_t height = slab.z_max - slab.z_min + 1;
  std::vector<std::uint8_t> seen(static_cast<std::size_t>(height) * cells, 0);
  std::vector<std::uint64_t> queue;
  const std::int64_t top_layer = height - 1;
  for (std::uint32_t cell = 0; cell < cells; ++cell) {
    const std::uint64_t id = static_cast<std::uint64_t>(top_layer) * cells + cell;
    seen[id] = 1;
    queue.push_back(id);
  }
  auto visit = [&](std::int64_t layer, std::uint32_t cell) {
    const std::uint64_t id = static_cast<std::uint64_t>(layer) * cells + cell;
    if (seen[id]) return;
    seen[id] = 1;
    if (trace.visited(cell, slab.z_min + layer)) return;
    queue.push_back(id);
  };
  for (std::size_t head = 0; head < queue.size(); ++head) {
    const std::uint64_t id = queue[head];
    const auto layer = static_cast<std::int64_t>(id / cells);
    const auto cell = static_cast<std::uint32_t>(id % cells);
    if (layer == 0) return false;
    for (int a = 0; a < cyl.dim(); ++a) {
      visit(layer, cyl.shift_cell(cell, a, 1));
      visit(layer, cyl.shift_cell(cell, a, -1));
    }
    visit(layer - 1, cell);
    if (layer + 1 < height) visit(layer + 1, cell);
  }
  return true;
}

bool is_disconnecting(const Cylinder& cyl, std::span<const CylinderPoint> sites) {
  const FirstHitIndex idx = index_of(cyl, sites);
  return is_disconnecting(TraceView(cyl, idx, 0));
}

DisconnectResult disconnection_time(const WalkConfig& config, const DisconnectOptions& options) {
  if (options.growth < 0) throw std::invalid_argument("checkpoint growth must be >= 0");
  if (config.index_window) throw std::invalid_argument("disconnection needs the unrestricted first-hit index");
  Walk walk(config);
  const Cylinder& cyl = walk.cylinder();
  const std::uint64_t cadence = options.cadence ? options.cadence : cyl.cells();
  const FirstHitIndex& idx = walk.trajectory().visited();
  DisconnectResult out;

  auto test = [&](std::uint64_t n) {
    ++out.checks;
    return is_disconnecting(TraceView(cyl, idx, n));
  };
  // last_negative < first disconnecting time <= n
  auto search = [&](std::int64_t last_negative, std::uint64_t n) {
    const auto all = idx.all_lines_hit_at();
    if (all && static_cast<std::int64_t>(*all) - 1 > last_negative) last_negative = static_cast<std::int64_t>(*all) - 1;
    std::uint64_t lo = static_cast<std::uint64_t>(last_negative + 1);
    std::uint64_t hi = n;
    while (lo < hi) {
      const std::uint64_t mid = lo + (hi - lo) / 2;
      if (test(mid)) {
        hi = mid;
      } else {
        lo = mid + 1;
      }
    }
    return hi;
  };

  std::int64_t last_negative = -1;
  if (test(0)) {
    out.time = 0;
    return out;
  }
  last_negative = 0;
  std::uint64_t next_check = cadence;
  while (true) {
    const bool capped = walk.advance() == StepStatus::CapHit;
    const std::uint64_t n = walk.time();
    out.steps = n;
    if (!capped && n < next_check) continue;
    const auto all = idx.all_lines_hit_at();
    if (all && *all <= n && test(n)) {
      out.time = search(last_negative, n);
      return out;
    }
    if (capped) return out;
    last_negative = static_cast<std::int64_t>(n);
    const auto grown = static_cast<std::uint64_t>(options.growth * static_cast<double>(n));
    next_check = n + std::max(cadence, grown);
  }
}

std::int64_t log_segment_length(double K, int N) {
  if (K < 0) throw std::invalid_argument("K must be >= 0");
  if (N < 1) throw std::invalid_argument("N must be >= 1");
  return static_cast<std::int64_t>(std::floor(K * std::log(static_cast<double>(N))));
}

int offset_count(int N) {
  if (N < 1) throw std::invalid_argument("N must be >= 1");
  int i = 0;
  while (static_cast<std::int64_t>(i) * i < N) ++i;
  return i;
}

namespace {

/// Vacancy of the heights [lo, hi] over the whole cross-section.
struct VacancyGrid {
  std::int64_t lo = 0;
  std::int64_t hi = -1;
  std::uint32_t cells = 0;
  std::vector<std::uint8_t> vacant;

  VacancyGrid(const TraceView& trace, std::int64_t lo_, std::int64_t hi_)
      : lo(lo_), hi(hi_), cells(trace.cylinder().cells()) {
    vacant.resize(static_cast<std::size_t>(hi - lo + 1) * cells);
    for (std::int64_t z = lo; z <= hi; ++z) {
      for (std::uint32_t c = 0; c < cells; ++c) vacant[offset(c, z)] = trace.visited(c, z) ? 0 : 1;
    }
  }
  std::size_t offset(std::uint32_t cell, std::int64_t z) const {
    return static_cast<std::size_t>(z - lo) * cells + cell;
  }
  bool at(std::uint32_t cell, std::int64_t z) const { return vacant[offset(cell, z)] != 0; }
};

/// run[x] = min(cap, number of consecutive vacant sites x, x + e, x + 2e, ...).
/// Torus directions wrap around; vertical runs stop at the grid boundary.
void vacant_runs(const Cylinder& cyl, const VacancyGrid& grid, int direction, std::uint16_t cap,
                 std::vector<std::uint16_t>& run) {
  run.assign(grid.vacant.size(), 0);
  const int axis = direction_axis(direction);
  const int sign = direction_sign(direction);
  const std::uint32_t cells = grid.cells;
  if (axis == cyl.vertical_axis()) {
    const std::int64_t first = sign > 0 ? grid.hi : grid.lo;
    const std::int64_t last = sign > 0 ? grid.lo : grid.hi;
    for (std::uint32_t c = 0; c < cells; ++c) {
      std::uint16_t prev = 0;
      for (std::int64_t z = first;; z -= sign) {
        const std::size_t o = grid.offset(c, z);
        prev = grid.vacant[o] ? static_cast<std::uint16_t>(std::min<int>(cap, prev + 1)) : 0;
        run[o] = prev;
        if (z == last) break;
      }
    }
    return;
  }
  const int N = cyl.side();
  const std::uint32_t stride = cyl.stride(axis);
  std::vector<std::size_t> line(static_cast<std::size_t>(N));
  for (std::int64_t z = grid.lo; z <= grid.hi; ++z) {
    for (std::uint32_t base = 0; base < cells; ++base) {
      if (cyl.residue(base, axis) != 0) continue;
      int blocked = -1;
      for (int k = 0; k < N; ++k) {
        line[static_cast<std::size_t>(k)] = grid.offset(base + static_cast<std::uint32_t>(k) * stride, z);
        if (!grid.vacant[line[static_cast<std::size_t>(k)]]) blocked = k;
      }
      if (blocked < 0) {
        for (int k = 0; k < N; ++k) run[line[static_cast<std::size_t>(k)]] = cap;
        continue;
      }
      // Walk against the direction starting from a blocked site.
      std::uint16_t prev = 0;
      for (int step = 1; step < N; ++step) {
        const int k = ((blocked - sign * step) % N + N) % N;
        const std::size_t o = line[static_cast<std::size_t>(k)];
        prev = grid.vacant[o] ? static_cast<std::uint16_t>(std::min<int>(cap, prev + 1)) : 0;
        run[o] = prev;
      }
    }
  }
}

std::uint16_t checked_cap(std::int64_t sites) {
  if (sites < 1 || sites > std::numeric_limits<std::uint16_t>::max()) {
    throw std::invalid_argument("segment length out of range");
  }
  return static_cast<std::uint16_t>(sites);
}

}  // namespace

std::optional<int> SegmentCensus::at(Site anchor, int direction) const {
  const auto it = std::find(directions.begin(), directions.end(), direction);
  if (it == directions.end()) throw std::invalid_argument("direction not part of the census");
  const std::int64_t layer = anchor.z - z_lo;
  const std::size_t k = static_cast<std::size_t>(it - directions.begin());
  const std::size_t i = (static_cast<std::size_t>(layer) * cells + anchor.cell) * directions.size() + k;
  if (layer < 0 || i >= first_offset.size()) throw std::out_of_range("anchor outside C_j");
  if (first_offset[i] < 0) return std::nullopt;
  return first_offset[i];
}

VResult check_V(const TraceView& trace, double K, std::int64_t j, bool signed_directions) {
  const Cylinder& cyl = trace.cylinder();
  const int N = cyl.side();
  const HeightRange c = block_heights(BlockKind::C, j, N);
  const std::int64_t L = log_segment_length(K, N);
  const int offsets = offset_count(N);
  const std::uint16_t cap = checked_cap(L + 1);
  const std::int64_t reach = offsets - 1 + L + 1;
  const VacancyGrid grid(trace, c.lo - reach, c.hi + reach);

  VResult out;
  SegmentCensus& census = out.census;
  census.z_lo = c.lo;
  census.cells = cyl.cells();
  census.segment_length = L;
  census.offsets = offsets;
  for (int dir = 0; dir < cyl.directions(); ++dir) {
    if (signed_directions || direction_sign(dir) > 0) census.directions.push_back(dir);
  }
  const std::size_t ndir = census.directions.size();
  census.first_offset.assign(static_cast<std::size_t>(c.size()) * cyl.cells() * ndir, -1);

  std::vector<std::uint16_t> run;
  for (std::size_t k = 0; k < ndir; ++k) {
    const int dir = census.directions[k];
    vacant_runs(cyl, grid, dir, cap, run);
    const int axis = direction_axis(dir);
    const int sign = direction_sign(dir);
    const bool vertical = axis == cyl.vertical_axis();
    for (std::int64_t z = c.lo; z <= c.hi; ++z) {
      for (std::uint32_t cell = 0; cell < cyl.cells(); ++cell) {
        std::int16_t found = -1;
        for (int i = 0; i < offsets; ++i) {
          const std::uint32_t yc = vertical ? cell : cyl.shift_cell(cell, axis, sign * i);
          const std::int64_t yz = vertical ? z + sign * i : z;
          if (run[grid.offset(yc, yz)] >= cap) {
            found = static_cast<std::int16_t>(i);
            break;
          }
        }
        const std::size_t slot = (static_cast<std::size_t>(z - c.lo) * cyl.cells() + cell) * ndir + k;
        census.first_offset[slot] = found;
        if (found < 0) ++census.failures;
      }
    }
  }
  out.holds = census.failures == 0;
  return out;
}

namespace {

/// Number of vacant components of F cap C_j with diameter >= D.
int large_components(const TraceView& trace, const LatticePlane& plane, const HeightRange& c, std::int64_t D) {
  const Cylinder& cyl = trace.cylinder();
  const int N = cyl.side();
  const int a1 = plane.axes[0];
  const int a2 = plane.axes[1];
  const bool vertical = a2 == cyl.vertical_axis();
  const std::uint32_t base = cyl.pack(plane.base).cell;
  const int nu = N;
  const int nv = vertical ? static_cast<int>(c.size()) : N;
  const std::uint32_t su = cyl.stride(a1);
  const std::uint32_t sv = vertical ? 0 : cyl.stride(a2);

  auto site_vacant = [&](int u, int v) {
    const std::uint32_t cell = base + static_cast<std::uint32_t>(u) * su + static_cast<std::uint32_t>(v) * sv;
    const std::int64_t z = vertical ? c.lo + v : plane.base.z;
    return !trace.visited(cell, z);
  };

  std::vector<std::int32_t> comp(static_cast<std::size_t>(nu) * static_cast<std::size_t>(nv), -1);
  std::vector<std::int32_t> u_mark(static_cast<std::size_t>(N), -1);
  std::vector<std::int32_t> v_mark(static_cast<std::size_t>(N), -1);
  std::vector<std::pair<int, int>> stack;
  std::int32_t next = 0;
  int large = 0;
  const std::int64_t half = N / 2;
  for (int u0 = 0; u0 < nu; ++u0) {
    for (int v0 = 0; v0 < nv; ++v0) {
      const std::size_t id0 = static_cast<std::size_t>(v0) * nu + u0;
      if (comp[id0] >= 0 || !site_vacant(u0, v0)) continue;
      const std::int32_t label = next++;
      comp[id0] = label;
      stack.assign(1, {u0, v0});
      std::int64_t ku = 0, kv = 0;
      int vmin = v0, vmax = v0;
      while (!stack.empty()) {
        auto [u, v] = stack.back();
        stack.pop_back();
        if (u_mark[static_cast<std::size_t>(u)] != label) {
          u_mark[static_cast<std::size_t>(u)] = label;
          ++ku;
        }
        if (!vertical && v_mark[static_cast<std::size_t>(v)] != label) {
          v_mark[static_cast<std::size_t>(v)] = label;
          ++kv;
        }
        vmin = std::min(vmin, v);
        vmax = std::max(vmax, v);
        auto push = [&](int nu_, int nv_) {
          const std::size_t id = static_cast<std::size_t>(nv_) * nu + nu_;
          if (comp[id] >= 0 || !site_vacant(nu_, nv_)) return;
          comp[id] = label;
          stack.emplace_back(nu_, nv_);
        };
        push((u + 1) % N, v);
        push((u + N - 1) % N, v);
        if (vertical) {
          if (v + 1 < nv) push(u, v + 1);
          if (v > 0) push(u, v - 1);
        } else {
          push(u, (v + 1) % N);
          push(u, (v + N - 1) % N);
        }
      }
      // A connected set projects onto an arc of k residues; its extent
      // along a torus axis is then min(k - 1, N / 2).
      const std::int64_t du = std::min(ku - 1, half);
      const std::int64_t dv = vertical ? vmax - vmin : std::min(kv - 1, half);
      if (std::max(du, dv) >= D && ++large > 1) return large;
    }
  }
  return large;
}

}  // namespace

UResult check_U(const TraceView& trace, double K, std::int64_t j, const UOptions& options) {
  const Cylinder& cyl = trace.cylinder();
  const int N = cyl.side();
  const HeightRange c = block_heights(BlockKind::C, j, N);
  const std::int64_t D = log_segment_length(K, N);
  UResult out;
  auto inspect = [&](const LatticePlane& plane) {
    if (!out.holds) return;
    ++out.planes_checked;
    if (large_components(trace, plane, c, D) > 1) {
      out.holds = false;
      out.witness = plane;
    }
  };
  if (N <= options.full_enumeration_max_N) {
    cyl.for_each_plane(j, 2, inspect);
    return out;
  }
  out.sampled = true;
  const auto families = axis_subsets(cyl.dim() + 1, 2);
  Xoshiro256 rng = replica_stream(options.sample_seed, static_cast<std::uint64_t>(j) ^ 0x55ULL);
  for (std::size_t s = 0; s < options.sampled_planes && out.holds; ++s) {
    const auto& axes = families[static_cast<std::size_t>(rng.below(families.size()))];
    const Site p{static_cast<std::uint32_t>(rng.below(cyl.cells())),
                 static_cast<std::int32_t>(c.lo + static_cast<std::int64_t>(rng.below(static_cast<std::uint64_t>(c.size()))))};
    LatticePlane plane = cyl.plane_through(cyl.unpack(p), axes);
    if (axes.back() == cyl.vertical_axis()) plane.base.z = 0;
    inspect(plane);
  }
  return out;
}

GResult check_G(const TraceView& trace, double K, std::int64_t j, const UOptions& options, bool signed_directions) {
  GResult g;
  g.v = check_V(trace, K, j, signed_directions).holds;
  g.u = check_U(trace, K, j, options).holds;
  return g;
}

LinkageVerdict segment_linkage(const TraceView& trace, std::int64_t j, std::int64_t L0) {
  const Cylinder& cyl = trace.cylinder();
  const HeightRange c = block_heights(BlockKind::C, j, cyl.side());
  const std::uint16_t cap = checked_cap(L0 + 1);
  const VacancyGrid grid(trace, c.lo, c.hi);
  const std::uint32_t cells = cyl.cells();
  LinkageVerdict out;

  // Component labels of C_j minus the trace.
  std::vector<std::int32_t> label(grid.vacant.size(), -1);
  std::vector<std::pair<std::uint32_t, std::int64_t>> stack;
  std::int32_t next = 0;
  for (std::int64_t z = c.lo; z <= c.hi; ++z) {
    for (std::uint32_t cell = 0; cell < cells; ++cell) {
      if (!grid.at(cell, z) || label[grid.offset(cell, z)] >= 0) continue;
      const std::int32_t id = next++;
      label[grid.offset(cell, z)] = id;
      stack.assign(1, {cell, z});
      while (!stack.empty()) {
        auto [x, xz] = stack.back();
        stack.pop_back();
        auto push = [&](std::uint32_t y, std::int64_t yz) {
          if (!c.contains(yz) || !grid.at(y, yz) || label[grid.offset(y, yz)] >= 0) return;
          label[grid.offset(y, yz)] = id;
          stack.emplace_back(y, yz);
        };
        for (int a = 0; a < cyl.dim(); ++a) {
          push(cyl.shift_cell(x, a, 1), xz);
          push(cyl.shift_cell(x, a, -1), xz);
        }
        push(x, xz + 1);
        push(x, xz - 1);
      }
    }
  }

  std::vector<std::uint8_t> seen_label(static_cast<std::size_t>(next), 0);
  std::vector<std::uint16_t> run;
  for (int axis = 0; axis <= cyl.dim(); ++axis) {
    vacant_runs(cyl, grid, make_direction(axis, 1), cap, run);
    const bool vertical = axis == cyl.vertical_axis();
    if (vertical) {
      for (std::uint32_t cell = 0; cell < cells; ++cell) {
        bool any = false;
        for (std::int64_t z = c.lo; z <= c.hi && !any; ++z) any = run[grid.offset(cell, z)] >= cap;
        if (!any) out.every_line_has_segment = false;
      }
    } else {
      for (std::int64_t z = c.lo; z <= c.hi; ++z) {
        for (std::uint32_t base = 0; base < cells; ++base) {
          if (cyl.residue(base, axis) != 0) continue;
          bool any = false;
          for (int k = 0; k < cyl.side() && !any; ++k) {
            any = run[grid.offset(base + static_cast<std::uint32_t>(k) * cyl.stride(axis), z)] >= cap;
          }
          if (!any) out.every_line_has_segment = false;
        }
      }
    }
    for (std::size_t o = 0; o < run.size(); ++o) {
      if (run[o] < cap) continue;
      ++out.vacant_segments;
      auto& s = seen_label[static_cast<std::size_t>(label[o])];
      if (!s) {
        s = 1;
        ++out.segment_components;
      }
    }
  }
  out.segments_connected = out.segment_components <= 1;
  return out;
}

bool linkage_hypotheses_hold(int N, std::int64_t L0) {
  const HeightRange c = block_heights(BlockKind::C, 0, N);
  return L0 < N / 2 && offset_count(N) - 1 + L0 <= c.hi - c.lo;
}

EventOutcome check_V_at(const Cylinder& cyl, const FirstHitIndex& hits, const ExcursionLedger& ledger, double K,
                        double t, bool signed_directions) {
  EventOutcome out;
  out.n = ledger.departure_time(t);
  if (!out.n) return out;
  out.value = check_V(TraceView(cyl, hits, *out.n), K, ledger.level, signed_directions).holds;
  return out;
}

EventOutcome check_U_at(const Cylinder& cyl, const FirstHitIndex& hits, const ExcursionLedger& ledger, double K,
                        double t, UTiming timing, const UOptions& options) {
  EventOutcome out;
  out.n = ledger.departure_time(t);
  if (!out.n) return out;
  const auto k = static_cast<std::int64_t>(std::floor(t));
  const std::int64_t first = (timing == UTiming::FinalOnly || k == 0) ? k : 1;
  for (std::int64_t i = first; i <= k; ++i) {
    const auto n = ledger.departure_time(static_cast<double>(i));
    if (!check_U(TraceView(cyl, hits, *n), K, ledger.level, options).holds) {
      out.value = false;
      return out;
    }
  }
  out.value = true;
  return out;
}

}  // namespace cylwalk
