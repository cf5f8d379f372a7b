#include <doctest.h>

#include <set>
#include <vector>

#include "cylwalk/rng.hpp"
#include "cylwalk/vacant.hpp"
#include "oracles.hpp"

using namespace cylwalk;

namespace {

std::set<oracle::P> to_oracle(const std::vector<CylinderPoint>& v) {
  std::set<oracle::P> s;
  for (auto& p : v) s.insert(oracle::P{p.torus, static_cast<long>(p.z)});
  return s;
}

std::vector<CylinderPoint> random_set(const Cylinder& cyl, std::int64_t lo, std::int64_t hi, double density,
                                      Xoshiro256& rng) {
  std::vector<CylinderPoint> out;
  for (std::int64_t z = lo; z <= hi; ++z) {
    for (std::uint32_t cell = 0; cell < cyl.cells(); ++cell) {
      if (rng.uniform() < density) out.push_back(cyl.unpack(Site{cell, static_cast<std::int32_t>(z)}));
    }
  }
  return out;
}

std::vector<CylinderPoint> slab(const Cylinder& cyl, std::int64_t z) {
  std::vector<CylinderPoint> out;
  for (std::uint32_t cell = 0; cell < cyl.cells(); ++cell) out.push_back(cyl.unpack(Site{cell, static_cast<std::int32_t>(z)}));
  return out;
}

}  // namespace

TEST_CASE("is_disconnecting on slabs and holes") {
  for (int d = 1; d <= 3; ++d) {
    Cylinder cyl(d, 4);
    std::vector<CylinderPoint> none;
    CHECK(!is_disconnecting(cyl, none));
    auto s = slab(cyl, 0);
    CHECK(is_disconnecting(cyl, s));
    for (std::size_t hole = 0; hole < s.size(); hole += 5) {
      auto t = s;
      t.erase(t.begin() + static_cast<std::ptrdiff_t>(hole));
      CHECK(!is_disconnecting(cyl, t));
    }
    // a staircase still cuts: half the cells at z=0, the rest at z=1
    std::vector<CylinderPoint> stairs;
    for (std::uint32_t cell = 0; cell < cyl.cells(); ++cell) {
      stairs.push_back(cyl.unpack(Site{cell, cyl.residue(cell, 0) < 2 ? 0 : 1}));
    }
    CHECK(is_disconnecting(cyl, stairs));
    stairs.pop_back();
    CHECK(!is_disconnecting(cyl, stairs));
  }
}

TEST_CASE("is_disconnecting matches brute force on every small set") {
  struct Case {
    int d, N, layers;
  };
  for (Case k : {Case{1, 2, 2}, Case{1, 3, 3}, Case{2, 2, 2}, Case{2, 3, 2}}) {
    Cylinder cyl(k.d, k.N);
    const std::uint32_t cells = cyl.cells();
    const std::uint32_t sites = cells * static_cast<std::uint32_t>(k.layers);
    const std::uint32_t Nd = cells;
    std::uint64_t positives = 0;
    for (std::uint64_t mask = 0; mask < (1ull << sites); ++mask) {
      std::vector<CylinderPoint> S;
      std::vector<char> line_hit(cells, 0);
      for (std::uint32_t b = 0; b < sites; ++b) {
        if (!(mask >> b & 1)) continue;
        const Site s{b % cells, static_cast<std::int32_t>(b / cells)};
        S.push_back(cyl.unpack(s));
        line_hit[s.cell] = 1;
      }
      const bool got = is_disconnecting(cyl, S);
      const bool want = oracle::disconnects(k.d, k.N, to_oracle(S));
      REQUIRE(got == want);
      if (got) {
        ++positives;
        // min cut: every vertical line is hit, so |S| >= N^d
        CHECK(S.size() >= Nd);
        for (char h : line_hit) CHECK(h);
      }
    }
    CHECK(positives > 0);
  }
}

TEST_CASE("is_disconnecting is monotone under inclusion") {
  Xoshiro256 rng = replica_stream(404, 0);
  for (int trial = 0; trial < 300; ++trial) {
    const int d = 1 + static_cast<int>(rng.below(2));
    const int N = 3 + static_cast<int>(rng.below(3));
    Cylinder cyl(d, N);
    auto small = random_set(cyl, -2, 2, 0.3 + 0.4 * rng.uniform(), rng);
    auto big = small;
    for (auto& p : random_set(cyl, -2, 2, 0.3, rng)) big.push_back(p);
    if (is_disconnecting(cyl, small)) CHECK(is_disconnecting(cyl, big));
    CHECK(is_disconnecting(cyl, small) == oracle::disconnects(d, N, to_oracle(small)));
  }
}

TEST_CASE("component labels agree with breadth-first search") {
  Xoshiro256 rng = replica_stream(31, 0);
  for (int trial = 0; trial < 40; ++trial) {
    Cylinder cyl(2, 5);
    auto S = random_set(cyl, -3, 3, 0.45, rng);
    FirstHitIndex idx = index_of(cyl, S);
    TraceView view(cyl, idx, 0);
    auto lab = label_components(make_slab(view));
    const auto so = to_oracle(S);
    // BFS over the same slab
    std::map<oracle::P, int> comp;
    int next = 0;
    for (std::int64_t z = lab.z_min; z <= lab.z_max; ++z) {
      for (std::uint32_t cell = 0; cell < cyl.cells(); ++cell) {
        const auto cp = cyl.unpack(Site{cell, static_cast<std::int32_t>(z)});
        oracle::P p{cp.torus, static_cast<long>(z)};
        if (so.count(p) || comp.count(p)) continue;
        std::vector<oracle::P> stack{p};
        comp[p] = next;
        while (!stack.empty()) {
          auto c = stack.back();
          stack.pop_back();
          for (auto& n : oracle::nbrs(c, 5)) {
            if (n.z < lab.z_min || n.z > lab.z_max || so.count(n) || comp.count(n)) continue;
            comp[n] = next;
            stack.push_back(n);
          }
        }
        ++next;
      }
    }
    // the library also ties the top and bottom layers to the two ends,
    // which merges nothing when the padding layers are vacant
    CHECK(lab.components == next);
    std::map<int, int> to_lib;
    for (auto& [p, c] : comp) {
      CylinderPoint cp{p.x, p.z};
      const int l = lab.label_of(cyl.pack(cp));
      auto [it, fresh] = to_lib.emplace(c, l);
      CHECK(it->second == l);
    }
    CHECK(lab.separated() == oracle::disconnects(2, 5, so));
  }
}

TEST_CASE("disconnection time: checkpoints agree with per-step detection") {
  for (std::uint64_t r = 0; r < 50; ++r) {
    WalkConfig cfg;
    cfg.d = 1;
    cfg.N = 4;
    cfg.seed = 2024;
    cfg.stream = r;
    cfg.record_path = true;
    auto a = disconnection_time(cfg, {1, 0});
    auto b = disconnection_time(cfg, {1000, 0});
    auto c = disconnection_time(cfg, {0, 0.125});
    REQUIRE(a.time);
    CHECK(b.time == a.time);
    CHECK(c.time == a.time);
    CHECK(*a.time >= 3);

    // replay the same walk and test every prefix with the oracle
    Walk w(cfg);
    std::set<oracle::P> S{oracle::P{w.cylinder().unpack(w.position()).torus, w.position().z}};
    std::uint64_t first = 0;
    while (!oracle::disconnects(1, 4, S)) {
      w.advance();
      const auto p = w.cylinder().unpack(w.position());
      S.insert(oracle::P{p.torus, static_cast<long>(p.z)});
      first = w.time();
    }
    CHECK(*a.time == first);
  }
}

TEST_CASE("disconnection time respects the min-cut bound") {
  for (int d = 1; d <= 2; ++d) {
    for (int N : {3, 5}) {
      for (std::uint64_t r = 0; r < 20; ++r) {
        WalkConfig cfg;
        cfg.d = d;
        cfg.N = N;
        cfg.seed = 9;
        cfg.stream = r;
        cfg.record_path = false;
        auto res = disconnection_time(cfg, {0, 0.125});
        REQUIRE(res.time);
        std::uint64_t Nd = 1;
        for (int i = 0; i < d; ++i) Nd *= static_cast<std::uint64_t>(N);
        CHECK(*res.time >= Nd - 1);
      }
    }
  }
}

TEST_CASE("disconnection time censors at the step cap") {
  WalkConfig cfg;
  cfg.d = 2;
  cfg.N = 8;
  cfg.seed = 1;
  cfg.step_cap = 50;
  cfg.record_path = false;
  auto res = disconnection_time(cfg, {});
  CHECK(!res.time);
  CHECK(res.steps <= 50);
}

TEST_CASE("segment length and offsets") {
  CHECK(offset_count(16) == 4);
  CHECK(offset_count(17) == 5);
  CHECK(offset_count(8) == 3);
  CHECK(log_segment_length(1, 16) == 2);
  CHECK(log_segment_length(2.5, 100) == 11);
}

TEST_CASE("event V: trivial cases") {
  for (int d = 1; d <= 2; ++d) {
    Cylinder cyl(d, 16);
    std::vector<CylinderPoint> one{cyl.unpack(Site{0, 0})};
    FirstHitIndex idx = index_of(cyl, one);
    CHECK(check_V(TraceView(cyl, idx, 0), 1.0, 0).holds);
  }
  // every other layer of C_0 visited blocks the vertical direction
  Cylinder cyl(1, 9);
  std::vector<CylinderPoint> even;
  const auto c = block_heights(BlockKind::C, 0, 9);
  for (std::int64_t z = c.lo; z <= c.hi; ++z) {
    if (z % 2 == 0) {
      for (auto& p : slab(cyl, z)) even.push_back(p);
    }
  }
  FirstHitIndex idx = index_of(cyl, even);
  auto v = check_V(TraceView(cyl, idx, 0), 1.0, 0);
  CHECK(!v.holds);
  CHECK(!v.census.at(Site{0, 0}, make_direction(1, 1)));
  CHECK(!v.census.at(Site{0, 1}, make_direction(1, -1)));
}

TEST_CASE("event V matches its definition on random traces") {
  Xoshiro256 rng = replica_stream(55, 0);
  int holds = 0, fails = 0;
  for (int trial = 0; trial < 120; ++trial) {
    const int d = 1 + static_cast<int>(rng.below(2));
    const int N = d == 1 ? 9 + static_cast<int>(rng.below(10)) : 6 + static_cast<int>(rng.below(4));
    const double K = 0.5 + rng.uniform();
    const std::int64_t j = static_cast<std::int64_t>(rng.below(3)) - 1;
    const double density = 0.01 + 0.1 * rng.uniform();
    Cylinder cyl(d, N);
    auto S = random_set(cyl, j * N - 2 * N, j * N + 2 * N, density, rng);
    FirstHitIndex idx = index_of(cyl, S);
    const auto so = to_oracle(S);
    for (bool signed_dirs : {true, false}) {
      const bool got = check_V(TraceView(cyl, idx, 0), K, j, signed_dirs).holds;
      const bool want = oracle::event_V(d, N, so, K, j, signed_dirs);
      CHECK(got == want);
      (want ? holds : fails)++;
    }
  }
  CHECK(holds > 0);
  CHECK(fails > 0);
}

TEST_CASE("event U: trivial cases") {
  Cylinder cyl(2, 8);
  FirstHitIndex empty(cyl.cells());
  CHECK(check_U(TraceView(cyl, empty, 0), 1.0, 0).holds);
  // horizontal line across the plane spanned by axis 0 and the vertical axis
  std::vector<CylinderPoint> cut;
  for (int x = 0; x < 8; ++x) cut.push_back(CylinderPoint{{x, 0}, 0});
  FirstHitIndex idx = index_of(cyl, cut);
  auto u = check_U(TraceView(cyl, idx, 0), 1.0, 0);
  CHECK(!u.holds);
  REQUIRE(u.witness);
}

TEST_CASE("event U matches its definition on random traces") {
  Xoshiro256 rng = replica_stream(56, 0);
  int holds = 0, fails = 0;
  for (int trial = 0; trial < 60; ++trial) {
    const int d = 1 + static_cast<int>(rng.below(2));
    const int N = 4 + static_cast<int>(rng.below(4));
    const double K = 0.6 + rng.uniform();
    const double density = rng.uniform() < 0.5 ? 0.01 : 0.15 + 0.3 * rng.uniform();
    Cylinder cyl(d, N);
    auto S = random_set(cyl, -2 * N, 2 * N, density, rng);
    FirstHitIndex idx = index_of(cyl, S);
    const bool got = check_U(TraceView(cyl, idx, 0), K, 0).holds;
    const bool want = oracle::event_U(d, N, to_oracle(S), K, 0);
    CHECK(got == want);
    (want ? holds : fails)++;
  }
  CHECK(holds > 0);
  CHECK(fails > 0);
}

TEST_CASE("event U holds on sparse traces") {
  Xoshiro256 rng = replica_stream(57, 0);
  for (int trial = 0; trial < 20; ++trial) {
    Cylinder cyl(3, 8);
    auto S = random_set(cyl, -6, 6, 0.01, rng);
    FirstHitIndex idx = index_of(cyl, S);
    CHECK(check_U(TraceView(cyl, idx, 0), 1.0, 0).holds);
  }
}

TEST_CASE("event U with sampled planes only reports failures it saw") {
  Xoshiro256 rng = replica_stream(58, 0);
  for (int trial = 0; trial < 20; ++trial) {
    Cylinder cyl(2, 6);
    auto S = random_set(cyl, -12, 12, 0.3, rng);
    FirstHitIndex idx = index_of(cyl, S);
    UOptions full, sampled;
    sampled.full_enumeration_max_N = 2;
    sampled.sampled_planes = 30;
    sampled.sample_seed = static_cast<std::uint64_t>(trial);
    auto f = check_U(TraceView(cyl, idx, 0), 1.0, 0, full);
    auto s = check_U(TraceView(cyl, idx, 0), 1.0, 0, sampled);
    CHECK(s.sampled);
    CHECK(!f.sampled);
    if (!s.holds) CHECK(!f.holds);
  }
}

TEST_CASE("event G is the conjunction") {
  Xoshiro256 rng = replica_stream(59, 0);
  bool saw_true = false;
  for (int trial = 0; trial < 40; ++trial) {
    Cylinder cyl(1, 16);
    auto S = random_set(cyl, -32, 32, trial % 2 ? 0.002 : 0.1, rng);
    FirstHitIndex idx = index_of(cyl, S);
    TraceView view(cyl, idx, 0);
    auto g = check_G(view, 1.0, 0);
    CHECK(g.v == check_V(view, 1.0, 0).holds);
    CHECK(g.u == check_U(view, 1.0, 0).holds);
    CHECK(g.holds() == (g.v && g.u));
    if (!g.v) CHECK(!g.holds());
    saw_true = saw_true || g.holds();
  }
  CHECK(saw_true);
}

TEST_CASE("segment linkage: trivial cases") {
  Cylinder cyl(2, 8);
  FirstHitIndex empty(cyl.cells());
  auto all = segment_linkage(TraceView(cyl, empty, 0), 0, 2);
  CHECK(all.holds());
  auto s = slab(cyl, 0);
  FirstHitIndex idx = index_of(cyl, s);
  auto cut = segment_linkage(TraceView(cyl, idx, 0), 0, 2);
  CHECK(!cut.every_line_has_segment);  // the horizontal lines at z=0 are covered
  CHECK(!cut.segments_connected);
  CHECK(cut.segment_components == 2);
}

TEST_CASE("segment linkage matches its definition on random traces") {
  Xoshiro256 rng = replica_stream(60, 0);
  for (int trial = 0; trial < 80; ++trial) {
    const int d = 1 + static_cast<int>(rng.below(2));
    const int N = 5 + static_cast<int>(rng.below(5));
    const std::int64_t L0 = 1 + static_cast<std::int64_t>(rng.below(2));
    const double density = 0.05 + 0.4 * rng.uniform();
    Cylinder cyl(d, N);
    auto S = random_set(cyl, -2 * N, 2 * N, density, rng);
    FirstHitIndex idx = index_of(cyl, S);
    auto got = segment_linkage(TraceView(cyl, idx, 0), 0, L0);
    auto want = oracle::linkage(d, N, to_oracle(S), 0, L0);
    CHECK(got.every_line_has_segment == want.lines);
    CHECK(got.segments_connected == want.connected);
  }
}

TEST_CASE("events at excursion clocks") {
  for (std::uint64_t r = 0; r < 10; ++r) {
    WalkConfig cfg;
    cfg.d = 2;
    cfg.N = 6;
    cfg.seed = 3;
    cfg.stream = r;
    cfg.record_path = false;
    Walk w(cfg);
    ExcursionTracker tr(0, 6, 3);
    tr.feed(0, w.position().z);
    while (!tr.complete()) {
      w.advance();
      tr.feed(w.time(), w.position().z);
    }
    const auto& L = tr.ledger();
    const auto& hits = w.trajectory().visited();
    const Cylinder& cyl = w.cylinder();
    auto v = check_V_at(cyl, hits, L, 1.0, 3.5);
    REQUIRE(v.n);
    CHECK(*v.n == L.departures[2]);
    CHECK(*v.value == check_V(TraceView(cyl, hits, *v.n), 1.0, 0).holds);
    auto fin = check_U_at(cyl, hits, L, 1.0, 3, UTiming::FinalOnly);
    CHECK(*fin.value == check_U(TraceView(cyl, hits, L.departures[2]), 1.0, 0).holds);
    auto each = check_U_at(cyl, hits, L, 1.0, 3, UTiming::EveryBoundary);
    bool all = true;
    for (auto n : L.departures) all = all && check_U(TraceView(cyl, hits, n), 1.0, 0).holds;
    CHECK(*each.value == all);
    CHECK(!check_V_at(cyl, hits, L, 1.0, 4).value);
    auto zero = check_U_at(cyl, hits, L, 1.0, 0.5);
    CHECK(zero.n == 0u);
  }
}
