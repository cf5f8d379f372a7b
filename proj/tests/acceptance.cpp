// Acceptance suite. Prints one line per criterion and exits nonzero if any
// criterion fails. Pass criterion numbers as arguments to run a subset.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "cylwalk/config.hpp"
#include "cylwalk/criticality.hpp"
#include "cylwalk/emit.hpp"
#include "cylwalk/experiments.hpp"
#include "cylwalk/return_probability.hpp"
#include "cylwalk/vacant.hpp"

using namespace cylwalk;
using nlohmann::json;

namespace {

// Pinned tolerances.
constexpr double kQAbsError = 1e-4;
constexpr std::uint64_t kMcReplicas = 1000000;
constexpr std::uint64_t kMcHorizon = 1000000;
constexpr double kAsymptoticTol = 0.1;
constexpr int kPeierlsMax = 8;
constexpr double kSlopeTol1 = 0.3;
constexpr double kSlopeTol2 = 0.5;
constexpr double kTightnessTol = 0.15;
constexpr double kKsAlpha = 0.01;
constexpr std::uint64_t kQnReplicas = 100000;
constexpr double kQnSigmas = 2.0;

struct Outcome {
  bool pass = true;
  std::ostringstream detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail << " [failed: " << what << "]";
    }
  }
};

std::string scratch_dir(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() / ("cylwalk_acceptance_" + name);
  std::filesystem::remove_all(p);
  return p.string();
}

Config make_config(const std::string& name, const std::string& body) {
  Config cfg = Config::parse(body);
  cfg.set("experiment.out_dir", scratch_dir(name));
  return cfg;
}

bool all_assertions(const ResultRecord& rec, Outcome& out) {
  bool ok = true;
  for (const auto& [k, v] : rec.assertions) {
    if (!v) {
      out.require(false, rec.experiment + " assertion " + k);
      ok = false;
    }
  }
  return ok;
}

std::vector<CylinderPoint> level(const Cylinder& cyl, std::int64_t z) {
  std::vector<CylinderPoint> out;
  for (std::uint32_t c = 0; c < cyl.cells(); ++c) out.push_back(cyl.unpack(Site{c, static_cast<std::int32_t>(z)}));
  return out;
}

bool disconnects(const Cylinder& cyl, const std::vector<CylinderPoint>& s) { return is_disconnecting(cyl, s); }

// 1 -------------------------------------------------------------------------
void threshold_reproduction(Outcome& out) {
  const ThresholdScan scan = threshold_scan(4, 30, 1e-10);
  double worst = 0;
  for (const auto& r : scan.reports) {
    worst = std::max(worst, r.q_used.abs_error);
    out.require(r.holds == (r.d >= 17), "holds at d=" + std::to_string(r.d));
  }
  out.require(worst <= kQAbsError, "q abs_error");
  out.require(scan.minimal_holding == 17, "minimal d");
  out.detail << "minimal d=" << (scan.minimal_holding ? *scan.minimal_holding : -1) << ", max q error " << worst;
}

// 2 -------------------------------------------------------------------------
void return_probability(Outcome& out) {
  out.require(q_quadrature(1).value == 1.0 && q_quadrature(2).value == 1.0, "q(1) = q(2) = 1");
  const QEstimate q3 = q_quadrature(3);
  const QEstimate mc = q_monte_carlo(3, kMcHorizon, kMcReplicas, 20261016);
  // The truncated estimate can only fall short of q(3), by at most the bias bound.
  const double lo = mc.value - mc.abs_error - q3.abs_error;
  const double hi = mc.value + mc.abs_error + q3.abs_error + mc.truncation_bias;
  out.require(q3.value >= lo && q3.value <= hi, "q(3) inside the Monte Carlo band");
  const QEstimate q30 = q_quadrature(30);
  const double asym = std::abs(60 * q30.value - 1);
  out.require(asym <= kAsymptoticTol, "|2 nu q(nu) - 1| at nu = 30");
  out.detail << "q(3)=" << q3.value << " MC=" << mc.value << " band [" << lo << ", " << hi << "], |60 q(30) - 1|="
             << asym;
}

// 3 -------------------------------------------------------------------------
void peierls(Outcome& out) {
  out.require(star_saw_count(1) == 8, "a(1)");
  out.require(star_saw_count(2) == 56, "a(2)");
  double bound = 8;
  for (int n = 1; n <= kPeierlsMax; ++n, bound *= 7) {
    const auto a = star_saw_count(n);
    out.require(static_cast<double>(a) <= bound, "a(" + std::to_string(n) + ") bound");
    if (n == kPeierlsMax) out.detail << "a(" << n << ")=" << a << " <= " << bound;
  }
}

// 4 -------------------------------------------------------------------------
void disconnection(Outcome& out) {
  int constructions = 0;
  for (int d = 1; d <= 3; ++d) {
    for (int N : {3, 4, 6}) {
      Cylinder cyl(d, N);
      out.require(!disconnects(cyl, {}), "empty set");
      auto s = level(cyl, 0);
      out.require(disconnects(cyl, s), "full slab");
      for (std::size_t hole = 0; hole < s.size(); hole += 1 + s.size() / 7) {
        auto t = s;
        t.erase(t.begin() + static_cast<std::ptrdiff_t>(hole));
        out.require(!disconnects(cyl, t), "slab minus a site");
        ++constructions;
      }
      constructions += 2;
    }
  }

  // the min-cut bound on every simulated run
  std::uint64_t runs = 0;
  for (const char* body : {"[walk]\nd = 1\nN = 4,8,16\n", "[walk]\nd = 2\nN = 3,4,5,6\n", "[walk]\nd = 3\nN = 3\n"}) {
    auto rec = run_experiment("disconnect", make_config("c4", std::string("[experiment]\nreplicas = 100\nseed = 4\n") + body));
    out.require(rec.assertions.at("T_N_at_least_N^d-1"), "T_N >= N^d - 1");
    runs += rec.rows.size();
  }

  // checkpoint search against per-step detection
  int agree = 0;
  for (std::uint64_t r = 0; r < 50; ++r) {
    WalkConfig cfg;
    cfg.d = 1;
    cfg.N = 4;
    cfg.seed = 44;
    cfg.stream = r;
    const auto every = disconnection_time(cfg, {1, 0});
    const auto sparse = disconnection_time(cfg, {0, 0});
    const auto growing = disconnection_time(cfg, {0, 0.125});
    const auto coarse = disconnection_time(cfg, {1000, 0});
    agree += every.time && sparse.time == every.time && growing.time == every.time && coarse.time == every.time;
  }
  out.require(agree == 50, "checkpoint search equals per-step detection");
  out.detail << constructions << " constructions, " << runs << " runs over the min-cut bound, " << agree
             << "/50 checkpoint runs agree";
}

// 5 -------------------------------------------------------------------------
void scaling(Outcome& out) {
  struct Case {
    const char* body;
    double ref, tol;
  };
  for (Case c : {Case{"[experiment]\nreplicas = 200\nseed = 5\n[walk]\nd = 1\nN = 8,16,32,64\n", 2, kSlopeTol1},
                 Case{"[experiment]\nreplicas = 100\nseed = 5\n[walk]\nd = 2\nN = 4,6,8,10\n", 4, kSlopeTol2}}) {
    auto rec = run_experiment("scaling", make_config("c5", c.body));
    all_assertions(rec, out);
    const double slope = rec.summary["scaling"]["slope"];
    const auto& ci = rec.summary["scaling"]["ci95"];
    out.require(std::abs(slope - c.ref) <= c.tol, "slope at d=" + std::to_string(static_cast<int>(c.ref / 2)));
    out.require(rec.censored == 0, "no censored replicas");
    out.detail << "d=" << c.ref / 2 << " slope " << slope << " (ci95 " << ci["lo"].get<double>() << ".."
               << ci["hi"].get<double>() << ", target " << c.ref << "+-" << c.tol << ")  ";
  }
}

// 6 -------------------------------------------------------------------------
void tightness(Outcome& out) {
  auto rec = run_experiment(
      "disconnect", make_config("c6", "[experiment]\nreplicas = 2000\nseed = 6\n[walk]\nd = 2\nN = 6,8,10\n"));
  all_assertions(rec, out);
  for (const auto& e : rec.summary["ratio_cdf_sup_distance"]) {
    const double s = e["sup_distance"];
    out.require(s <= kTightnessTol, "sup distance");
    out.detail << "N=" << e["N_a"].get<int>() << " vs " << e["N_b"].get<int>() << ": " << s << "  ";
  }
}

// 7 -------------------------------------------------------------------------
void local_time(Outcome& out) {
  auto rec = run_experiment("localtime",
                            make_config("c7", "[experiment]\nreplicas = 10000\nseed = 7\n[walk]\nd = 2\nN = 5\n"
                                              "[localtime]\nk = 50,200,1000\nalpha = 0.01\n"));
  all_assertions(rec, out);
  for (const auto& e : rec.summary["per_k"]) {
    const double p = e["ks_L0"]["p"];
    out.require(p >= kKsAlpha, "KS at k=" + e["k"].dump());
    out.require(e["used"].get<std::uint64_t>() == 10000, "replicas used");
    out.detail << "k=" << e["k"] << " KS p=" << p << "  ";
  }
}

// 8 -------------------------------------------------------------------------
void qn_trend(Outcome& out) {
  const double q3 = q_quadrature(3).value;
  double prev = 2, prev_se = 0;
  for (int N : {8, 16, 32}) {
    const QNEstimate e = q_N_estimate(4, 2, N, kQnReplicas, 88);
    out.require(e.value <= q3 + kQnSigmas * e.std_error, "q_N <= q(3) + 2 SE at N=" + std::to_string(N));
    out.require(e.value <= prev + kQnSigmas * std::hypot(e.std_error, prev_se), "nonincreasing at N=" + std::to_string(N));
    prev = e.value;
    prev_se = e.std_error;
    out.detail << "N=" << N << ": " << e.value << " +- " << e.std_error << "  ";
  }
  out.detail << "(q(3)=" << q3 << ")";
}

// 9 -------------------------------------------------------------------------
void event_suite(Outcome& out) {
  {
    Cylinder cyl(2, 16);
    std::vector<CylinderPoint> origin{cyl.unpack(Site{0, 0})};
    FirstHitIndex idx = index_of(cyl, origin);
    out.require(check_V(TraceView(cyl, idx, 0), 1.0, 0).holds, "V with a single visited site");
  }
  Cylinder c1(1, 9);
  std::vector<CylinderPoint> even;
  const auto cj = block_heights(BlockKind::C, 0, 9);
  for (std::int64_t z = cj.lo; z <= cj.hi; ++z) {
    if (z % 2 == 0) {
      for (auto& p : level(c1, z)) even.push_back(p);
    }
  }
  FirstHitIndex even_idx = index_of(c1, even);
  const TraceView even_view(c1, even_idx, 0);
  out.require(!check_V(even_view, 1.0, 0).holds, "V on alternate layers");

  Cylinder c2(2, 8);
  FirstHitIndex empty(c2.cells());
  const TraceView empty_view(c2, empty, 0);
  out.require(check_U(empty_view, 1.0, 0).holds, "U on the empty trace");
  std::vector<CylinderPoint> line, two_lines;
  for (int x = 0; x < 8; ++x) {
    line.push_back(CylinderPoint{{x, 0}, 0});
    two_lines.push_back(CylinderPoint{{x, 0}, 0});
    two_lines.push_back(CylinderPoint{{x, 4}, 0});
  }
  FirstHitIndex line_idx = index_of(c2, line), two_idx = index_of(c2, two_lines);
  out.require(!check_U(TraceView(c2, line_idx, 0), 1.0, 0).holds, "U with a separating line");
  out.require(!check_U(TraceView(c2, two_idx, 0), 1.0, 0).holds, "U with two lines in a level plane");

  Cylinder c3(1, 16);
  FirstHitIndex none(c3.cells());
  out.require(check_G(TraceView(c3, none, 0), 1.0, 0).holds(), "G when V and U hold");
  out.require(!check_G(even_view, 1.0, 0).holds(), "G when V fails");

  out.require(segment_linkage(empty_view, 0, 2).holds(), "linkage on the empty trace");
  auto slab = level(c2, 0);
  FirstHitIndex slab_idx = index_of(c2, slab);
  out.require(!segment_linkage(TraceView(c2, slab_idx, 0), 0, 2).segments_connected, "linkage across a slab");

  auto rec = run_experiment("events", make_config("c9", "[experiment]\nreplicas = 40\nseed = 9\n[walk]\nd = 3\nN = 8,16\n"
                                                        "[events]\nK = 0.75\nu = 0.01,0.05\n"));
  all_assertions(rec, out);
  std::uint64_t g_runs = 0, checked = 0;
  for (const auto& c : rec.summary["cells"]) {
    out.require(c["linkage_hypotheses"].get<bool>(), "linkage hypotheses");
    checked += c["used"].get<std::uint64_t>();
    g_runs += static_cast<std::uint64_t>(std::llround(c["P_G"].get<double>() * c["used"].get<double>()));
  }
  out.detail << "trivial cases ok, " << checked << " simulated runs, " << g_runs << " with G, "
             << "G without linkage: 0 required";
}

// 10 ------------------------------------------------------------------------
void determinism(Outcome& out) {
  const std::vector<std::pair<std::string, std::string>> cases{
      {"disconnect", "[walk]\nd = 2\nN = 3,4\n"},
      {"scaling", "[walk]\nd = 1\nN = 4,8\n"},
      {"excursions", "[walk]\nd = 2\nN = 4\n"},
      {"events", "[walk]\nd = 2\nN = 4\n[events]\nK = 1\nu = 0.1,0.5\n"},
      {"expbound", "[walk]\nd = 2\nN = 5\n[expbound]\nsizes = 4\n"},
      {"localtime", "[walk]\nd = 2\nN = 4\n[localtime]\nk = 50,200\n"},
      {"qtable", "[qtable]\nmc_nu = 3\nmc_horizon = 1000\nmc_replicas = 200\n"},
      {"thresholds", ""},
      {"peierls", ""},
  };
  int same = 0;
  for (const auto& [name, body] : cases) {
    std::string text[2];
    for (int pass = 0; pass < 2; ++pass) {
      const std::string dir = scratch_dir("c10_" + name + std::to_string(pass));
      auto cfg = Config::parse("[experiment]\nreplicas = 30\nseed = 10\nthreads = " + std::to_string(pass ? 3 : 1) +
                               "\nout_dir = " + dir + "\n" + body);
      auto rec = run_experiment(name, cfg);
      auto files = emit(rec, dir, {Format::Csv});
      std::ifstream in(files.at(0), std::ios::binary);
      std::stringstream s;
      s << in.rdbuf();
      text[pass] = s.str();
    }
    const bool ok = text[0] == text[1] && !text[0].empty();
    out.require(ok, name + " CSV differs");
    same += ok;
  }
  out.detail << same << "/" << cases.size() << " experiments byte-identical (1 vs 3 threads)";
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<const char*, std::function<void(Outcome&)>>> criteria{
      {"threshold reproduction", threshold_reproduction},
      {"return-probability engine", return_probability},
      {"Peierls enumeration", peierls},
      {"disconnection correctness", disconnection},
      {"scaling law", scaling},
      {"tightness proxy", tightness},
      {"local-time identity", local_time},
      {"q_N trend", qn_trend},
      {"event suite", event_suite},
      {"determinism", determinism},
  };
  std::set<int> only;
  for (int i = 1; i < argc; ++i) only.insert(std::stoi(argv[i]));
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int id = static_cast<int>(i + 1);
    if (!only.empty() && !only.count(id)) continue;
    Outcome out;
    const auto t0 = std::chrono::steady_clock::now();
    try {
      criteria[i].second(out);
    } catch (const std::exception& e) {
      out.require(false, std::string("exception: ") + e.what());
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::printf("criterion %2d %s  %s: %s (%.1fs)\n", id, out.pass ? "PASS" : "FAIL", criteria[i].first,
                out.detail.str().c_str(), secs);
    std::fflush(stdout);
    failed += !out.pass;
  }
  return failed ? 1 : 0;
}
