#include "cylwalk/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <sstream>
#include <thread>

#include "cylwalk/criticality.hpp"
#include "cylwalk/return_probability.hpp"
#include "cylwalk/stats.hpp"
#include "cylwalk/vacant.hpp"
#include "cylwalk/walk.hpp"

namespace cylwalk {

using nlohmann::json;

namespace {

const std::set<std::string> kCommonKeys{"experiment.id",      "experiment.seed",    "experiment.replicas",
                                        "experiment.budget",  "experiment.threads", "experiment.resume",
                                        "experiment.out_dir", "experiment.formats"};

std::set<std::string> with_common(std::initializer_list<std::string> keys) {
  std::set<std::string> s(kCommonKeys);
  s.insert(keys);
  return s;
}

double ipow(double b, int e) {
  double r = 1;
  for (int i = 0; i < e; ++i) r *= b;
  return r;
}

StartLaw start_law(const Config& cfg, const std::string& fallback) {
  const std::string s = cfg.get_string("walk.start", fallback);
  if (s == "origin") return StartLaw::Origin;
  if (s == "uniform_b0") return StartLaw::UniformB0;
  throw ConfigError("walk.start must be 'origin' or 'uniform_b0', got '" + s + "'");
}

int checked_d(const Config& cfg) {
  const auto d = cfg.get_int("walk.d");
  if (d < 1 || d > 30) throw ConfigError("walk.d must lie in [1, 30]");
  return static_cast<int>(d);
}

int checked_N(int d, std::int64_t N) {
  if (N < 2 || N > 1000000) throw ConfigError("walk.N values must lie in [2, 10^6]");
  if (ipow(static_cast<double>(N), d) >= 2147483648.0) throw ConfigError("N^d must stay below 2^31");
  return static_cast<int>(N);
}

std::vector<int> checked_Ns(const Config& cfg, int d) {
  std::vector<int> out;
  for (auto N : cfg.get_int_list("walk.N")) out.push_back(checked_N(d, N));
  return out;
}

ResultRecord make_record(const Config& cfg, const RunSettings& run) {
  ResultRecord rec;
  rec.experiment = run.id;
  rec.parameters = cfg.values();
  // scheduling and output keys do not change results, so they stay out of the hash
  Config keyed;
  for (const auto& [k, v] : cfg.values()) {
    if (k != "experiment.threads" && k != "experiment.resume" && k != "experiment.out_dir" &&
        k != "experiment.formats")
      keyed.set(k, v);
  }
  rec.config_hash = keyed.hash();
  rec.tool_version = kToolVersion;
  return rec;
}

Cell opt_cell(const json& v) {
  if (v.is_null()) return std::monostate{};
  if (v.is_boolean()) return v.get<bool>();
  if (v.is_number_integer()) return v.get<std::int64_t>();
  return v.get<double>();
}

json summary_stats(const std::vector<double>& v) {
  if (v.empty()) return json{{"count", 0}};
  return json{{"count", v.size()},          {"median", median(v)},          {"mean", mean(v)},
              {"q10", quantile(v, 0.1)},    {"q25", quantile(v, 0.25)},     {"q75", quantile(v, 0.75)},
              {"q90", quantile(v, 0.9)},    {"min", *std::min_element(v.begin(), v.end())},
              {"max", *std::max_element(v.begin(), v.end())}};
}

json interval_json(const Interval& i) { return json{{"lo", i.lo}, {"hi", i.hi}}; }

/// Only the height coordinate of the walk. Draws the same direction
/// sequence as the full walk, so its height process has the same law.
struct HeightWalk {
  Xoshiro256 rng;
  std::uint64_t dirs;
  std::uint64_t vertical;
  std::int64_t z = 0;
  std::uint64_t n = 0;

  HeightWalk(int d, std::uint64_t seed, std::uint64_t stream)
      : rng(replica_stream(seed, stream)), dirs(2 * static_cast<std::uint64_t>(d + 1)),
        vertical(static_cast<std::uint64_t>(d)) {}

  void step() {
    const std::uint64_t dir = rng.below(dirs);
    if ((dir >> 1) == vertical) z += (dir & 1) ? -1 : 1;
    ++n;
  }
};

/// Heights the block analyzers around level j can look at, with room for
/// the segment offsets above and below C_j.
HeightRange analysis_window(std::int64_t j, int N, std::int64_t L) {
  return HeightRange{(j - 3) * N - L - 2, (j + 3) * N + L + 2};
}

Plot ecdf_plot(const std::string& name, const std::string& title, const std::string& xlabel,
               const std::vector<std::pair<std::string, std::vector<double>>>& samples) {
  Plot p{name, title, xlabel, "empirical CDF", true, false, false, {}};
  for (const auto& [label, values] : samples) {
    std::vector<double> v = values;
    std::sort(v.begin(), v.end());
    Series s{label, {}, {}};
    for (std::size_t i = 0; i < v.size(); ++i) {
      s.x.push_back(v[i]);
      s.y.push_back(static_cast<double>(i + 1) / static_cast<double>(v.size()));
    }
    p.series.push_back(std::move(s));
  }
  return p;
}

}  // namespace

RunSettings run_settings(const Config& cfg, const std::string& default_id) {
  RunSettings r;
  r.id = cfg.get_string("experiment.id", default_id);
  if (r.id.empty() || r.id.find_first_of("/\\") != std::string::npos) throw ConfigError("bad experiment.id");
  r.seed = cfg.get_u64("experiment.seed", 1);
  r.replicas = cfg.get_u64("experiment.replicas", 100);
  if (r.replicas == 0) throw ConfigError("experiment.replicas must be positive");
  r.budget = cfg.get_u64("experiment.budget", 1000000000);
  if (r.budget == 0 || r.budget > FirstHitIndex::kMaxTime) throw ConfigError("experiment.budget must lie in [1, 2^32 - 2]");
  r.threads = static_cast<unsigned>(cfg.get_u64("experiment.threads", 0));
  r.resume = cfg.get_bool("experiment.resume", false);
  r.out_dir = cfg.get_string("experiment.out_dir", "out");
  if (cfg.has("experiment.formats")) {
    r.formats.clear();
    std::stringstream in(cfg.get_string("experiment.formats"));
    std::string item;
    while (std::getline(in, item, ',')) {
      item.erase(0, item.find_first_not_of(' '));
      item.erase(item.find_last_not_of(' ') + 1);
      if (!item.empty()) r.formats.insert(parse_format(item));
    }
  }
  return r;
}

std::uint64_t stream_key(std::initializer_list<std::uint64_t> parts) {
  std::uint64_t h = 0x243f6a8885a308d3ULL;
  for (auto p : parts) {
    std::uint64_t s = h ^ p;
    h = splitmix64(s);
  }
  return h;
}

std::vector<json> run_units(const RunSettings& run, const std::string& config_hash, const std::string& group,
                            std::uint64_t count, const std::function<json(std::uint64_t)>& fn) {
  std::vector<json> results(count);
  std::vector<char> done(count, 0);
  std::ofstream journal;
  if (run.resume) {
    namespace fs = std::filesystem;
    std::error_code ec;
    fs::create_directories(run.out_dir, ec);
    if (ec) throw IoError("cannot create " + run.out_dir + ": " + ec.message());
    const std::string path = (fs::path(run.out_dir) / (run.id + ".resume.jsonl")).string();
    bool same = false;
    {
      std::ifstream in(path);
      std::string line;
      if (in && std::getline(in, line)) {
        const json head = json::parse(line, nullptr, false);
        same = !head.is_discarded() && head.value("config_hash", "") == config_hash;
        while (same && std::getline(in, line)) {
          const json e = json::parse(line, nullptr, false);
          if (e.is_discarded() || e.value("group", "") != group) continue;
          const auto unit = e.value("unit", count);
          if (unit < count) {
            results[unit] = e["data"];
            done[unit] = 1;
          }
        }
      }
    }
    journal.open(path, same ? std::ios::app : std::ios::trunc);
    if (!journal) throw IoError("cannot open resume journal " + path);
    if (!same) journal << json{{"config_hash", config_hash}}.dump() << '\n';
  }

  unsigned workers = run.threads ? run.threads : std::max(1u, std::thread::hardware_concurrency());
  workers = static_cast<unsigned>(std::min<std::uint64_t>(workers, std::max<std::uint64_t>(count, 1)));
  std::atomic<std::uint64_t> next{0};
  std::mutex mu;
  std::exception_ptr error;
  auto work = [&] {
    while (true) {
      const std::uint64_t i = next++;
      if (i >= count) return;
      if (done[i]) continue;
      try {
        json r = fn(i);
        std::lock_guard<std::mutex> lock(mu);
        if (journal.is_open()) journal << json{{"group", group}, {"unit", i}, {"data", r}}.dump() << '\n' << std::flush;
        results[i] = std::move(r);
      } catch (...) {
        std::lock_guard<std::mutex> lock(mu);
        if (!error) error = std::current_exception();
        next = count;
      }
    }
  };
  if (workers <= 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }
  if (error) std::rethrow_exception(error);
  return results;
}

double estimated_disconnection_steps(int d, int N) {
  const double l = 1 + std::log(static_cast<double>(N));
  return ipow(static_cast<double>(N), 2 * d) * l * l;
}

// ---------------------------------------------------------------- disconnect

namespace {

ResultRecord disconnect_impl(const Config& cfg, const std::string& name, bool scaling) {
  cfg.require_known(known_keys(name));
  const RunSettings run = run_settings(cfg, name);
  const int d = checked_d(cfg);
  const std::vector<int> Ns = checked_Ns(cfg, d);
  if (scaling && Ns.size() < 2) throw ConfigError("scaling needs at least two values in walk.N");
  const StartLaw start = start_law(cfg, "origin");
  DisconnectOptions opts;
  opts.cadence = cfg.get_u64("disconnect.cadence", 0);
  opts.growth = cfg.get_double("disconnect.growth", 0.125);
  if (opts.growth < 0) throw ConfigError("disconnect.growth must be >= 0");
  const auto resamples = cfg.get_int("disconnect.bootstrap", 500);
  for (int N : Ns) {
    const double est = estimated_disconnection_steps(d, N);
    if (est > static_cast<double>(run.budget)) {
      std::ostringstream msg;
      msg << "d=" << d << " N=" << N << ": estimated " << est << " steps per replica exceeds budget " << run.budget;
      throw BudgetError(msg.str());
    }
  }

  ResultRecord rec = make_record(cfg, run);
  rec.replicas = run.replicas;
  rec.columns = {"d", "N", "replica", "T_N", "censored", "ratio"};
  std::vector<double> xs;
  std::vector<std::vector<double>> times;
  std::vector<std::pair<std::string, std::vector<double>>> ratios;
  bool min_cut_ok = true;
  json per_N = json::array();
  for (int N : Ns) {
    auto units = run_units(run, rec.config_hash, "N=" + std::to_string(N), run.replicas, [&](std::uint64_t r) {
      WalkConfig wc;
      wc.d = d;
      wc.N = N;
      wc.seed = run.seed;
      wc.stream = stream_key({static_cast<std::uint64_t>(N), r});
      wc.start = start;
      wc.step_cap = run.budget;
      wc.record_path = false;
      const DisconnectResult res = disconnection_time(wc, opts);
      return json{{"T", res.time ? json(*res.time) : json(nullptr)}, {"steps", res.steps}, {"checks", res.checks}};
    });
    const double nd = ipow(N, d);
    const double n2d = ipow(N, 2 * d);
    std::vector<double> T, R;
    std::uint64_t censored = 0;
    for (std::uint64_t r = 0; r < units.size(); ++r) {
      const json& t = units[r]["T"];
      if (t.is_null()) {
        ++censored;
        rec.rows.push_back({std::int64_t{d}, std::int64_t{N}, static_cast<std::int64_t>(r), std::monostate{}, true,
                            std::monostate{}});
        continue;
      }
      const double v = t.get<double>();
      if (v < nd - 1) min_cut_ok = false;
      T.push_back(v);
      R.push_back(n2d / v);
      rec.rows.push_back({std::int64_t{d}, std::int64_t{N}, static_cast<std::int64_t>(r), t.get<std::int64_t>(), false,
                          n2d / v});
    }
    rec.censored += censored;
    per_N.push_back(json{{"N", N},
                         {"replicas", run.replicas},
                         {"censored", censored},
                         {"used", run.replicas - censored},
                         {"T_N", summary_stats(T)},
                         {"ratio", summary_stats(R)}});
    if (!T.empty()) {
      xs.push_back(N);
      times.push_back(T);
      ratios.push_back({"N=" + std::to_string(N), R});
    }
  }
  rec.summary["d"] = d;
  rec.summary["per_N"] = per_N;
  rec.assertions["T_N_at_least_N^d-1"] = min_cut_ok;
  if (xs.size() >= 2) {
    const double slope = log_median_slope(xs, times);
    const Interval ci = bootstrap_log_median_slope(xs, times, static_cast<int>(resamples), run.seed);
    rec.summary["scaling"] = json{{"slope", slope}, {"ci95", interval_json(ci)}, {"reference", 2 * d}};
    json dist = json::array();
    for (std::size_t i = 0; i + 1 < ratios.size(); ++i) {
      dist.push_back(json{{"N_a", xs[i]}, {"N_b", xs[i + 1]},
                          {"sup_distance", ecdf_sup_distance(ratios[i].second, ratios[i + 1].second)}});
    }
    rec.summary["ratio_cdf_sup_distance"] = dist;
    Plot med{"median", "median T_N", "N", "median T_N", false, true, true, {}};
    Series s{"d=" + std::to_string(d), xs, {}};
    for (const auto& t : times) s.y.push_back(median(t));
    med.series.push_back(s);
    rec.plots.push_back(med);
  }
  rec.plots.push_back(ecdf_plot("ratio_cdf", "N^{2d}/T_N", "N^{2d}/T_N", ratios));
  return rec;
}

}  // namespace

ResultRecord run_disconnect(const Config& cfg) { return disconnect_impl(cfg, "disconnect", false); }
ResultRecord run_scaling(const Config& cfg) { return disconnect_impl(cfg, "scaling", true); }

// ---------------------------------------------------------------- excursions

ResultRecord run_excursion_budget(const Config& cfg) {
  cfg.require_known(known_keys("excursions"));
  const RunSettings run = run_settings(cfg, "excursions");
  const int d = checked_d(cfg);
  const int N = checked_N(d, cfg.get_int("walk.N"));
  const StartLaw start = start_law(cfg, "origin");
  const double u = cfg.get_double("excursions.u", 0.5);
  if (!(u >= 0)) throw ConfigError("excursions.u must be >= 0");
  std::vector<double> gammas =
      cfg.get_double_list("excursions.gamma", std::vector<double>{0.001, 0.003, 0.01, 0.03, 0.1, 0.3, 1.0});
  std::sort(gammas.begin(), gammas.end());
  if (gammas.front() <= 0) throw ConfigError("excursions.gamma values must be positive");
  const double M = cfg.get_double("excursions.M", 1.0);
  const double threshold = cfg.get_double("excursions.threshold", 0.9);

  const double n2d = ipow(N, 2 * d);
  const auto k = static_cast<std::uint64_t>(std::floor(u * ipow(N, d - 1)));
  const auto horizon = static_cast<std::uint64_t>(std::ceil(gammas.back() * n2d));
  const auto tau_needed = static_cast<std::uint64_t>(std::floor(M * gammas.back() * ipow(N, 2 * d - 2)));
  if (static_cast<double>(horizon) > static_cast<double>(run.budget)) {
    throw BudgetError("horizon " + std::to_string(horizon) + " steps exceeds budget " + std::to_string(run.budget));
  }

  ResultRecord rec = make_record(cfg, run);
  rec.replicas = run.replicas;
  auto units = run_units(run, rec.config_hash, "main", run.replicas, [&](std::uint64_t r) {
    HeightWalk w(d, run.seed, stream_key({static_cast<std::uint64_t>(N), r}));
    if (start == StartLaw::UniformB0) {
      Cylinder cyl(d, N);
      w.z = draw_start(cyl, start, w.rng).z;
    }
    LevelDepartureCounter levels(N);
    TauTracker taus(N);
    levels.feed(0, w.z);
    taus.feed(0, w.z);
    std::optional<std::uint64_t> n_star;
    if (k == 0) n_star = 0;
    while (w.n < run.budget &&
           ((!n_star && w.n < horizon) || taus.sequence().times.size() <= tau_needed)) {
      w.step();
      levels.feed(w.n, w.z);
      taus.feed(w.n, w.z);
      if (!n_star && levels.max_departures() >= k) n_star = w.n;
    }
    json lt = json::array();
    for (double g : gammas) {
      const auto L = level_local_time(taus.sequence(), M * g * ipow(N, 2 * d - 2), N);
      lt.push_back(L ? json(L->max()) : json(nullptr));
    }
    return json{{"n_star", n_star ? json(*n_star) : json(nullptr)}, {"steps", w.n}, {"lt_max", lt}};
  });

  const double half_budget = 0.5 * static_cast<double>(k);
  rec.columns = {"replica", "gamma", "event", "local_time_max", "local_time_ok"};
  json per_gamma = json::array();
  bool monotone = true;
  double prev = 2;
  std::optional<double> gamma_star;
  Plot plot{"event_probability", "P[D_{gamma,t}]", "gamma", "probability", false, true, false, {}};
  Series ps{"N=" + std::to_string(N), {}, {}};
  std::uint64_t lt_censored = 0;
  for (std::size_t gi = 0; gi < gammas.size(); ++gi) {
    const double g = gammas[gi];
    std::uint64_t hold = 0, lt_ok = 0, lt_seen = 0;
    for (std::uint64_t r = 0; r < units.size(); ++r) {
      const json& ns = units[r]["n_star"];
      const bool event = ns.is_null() || ns.get<double>() > g * n2d;
      hold += event;
      const json& lt = units[r]["lt_max"][gi];
      Cell ok = std::monostate{};
      if (!lt.is_null()) {
        ++lt_seen;
        const bool b = lt.get<double>() < half_budget;
        lt_ok += b;
        ok = b;
      } else {
        ++lt_censored;
      }
      rec.rows.push_back({static_cast<std::int64_t>(r), g, event, opt_cell(lt), ok});
    }
    const double p = static_cast<double>(hold) / static_cast<double>(units.size());
    if (p > prev) monotone = false;
    prev = p;
    if (p >= threshold) gamma_star = g;
    ps.x.push_back(g);
    ps.y.push_back(p);
    per_gamma.push_back(json{{"gamma", g},
                             {"probability", p},
                             {"ci95", interval_json(wilson_interval(hold, units.size()))},
                             {"local_time_ok", lt_seen ? json(static_cast<double>(lt_ok) / lt_seen) : json(nullptr)},
                             {"local_time_replicas", lt_seen}});
  }
  plot.series.push_back(ps);
  rec.plots.push_back(plot);
  rec.censored = lt_censored;
  rec.summary = json{{"d", d}, {"N", N}, {"u", u}, {"t", u * ipow(N, d - 1)}, {"excursions", k},
                     {"per_gamma", per_gamma}, {"threshold", threshold},
                     {"gamma_star", gamma_star ? json(*gamma_star) : json(nullptr)}};
  rec.assertions["event_monotone_in_gamma"] = monotone;
  return rec;
}

// ---------------------------------------------------------------- events

ResultRecord run_vacant_events(const Config& cfg) {
  cfg.require_known(known_keys("events"));
  const RunSettings run = run_settings(cfg, "events");
  const int d = checked_d(cfg);
  const std::vector<int> Ns = checked_Ns(cfg, d);
  const StartLaw start = start_law(cfg, "origin");
  const std::vector<double> us = cfg.get_double_list("events.u", std::vector<double>{0.05, 0.1, 0.2, 0.5});
  const std::int64_t j = cfg.get_int("events.j", 0);
  const std::string timing_name = cfg.get_string("events.timing", "each");
  if (timing_name != "each" && timing_name != "final") throw ConfigError("events.timing must be 'each' or 'final'");
  const UTiming timing = timing_name == "each" ? UTiming::EveryBoundary : UTiming::FinalOnly;
  const bool signed_dirs = cfg.get_bool("events.signed_directions", true);
  UOptions uopt;
  uopt.full_enumeration_max_N = static_cast<int>(cfg.get_int("events.full_enumeration_max_N", 16));
  uopt.sampled_planes = cfg.get_u64("events.sampled_planes", 256);
  uopt.sample_seed = run.seed;
  double K;
  std::string K_source;
  if (cfg.has("events.K")) {
    K = cfg.get_double("events.K");
    K_source = "configured";
  } else {
    if (d < 4) throw ConfigError("events.K is required for d < 4");
    const ThresholdReport tr = rho(d);
    if (!tr.holds) throw ConfigError("events.K is required when rho(d) >= 1");
    K = *tr.c0;
    K_source = "c0";
  }
  if (!(K > 0)) throw ConfigError("events.K must be positive");

  ResultRecord rec = make_record(cfg, run);
  rec.replicas = run.replicas;
  rec.columns = {"seed", "d", "N", "j", "u_or_t", "event", "value", "censored", "replica"};
  json cells = json::array();
  bool g_implies_vu = true, g_implies_link = true;
  std::map<int, Plot> plots;
  for (int N : Ns) {
    const std::int64_t L0 = log_segment_length(K, N);
    const bool hyp = N <= uopt.full_enumeration_max_N && linkage_hypotheses_hold(N, L0);
    Plot plot{"N" + std::to_string(N), "events at N=" + std::to_string(N), "u", "probability", false, false, false, {}};
    Series sv{"V", {}, {}}, su{"U", {}, {}}, sg{"G", {}, {}}, sl{"linkage", {}, {}};
    for (std::size_t ui = 0; ui < us.size(); ++ui) {
      const double u = us[ui];
      const auto k = static_cast<std::uint64_t>(std::floor(u * ipow(N, d - 1)));
      const std::string group = "N=" + std::to_string(N) + ",u=" + format_double(u);
      auto units = run_units(run, rec.config_hash, group, run.replicas, [&](std::uint64_t r) {
        WalkConfig wc;
        wc.d = d;
        wc.N = N;
        wc.seed = run.seed;
        wc.stream = stream_key({static_cast<std::uint64_t>(N), ui, r});
        wc.start = start;
        wc.step_cap = run.budget;
        wc.record_path = false;
        wc.index_window = analysis_window(j, N, L0);
        Walk walk(wc);
        ExcursionTracker tracker(j, N, k);
        tracker.feed(0, walk.position().z);
        while (!tracker.complete()) {
          if (walk.advance() == StepStatus::CapHit) break;
          tracker.feed(walk.time(), walk.position().z);
        }
        const ExcursionLedger& ledger = tracker.ledger();
        const auto n = ledger.departure_time(static_cast<double>(k));
        if (!n) return json{{"censored", true}};
        const Cylinder& cyl = walk.cylinder();
        const FirstHitIndex& hits = walk.trajectory().visited();
        const TraceView view(cyl, hits, *n);
        const bool v = check_V(view, K, j, signed_dirs).holds;
        const EventOutcome uo = check_U_at(cyl, hits, ledger, K, static_cast<double>(k), timing, uopt);
        const LinkageVerdict link = segment_linkage(view, j, L0);
        return json{{"censored", false},
                    {"n", *n},
                    {"V", v},
                    {"U", *uo.value},
                    {"G", v && *uo.value},
                    {"linkage", link.holds()},
                    {"linkage_lines", link.every_line_has_segment},
                    {"linkage_connected", link.segments_connected}};
      });
      std::uint64_t nV = 0, nU = 0, nG = 0, nL = 0, used = 0, cens = 0, violations = 0;
      for (std::uint64_t r = 0; r < units.size(); ++r) {
        const json& x = units[r];
        const bool c = x.value("censored", false);
        for (const char* ev : {"V", "U", "G", "linkage", "linkage_lines", "linkage_connected"}) {
          rec.rows.push_back({static_cast<std::int64_t>(run.seed), std::int64_t{d}, std::int64_t{N}, j, u,
                              std::string(ev), c ? Cell{std::monostate{}} : Cell{x[ev].get<bool>()}, c,
                              static_cast<std::int64_t>(r)});
        }
        if (c) {
          ++cens;
          continue;
        }
        ++used;
        const bool V = x["V"], U = x["U"], G = x["G"], L = x["linkage"];
        nV += V, nU += U, nG += G, nL += L;
        if (G && !(V && U)) g_implies_vu = false;
        if (hyp && G && !L) {
          ++violations;
          g_implies_link = false;
        }
      }
      rec.censored += cens;
      auto frac = [&](std::uint64_t c) { return used ? json(static_cast<double>(c) / used) : json(nullptr); };
      cells.push_back(json{{"N", N},
                           {"u", u},
                           {"t", u * ipow(N, d - 1)},
                           {"excursions", k},
                           {"used", used},
                           {"censored", cens},
                           {"P_V", frac(nV)},
                           {"P_U", frac(nU)},
                           {"P_G", frac(nG)},
                           {"P_linkage", frac(nL)},
                           {"L0", L0},
                           {"linkage_hypotheses", hyp},
                           {"G_without_linkage", violations}});
      if (used) {
        for (auto* s : {&sv, &su, &sg, &sl}) s->x.push_back(u);
        sv.y.push_back(static_cast<double>(nV) / used);
        su.y.push_back(static_cast<double>(nU) / used);
        sg.y.push_back(static_cast<double>(nG) / used);
        sl.y.push_back(static_cast<double>(nL) / used);
      }
    }
    plot.series = {sv, su, sg, sl};
    rec.plots.push_back(plot);
  }
  rec.summary = json{{"d", d}, {"j", j}, {"K", K}, {"K_source", K_source}, {"timing", timing_name},
                     {"signed_directions", signed_dirs}, {"cells", cells}};
  rec.assertions["G_implies_V_and_U"] = g_implies_vu;
  rec.assertions["G_implies_linkage"] = g_implies_link;
  return rec;
}

// ---------------------------------------------------------------- expbound

namespace {

/// Square spiral around the origin of Z^2: (0,0), (1,0), (1,1), (0,1), ...
std::vector<std::pair<int, int>> spiral(std::size_t count) {
  std::vector<std::pair<int, int>> out{{0, 0}};
  int x = 0, y = 0, len = 1;
  const int dx[] = {1, 0, -1, 0}, dy[] = {0, 1, 0, -1};
  for (int leg = 0; out.size() < count; ++leg) {
    for (int s = 0; s < len && out.size() < count; ++s) {
      x += dx[leg % 4];
      y += dy[leg % 4];
      out.emplace_back(x, y);
    }
    if (leg % 2 == 1) ++len;
  }
  return out;
}

}  // namespace

ResultRecord run_exponential_bound(const Config& cfg) {
  cfg.require_known(known_keys("expbound"));
  const RunSettings run = run_settings(cfg, "expbound");
  const int d = checked_d(cfg);
  if (d < 2) throw ConfigError("expbound needs walk.d >= 2 for planar shapes");
  const int N = checked_N(d, cfg.get_int("walk.N"));
  const StartLaw start = start_law(cfg, "uniform_b0");
  const double u = cfg.get_double("expbound.u", 0.01);
  const double lambda = cfg.get_double("expbound.lambda", 1.0);
  const auto max_size = cfg.get_int("expbound.sizes", 8);
  const std::int64_t j = cfg.get_int("expbound.j", 0);
  if (max_size < 1 || max_size > 12) throw ConfigError("expbound.sizes must lie in [1, 12]");
  if (N < 5) throw ConfigError("expbound needs N >= 5 so the shapes embed");
  const Cylinder cyl(d, N);
  std::vector<Site> shape;
  for (auto [x, y] : spiral(static_cast<std::size_t>(max_size))) {
    CylinderPoint p{std::vector<int>(static_cast<std::size_t>(d), 0), j * N};
    p.torus[0] = ((x % N) + N) % N;
    p.torus[1] = ((y % N) + N) % N;
    shape.push_back(cyl.pack(p));
  }
  const auto k = static_cast<std::uint64_t>(std::floor(u * ipow(N, d - 1)));

  ResultRecord rec = make_record(cfg, run);
  rec.replicas = run.replicas;
  auto units = run_units(run, rec.config_hash, "main", run.replicas, [&](std::uint64_t r) {
    WalkConfig wc;
    wc.d = d;
    wc.N = N;
    wc.seed = run.seed;
    wc.stream = stream_key({static_cast<std::uint64_t>(N), r});
    wc.start = start;
    wc.step_cap = run.budget;
    wc.record_path = false;
    wc.index_window = analysis_window(j, N, 0);
    Walk walk(wc);
    ExcursionTracker tracker(j, N, k);
    tracker.feed(0, walk.position().z);
    while (!tracker.complete()) {
      if (walk.advance() == StepStatus::CapHit) break;
      tracker.feed(walk.time(), walk.position().z);
    }
    const auto n = tracker.ledger().departure_time(static_cast<double>(k));
    if (!n) return json{{"censored", true}};
    std::int64_t covered = 0;
    while (covered < max_size && walk.trajectory().visited().visited_by(shape[static_cast<std::size_t>(covered)], *n)) {
      ++covered;
    }
    return json{{"censored", false}, {"covered", covered}, {"n", *n}};
  });

  rec.columns = {"replica", "size", "contained"};
  std::vector<std::uint64_t> hits(static_cast<std::size_t>(max_size) + 1, 0);
  std::uint64_t used = 0;
  for (std::uint64_t r = 0; r < units.size(); ++r) {
    if (units[r].value("censored", false)) {
      ++rec.censored;
      for (std::int64_t s = 1; s <= max_size; ++s) rec.rows.push_back({static_cast<std::int64_t>(r), s, std::monostate{}});
      continue;
    }
    ++used;
    const auto covered = units[r]["covered"].get<std::int64_t>();
    for (std::int64_t s = 1; s <= max_size; ++s) {
      rec.rows.push_back({static_cast<std::int64_t>(r), s, covered >= s});
      if (covered >= s) ++hits[static_cast<std::size_t>(s)];
    }
  }
  json per_size = json::array();
  std::vector<double> fx, fy;
  bool monotone = true;
  Plot plot{"log_probability", "P[trace contains A]", "|A|", "probability", false, false, true, {}};
  Series ps{"N=" + std::to_string(N), {}, {}};
  for (std::int64_t s = 1; s <= max_size; ++s) {
    const double p = used ? static_cast<double>(hits[static_cast<std::size_t>(s)]) / used : 0;
    if (s > 1 && hits[static_cast<std::size_t>(s)] > hits[static_cast<std::size_t>(s - 1)]) monotone = false;
    per_size.push_back(json{{"size", s}, {"probability", p}, {"bound", std::exp(-lambda * static_cast<double>(s))},
                            {"ci95", interval_json(wilson_interval(hits[static_cast<std::size_t>(s)], used))}});
    if (p > 0) {
      fx.push_back(static_cast<double>(s));
      fy.push_back(std::log(p));
      ps.x.push_back(static_cast<double>(s));
      ps.y.push_back(p);
    }
  }
  plot.series.push_back(ps);
  rec.plots.push_back(plot);
  json fit = nullptr;
  if (fx.size() >= 2) {
    const LineFit f = fit_line(fx, fy);
    fit = json{{"slope", f.slope}, {"intercept", f.intercept}, {"r2", f.r2}, {"decay_rate", -f.slope}};
  }
  rec.summary = json{{"d", d}, {"N", N}, {"u", u}, {"lambda", lambda}, {"excursions", k}, {"used", used},
                     {"per_size", per_size}, {"fit", fit}};
  rec.assertions["nested_shapes_monotone"] = monotone;
  return rec;
}

// ---------------------------------------------------------------- localtime

ResultRecord run_localtime_identity(const Config& cfg) {
  cfg.require_known(known_keys("localtime"));
  const RunSettings run = run_settings(cfg, "localtime");
  const int d = checked_d(cfg);
  const int N = checked_N(d, cfg.get_int("walk.N"));
  const auto ks = cfg.get_int_list("localtime.k", std::vector<std::int64_t>{50, 200, 1000});
  const double alpha = cfg.get_double("localtime.alpha", 0.01);
  for (auto k : ks) {
    if (k < 0) throw ConfigError("localtime.k values must be >= 0");
  }

  ResultRecord rec = make_record(cfg, run);
  rec.replicas = run.replicas;
  rec.columns = {"k", "replica", "source", "L0", "Lmax"};
  json per_k = json::array();
  bool mass_ok = true;
  std::vector<std::pair<std::string, std::vector<double>>> cdfs;
  for (auto k : ks) {
    const auto ku = static_cast<std::uint64_t>(k);
    auto units = run_units(run, rec.config_hash, "k=" + std::to_string(k), run.replicas, [&](std::uint64_t r) {
      HeightWalk w(d, run.seed, stream_key({1, ku, r}));
      TauTracker taus(N);
      taus.feed(0, 0);
      while (taus.sequence().times.size() <= ku) {
        if (w.n >= run.budget) return json{{"censored", true}};
        w.step();
        taus.feed(w.n, w.z);
      }
      const auto L = level_local_time(taus.sequence(), static_cast<double>(k), N);
      Xoshiro256 rng = replica_stream(run.seed, stream_key({2, ku, r}));
      std::map<std::int64_t, std::uint64_t> visits{{0, 1}};
      std::int64_t z = 0;
      for (std::uint64_t n = 0; n < ku; ++n) {
        z += rng.below(2) ? -1 : 1;
        ++visits[z];
      }
      std::uint64_t srw_max = 0;
      for (const auto& [x, c] : visits) srw_max = std::max(srw_max, c);
      return json{{"censored", false}, {"cyl_L0", L->at(0)}, {"cyl_max", L->max()}, {"total", L->total()},
                  {"srw_L0", visits[0]}, {"srw_max", srw_max}};
    });
    std::vector<double> a0, b0, am, bm;
    std::vector<std::int64_t> ia0, ib0, iam, ibm;
    for (std::uint64_t r = 0; r < units.size(); ++r) {
      const json& x = units[r];
      if (x.value("censored", false)) {
        ++rec.censored;
        continue;
      }
      if (x["total"].get<std::uint64_t>() != ku + 1) mass_ok = false;
      const auto c0 = x["cyl_L0"].get<std::int64_t>(), cm = x["cyl_max"].get<std::int64_t>();
      const auto s0 = x["srw_L0"].get<std::int64_t>(), sm = x["srw_max"].get<std::int64_t>();
      rec.rows.push_back({k, static_cast<std::int64_t>(r), std::string("cylinder"), c0, cm});
      rec.rows.push_back({k, static_cast<std::int64_t>(r), std::string("srw"), s0, sm});
      a0.push_back(static_cast<double>(c0)), b0.push_back(static_cast<double>(s0));
      am.push_back(static_cast<double>(cm)), bm.push_back(static_cast<double>(sm));
      ia0.push_back(c0), ib0.push_back(s0), iam.push_back(cm), ibm.push_back(sm);
    }
    json entry{{"k", k}, {"used", a0.size()}};
    if (!a0.empty()) {
      const TestResult ks0 = ks_two_sample(a0, b0), ksm = ks_two_sample(am, bm);
      const TestResult ch0 = chi_square_two_sample(ia0, ib0), chm = chi_square_two_sample(iam, ibm);
      entry["ks_L0"] = json{{"D", ks0.statistic}, {"p", ks0.p_value}};
      entry["ks_max"] = json{{"D", ksm.statistic}, {"p", ksm.p_value}};
      entry["chi2_L0"] = json{{"stat", ch0.statistic}, {"p", ch0.p_value}};
      entry["chi2_max"] = json{{"stat", chm.statistic}, {"p", chm.p_value}};
      entry["pass"] = ks0.p_value >= alpha && ksm.p_value >= alpha && ch0.p_value >= alpha && chm.p_value >= alpha;
      cdfs.push_back({"cylinder k=" + std::to_string(k), a0});
      cdfs.push_back({"srw k=" + std::to_string(k), b0});
    }
    per_k.push_back(entry);
  }
  rec.plots.push_back(ecdf_plot("L0_cdf", "local time at 0", "L(0,k)", cdfs));
  rec.summary = json{{"d", d}, {"N", N}, {"alpha", alpha}, {"per_k", per_k}};
  rec.assertions["local_time_mass"] = mass_ok;
  return rec;
}

// ---------------------------------------------------------------- numerics

ResultRecord run_qtable(const Config& cfg) {
  cfg.require_known(known_keys("qtable"));
  const RunSettings run = run_settings(cfg, "qtable");
  const auto nus = cfg.get_int_list("qtable.nu", std::vector<std::int64_t>{1, 2, 3, 4, 5, 6, 8, 10, 12, 15, 16, 20, 30});
  const double tol = cfg.get_double("qtable.tol", 1e-10);
  const auto mc_nus = cfg.get_int_list("qtable.mc_nu", std::vector<std::int64_t>{});
  const auto horizon = cfg.get_u64("qtable.mc_horizon", 100000);
  const auto mc_replicas = cfg.get_u64("qtable.mc_replicas", 10000);
  ResultRecord rec = make_record(cfg, run);
  rec.columns = {"nu", "q", "abs_error", "method"};
  bool decreasing = true;
  double prev = 2;
  std::int64_t prev_nu = 0;
  Plot plot{"q", "return probability", "nu", "q(nu)", false, true, true, {}};
  Series s{"quadrature", {}, {}};
  for (auto nu : nus) {
    if (nu < 1 || nu > 1000) throw ConfigError("qtable.nu values must lie in [1, 1000]");
    const QEstimate q = q_quadrature(static_cast<int>(nu), tol);
    rec.rows.push_back({nu, q.value, q.abs_error, to_string(q.method)});
    if (nu >= 3) {
      if (prev_nu >= 3 && nu > prev_nu && !(q.value < prev)) decreasing = false;
      prev = q.value;
      prev_nu = nu;
    }
    s.x.push_back(static_cast<double>(nu));
    s.y.push_back(q.value);
  }
  plot.series.push_back(s);
  json mc = json::array();
  for (auto nu : mc_nus) {
    if (nu < 3) throw ConfigError("qtable.mc_nu values must be >= 3");
    const QEstimate q = q_monte_carlo(static_cast<int>(nu), horizon, mc_replicas, run.seed);
    rec.rows.push_back({nu, q.value, q.abs_error, to_string(q.method)});
    mc.push_back(json{{"nu", nu}, {"value", q.value}, {"ci95", interval_json(*q.ci)}, {"returned", q.returned},
                      {"replicas", q.replicas}, {"horizon", horizon}, {"truncation_bias", q.truncation_bias}});
  }
  rec.plots.push_back(plot);
  rec.summary = json{{"tol", tol}, {"monte_carlo", mc}};
  rec.assertions["q_strictly_decreasing"] = decreasing;
  return rec;
}

ResultRecord run_thresholds(const Config& cfg) {
  cfg.require_known(known_keys("thresholds"));
  const RunSettings run = run_settings(cfg, "thresholds");
  const auto ds = cfg.get_int_list("thresholds.d", std::vector<std::int64_t>{4, 30});
  const double tol = cfg.get_double("thresholds.tol", 1e-10);
  if (ds.size() != 2) throw ConfigError("thresholds.d takes two values: lo, hi");
  if (ds[0] < 4 || ds[1] > 64 || ds[0] > ds[1]) throw ConfigError("thresholds.d must lie within [4, 64]");
  const ThresholdScan scan = threshold_scan(static_cast<int>(ds[0]), static_cast<int>(ds[1]), tol);
  ResultRecord rec = make_record(cfg, run);
  rec.columns = {"d", "q(d-1)", "rho", "rho_err", "holds", "lambda0", "c0"};
  bool monotone = true, err_ok = true;
  bool seen_hold = false;
  Plot plot{"rho", "rho(d)", "d", "rho", false, false, false, {}};
  Series s{"rho", {}, {}}, one{"1", {}, {}};
  for (const auto& r : scan.reports) {
    rec.rows.push_back({std::int64_t{r.d}, r.q_used.value, r.rho, r.rho_err, r.holds,
                        r.lambda0 ? Cell{*r.lambda0} : Cell{std::monostate{}}, r.c0 ? Cell{*r.c0} : Cell{std::monostate{}}});
    if (seen_hold && !r.holds) monotone = false;
    seen_hold = seen_hold || r.holds;
    if (r.rho_err > 7 * r.q_used.abs_error) err_ok = false;
    s.x.push_back(r.d), s.y.push_back(r.rho);
    one.x.push_back(r.d), one.y.push_back(1.0);
  }
  plot.series = {s, one};
  rec.plots.push_back(plot);
  rec.summary = json{{"d_lo", ds[0]}, {"d_hi", ds[1]},
                     {"minimal_holding_d", scan.minimal_holding ? json(*scan.minimal_holding) : json(nullptr)}};
  rec.assertions["holds_monotone_in_d"] = monotone;
  rec.assertions["rho_err_within_7_q_err"] = err_ok;
  return rec;
}

ResultRecord run_peierls(const Config& cfg) {
  cfg.require_known(known_keys("peierls"));
  const RunSettings run = run_settings(cfg, "peierls");
  const auto n_max = cfg.get_int("peierls.n_max", 8);
  if (n_max < 1 || n_max > 10) throw ConfigError("peierls.n_max must lie in [1, 10]");
  ResultRecord rec = make_record(cfg, run);
  rec.columns = {"n", "a", "bound", "within_bound"};
  bool ok = true;
  std::uint64_t prev = 0;
  bool growth_ok = true;
  for (std::int64_t n = 1; n <= n_max; ++n) {
    const std::uint64_t a = star_saw_count(static_cast<int>(n));
    std::uint64_t bound = 8;
    for (std::int64_t i = 1; i < n; ++i) bound *= 7;
    ok = ok && a <= bound;
    if (n > 1 && a > 7 * prev) growth_ok = false;
    prev = a;
    rec.rows.push_back({n, static_cast<std::int64_t>(a), static_cast<std::int64_t>(bound), a <= bound});
  }
  rec.assertions["a_n_within_8_7^(n-1)"] = ok;
  rec.assertions["a_n+1_at_most_7a_n"] = growth_ok;
  return rec;
}

// ---------------------------------------------------------------- dispatch

const std::vector<std::string>& experiment_names() {
  static const std::vector<std::string> names{"disconnect", "scaling",    "excursions", "events",  "expbound",
                                              "localtime",  "qtable",     "thresholds", "peierls"};
  return names;
}

std::set<std::string> known_keys(const std::string& name) {
  if (name == "disconnect" || name == "scaling") {
    return with_common({"walk.d", "walk.N", "walk.start", "disconnect.cadence", "disconnect.growth",
                        "disconnect.bootstrap"});
  }
  if (name == "excursions") {
    return with_common({"walk.d", "walk.N", "walk.start", "excursions.u", "excursions.gamma", "excursions.M",
                        "excursions.threshold"});
  }
  if (name == "events") {
    return with_common({"walk.d", "walk.N", "walk.start", "events.u", "events.j", "events.K", "events.timing",
                        "events.signed_directions", "events.full_enumeration_max_N", "events.sampled_planes"});
  }
  if (name == "expbound") {
    return with_common({"walk.d", "walk.N", "walk.start", "expbound.u", "expbound.lambda", "expbound.sizes",
                        "expbound.j"});
  }
  if (name == "localtime") return with_common({"walk.d", "walk.N", "localtime.k", "localtime.alpha"});
  if (name == "qtable") {
    return with_common({"qtable.nu", "qtable.tol", "qtable.mc_nu", "qtable.mc_horizon", "qtable.mc_replicas"});
  }
  if (name == "thresholds") return with_common({"thresholds.d", "thresholds.tol"});
  if (name == "peierls") return with_common({"peierls.n_max"});
  throw ConfigError("unknown experiment '" + name + "'");
}

ResultRecord run_experiment(const std::string& name, const Config& cfg) {
  if (name == "disconnect") return run_disconnect(cfg);
  if (name == "scaling") return run_scaling(cfg);
  if (name == "excursions") return run_excursion_budget(cfg);
  if (name == "events") return run_vacant_events(cfg);
  if (name == "expbound") return run_exponential_bound(cfg);
  if (name == "localtime") return run_localtime_identity(cfg);
  if (name == "qtable") return run_qtable(cfg);
  if (name == "thresholds") return run_thresholds(cfg);
  if (name == "peierls") return run_peierls(cfg);
  throw ConfigError("unknown experiment '" + name + "'");
}

}  // namespace cylwalk
