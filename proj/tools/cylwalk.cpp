#include <CLI11.hpp>

#include <iostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "cylwalk/config.hpp"
#include "cylwalk/emit.hpp"
#include "cylwalk/experiments.hpp"

namespace {

struct Options {
  std::string config;
  std::vector<std::string> sets;
  std::string seed, replicas, out_dir, format, cadence, budget, threads;
  bool resume = false;
  bool quiet = false;
};

cylwalk::Config build_config(const Options& o) {
  cylwalk::Config cfg = o.config.empty() ? cylwalk::Config{} : cylwalk::Config::load(o.config);
  for (const auto& s : o.sets) {
    const auto eq = s.find('=');
    if (eq == std::string::npos || eq == 0) throw cylwalk::ConfigError("--set expects key=value, got '" + s + "'");
    cfg.set(s.substr(0, eq), s.substr(eq + 1));
  }
  if (!o.seed.empty()) cfg.set("experiment.seed", o.seed);
  if (!o.replicas.empty()) cfg.set("experiment.replicas", o.replicas);
  if (!o.out_dir.empty()) cfg.set("experiment.out_dir", o.out_dir);
  if (!o.format.empty()) cfg.set("experiment.formats", o.format);
  if (!o.cadence.empty()) cfg.set("disconnect.cadence", o.cadence);
  if (!o.budget.empty()) cfg.set("experiment.budget", o.budget);
  if (!o.threads.empty()) cfg.set("experiment.threads", o.threads);
  if (o.resume) cfg.set("experiment.resume", "true");
  return cfg;
}

int run(const std::string& name, const Options& o) {
  const cylwalk::Config cfg = build_config(o);
  const cylwalk::RunSettings settings = cylwalk::run_settings(cfg, name);
  const cylwalk::ResultRecord rec = cylwalk::run_experiment(name, cfg);
  const auto files = cylwalk::emit(rec, settings.out_dir, settings.formats);
  bool ok = true;
  if (!o.quiet) {
    for (const auto& f : files) std::cout << "wrote " << f << "\n";
    std::cout << rec.summary.dump(2) << "\n";
  }
  for (const auto& [key, value] : rec.assertions) {
    if (!o.quiet || !value) std::cout << (value ? "ok     " : "FAILED ") << key << "\n";
    ok = ok && value;
  }
  return ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Random walk on the discrete cylinder: disconnection, vacant set and threshold experiments"};
  app.require_subcommand(1);
  Options o;
  std::string chosen;
  for (const auto& name : cylwalk::experiment_names()) {
    CLI::App* sub = app.add_subcommand(name, "run the " + name + " experiment");
    sub->add_option("--config", o.config, "INI config file")->check(CLI::ExistingFile);
    sub->add_option("--set", o.sets, "override a config key, e.g. --set walk.N=8,16");
    sub->add_option("--seed", o.seed, "master seed");
    sub->add_option("--replicas", o.replicas, "replicas per configuration");
    sub->add_option("--out-dir", o.out_dir, "output directory");
    sub->add_option("--format", o.format, "comma-separated subset of csv,json,svg");
    sub->add_option("--cadence", o.cadence, "disconnection check interval in steps");
    sub->add_option("--budget", o.budget, "step budget per replica");
    sub->add_option("--threads", o.threads, "worker threads (0: all cores)");
    sub->add_flag("--resume", o.resume, "reuse finished replicas from a previous run");
    sub->add_flag("-q,--quiet", o.quiet, "print only failed assertions");
    sub->callback([&chosen, name] { chosen = name; });
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }
  try {
    return run(chosen, o);
  } catch (const cylwalk::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const cylwalk::BudgetError& e) {
    std::cerr << "budget rejected: " << e.what() << "\n";
    return 3;
  } catch (const cylwalk::IoError& e) {
    std::cerr << "i/o error: " << e.what() << "\n";
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
