#pragma once

#include <cstdint>
#include <functional>
#include <set>
#include <string>
#include <vector>

#include "cylwalk/config.hpp"
#include "cylwalk/emit.hpp"

namespace cylwalk {

/// Keys shared by every experiment, under [experiment]:
///   id, seed, replicas, budget, threads, resume, out_dir, formats.
struct RunSettings {
  std::string id;
  std::uint64_t seed = 1;
  std::uint64_t replicas = 100;
  std::uint64_t budget = 1000000000;  // steps per replica
  unsigned threads = 0;               // 0: one per hardware thread
  bool resume = false;
  std::string out_dir = "out";
  std::set<Format> formats{Format::Csv, Format::Json};
};

RunSettings run_settings(const Config& cfg, const std::string& default_id);

/// Runs fn(unit) for unit = 0 .. count - 1 over a pool of worker threads.
/// Results come back in unit order regardless of scheduling. With resume
/// on, finished units are appended to <out_dir>/<id>.resume.jsonl and
/// reused by a later run with the same config hash.
std::vector<nlohmann::json> run_units(const RunSettings& run, const std::string& config_hash, const std::string& group,
                                      std::uint64_t count, const std::function<nlohmann::json(std::uint64_t)>& fn);

/// Independent generator stream index for a tuple of small keys.
std::uint64_t stream_key(std::initializer_list<std::uint64_t> parts);

/// Rough step count of one disconnection run, used for budget admission.
double estimated_disconnection_steps(int d, int N);

ResultRecord run_disconnect(const Config& cfg);
ResultRecord run_scaling(const Config& cfg);
ResultRecord run_excursion_budget(const Config& cfg);
ResultRecord run_vacant_events(const Config& cfg);
ResultRecord run_exponential_bound(const Config& cfg);
ResultRecord run_localtime_identity(const Config& cfg);
ResultRecord run_qtable(const Config& cfg);
ResultRecord run_thresholds(const Config& cfg);
ResultRecord run_peierls(const Config& cfg);

/// Dispatch by subcommand name; throws ConfigError for unknown names.
ResultRecord run_experiment(const std::string& name, const Config& cfg);
const std::vector<std::string>& experiment_names();

/// Every key an experiment accepts, for documentation and validation.
std::set<std::string> known_keys(const std::string& name);

}  // namespace cylwalk
