#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

namespace cylwalk {

inline constexpr const char* kToolVersion = "0.3.0";

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct BudgetError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Flat view of an INI-style file: "section.key" -> raw text value.
class Config {
 public:
  Config() = default;

  static Config load(const std::string& path);
  static Config parse(const std::string& text);

  void set(const std::string& key, const std::string& value) { values_[key] = value; }
  bool has(const std::string& key) const { return values_.count(key) > 0; }
  const std::map<std::string, std::string>& values() const { return values_; }

  std::string get_string(const std::string& key, std::optional<std::string> fallback = std::nullopt) const;
  std::int64_t get_int(const std::string& key, std::optional<std::int64_t> fallback = std::nullopt) const;
  std::uint64_t get_u64(const std::string& key, std::optional<std::uint64_t> fallback = std::nullopt) const;
  double get_double(const std::string& key, std::optional<double> fallback = std::nullopt) const;
  bool get_bool(const std::string& key, std::optional<bool> fallback = std::nullopt) const;
  /// Comma-separated integers; "a..b" expands to the inclusive range.
  std::vector<std::int64_t> get_int_list(const std::string& key,
                                         std::optional<std::vector<std::int64_t>> fallback = std::nullopt) const;
  std::vector<double> get_double_list(const std::string& key,
                                      std::optional<std::vector<double>> fallback = std::nullopt) const;

  /// Rejects keys outside `allowed`, so typos do not pass silently.
  void require_known(const std::set<std::string>& allowed) const;

  nlohmann::json to_json() const;
  /// FNV-1a (64 bit) of the canonical JSON dump, as 16 hex digits.
  std::string hash() const;

 private:
  std::map<std::string, std::string> values_;
};

std::string fnv1a_hex(const std::string& bytes);

}  // namespace cylwalk
