#include "cylwalk/config.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace cylwalk {

namespace {

Config from_tree(const boost::property_tree::ptree& tree) {
  Config cfg;
  for (const auto& [section, body] : tree) {
    if (body.empty()) {
      cfg.set(section, body.data());
      continue;
    }
    for (const auto& [key, leaf] : body) cfg.set(section + "." + key, leaf.data());
  }
  return cfg;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream in(s);
  std::string item;
  while (std::getline(in, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

template <class T>
T parse_number(const std::string& key, const std::string& raw) {
  const std::string s = trim(raw);
  T v{};
  if constexpr (std::is_floating_point_v<T>) {
    // Accept "1e9" style literals for integers too.
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || p != s.data() + s.size()) throw ConfigError("key '" + key + "': not a number: " + raw);
  } else {
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || p != s.data() + s.size()) {
      double d = 0;
      auto [q, ec2] = std::from_chars(s.data(), s.data() + s.size(), d);
      if (ec2 != std::errc() || q != s.data() + s.size() || d != static_cast<double>(static_cast<T>(d))) {
        throw ConfigError("key '" + key + "': not an integer: " + raw);
      }
      v = static_cast<T>(d);
    }
  }
  return v;
}

}  // namespace

Config Config::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return parse(buf.str());
}

Config Config::parse(const std::string& text) {
  boost::property_tree::ptree tree;
  std::istringstream in(text);
  try {
    boost::property_tree::read_ini(in, tree);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw ConfigError(std::string("config parse error: ") + e.what());
  }
  return from_tree(tree);
}

std::string Config::get_string(const std::string& key, std::optional<std::string> fallback) const {
  auto it = values_.find(key);
  if (it != values_.end()) return trim(it->second);
  if (fallback) return *fallback;
  throw ConfigError("missing config key '" + key + "'");
}

std::int64_t Config::get_int(const std::string& key, std::optional<std::int64_t> fallback) const {
  if (!has(key)) {
    if (fallback) return *fallback;
    throw ConfigError("missing config key '" + key + "'");
  }
  return parse_number<std::int64_t>(key, values_.at(key));
}

std::uint64_t Config::get_u64(const std::string& key, std::optional<std::uint64_t> fallback) const {
  if (!has(key)) {
    if (fallback) return *fallback;
    throw ConfigError("missing config key '" + key + "'");
  }
  const std::string s = trim(values_.at(key));
  if (!s.empty() && s[0] == '-') throw ConfigError("key '" + key + "' must be nonnegative");
  return parse_number<std::uint64_t>(key, s);
}

double Config::get_double(const std::string& key, std::optional<double> fallback) const {
  if (!has(key)) {
    if (fallback) return *fallback;
    throw ConfigError("missing config key '" + key + "'");
  }
  return parse_number<double>(key, values_.at(key));
}

bool Config::get_bool(const std::string& key, std::optional<bool> fallback) const {
  if (!has(key)) {
    if (fallback) return *fallback;
    throw ConfigError("missing config key '" + key + "'");
  }
  const std::string s = trim(values_.at(key));
  if (s == "true" || s == "1" || s == "yes" || s == "on") return true;
  if (s == "false" || s == "0" || s == "no" || s == "off") return false;
  throw ConfigError("key '" + key + "': not a boolean: " + s);
}

std::vector<std::int64_t> Config::get_int_list(const std::string& key,
                                               std::optional<std::vector<std::int64_t>> fallback) const {
  if (!has(key)) {
    if (fallback) return *fallback;
    throw ConfigError("missing config key '" + key + "'");
  }
  std::vector<std::int64_t> out;
  for (const auto& item : split(values_.at(key))) {
    const auto dots = item.find("..");
    if (dots == std::string::npos) {
      out.push_back(parse_number<std::int64_t>(key, item));
      continue;
    }
    const auto lo = parse_number<std::int64_t>(key, item.substr(0, dots));
    const auto hi = parse_number<std::int64_t>(key, item.substr(dots + 2));
    if (hi < lo || hi - lo > 100000) throw ConfigError("key '" + key + "': bad range " + item);
    for (auto v = lo; v <= hi; ++v) out.push_back(v);
  }
  if (out.empty()) throw ConfigError("key '" + key + "' is an empty list");
  return out;
}

std::vector<double> Config::get_double_list(const std::string& key,
                                            std::optional<std::vector<double>> fallback) const {
  if (!has(key)) {
    if (fallback) return *fallback;
    throw ConfigError("missing config key '" + key + "'");
  }
  std::vector<double> out;
  for (const auto& item : split(values_.at(key))) out.push_back(parse_number<double>(key, item));
  if (out.empty()) throw ConfigError("key '" + key + "' is an empty list");
  return out;
}

void Config::require_known(const std::set<std::string>& allowed) const {
  for (const auto& [key, value] : values_) {
    if (!allowed.count(key)) throw ConfigError("unknown config key '" + key + "'");
  }
}

nlohmann::json Config::to_json() const {
  nlohmann::json j = nlohmann::json::object();
  for (const auto& [k, v] : values_) j[k] = trim(v);
  return j;
}

std::string fnv1a_hex(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string Config::hash() const { return fnv1a_hex(to_json().dump()); }

}  // namespace cylwalk
