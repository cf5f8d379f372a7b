#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

namespace cylwalk {

/// Empty cells stand for censored or undefined values.
using Cell = std::variant<std::monostate, bool, std::int64_t, double, std::string>;

struct Series {
  std::string name;
  std::vector<double> x;
  std::vector<double> y;
};

struct Plot {
  std::string name;  // file suffix
  std::string title;
  std::string xlabel;
  std::string ylabel;
  bool steps = false;  // draw as an empirical CDF
  bool log_x = false;
  bool log_y = false;
  std::vector<Series> series;
};

struct ResultRecord {
  std::string experiment;
  std::map<std::string, std::string> parameters;
  std::string config_hash;
  std::string tool_version;
  std::uint64_t replicas = 0;
  std::uint64_t censored = 0;
  std::vector<std::string> columns;
  std::vector<std::vector<Cell>> rows;
  nlohmann::json summary = nlohmann::json::object();
  /// Post-run property checks: name -> held.
  std::map<std::string, bool> assertions;
  std::vector<Plot> plots;
};

enum class Format { Csv, Json, Svg };

Format parse_format(const std::string& name);

/// Writes <out_dir>/<experiment>.{csv,json,svg...}; returns the paths written.
/// The SVG format is skipped when the record carries no plots.
std::vector<std::string> emit(const ResultRecord& record, const std::string& out_dir, const std::set<Format>& formats);

std::string to_csv(const ResultRecord& record);
nlohmann::json to_json(const ResultRecord& record);
std::string to_svg(const Plot& plot);

/// Shortest decimal text that parses back to the same double.
std::string format_double(double v);
std::string format_cell(const Cell& c);

struct CsvTable {
  std::map<std::string, std::string> meta;  // from "# key=value" lines
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;
};

CsvTable load_csv(const std::string& path);
CsvTable parse_csv(const std::string& text);

}  // namespace cylwalk
