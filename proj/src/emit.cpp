#include "cylwalk/emit.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "cylwalk/config.hpp"

namespace cylwalk {

Format parse_format(const std::string& name) {
  if (name == "csv") return Format::Csv;
  if (name == "json") return Format::Json;
  if (name == "svg") return Format::Svg;
  throw ConfigError("unknown output format '" + name + "'");
}

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, p);
}

namespace {

std::string quote(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

struct CellText {
  std::string operator()(std::monostate) const { return ""; }
  std::string operator()(bool b) const { return b ? "true" : "false"; }
  std::string operator()(std::int64_t v) const { return std::to_string(v); }
  std::string operator()(double v) const { return format_double(v); }
  std::string operator()(const std::string& s) const { return s; }
};

struct CellJson {
  nlohmann::json operator()(std::monostate) const { return nullptr; }
  nlohmann::json operator()(bool b) const { return b; }
  nlohmann::json operator()(std::int64_t v) const { return v; }
  nlohmann::json operator()(double v) const {
    if (!std::isfinite(v)) return nullptr;
    return v;
  }
  nlohmann::json operator()(const std::string& s) const { return s; }
};

void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << text;
  out.flush();
  if (!out) throw IoError("write failed for " + path.string());
}

}  // namespace

std::string format_cell(const Cell& c) { return std::visit(CellText{}, c); }

std::string to_csv(const ResultRecord& record) {
  std::ostringstream out;
  out << "# experiment=" << record.experiment << "\n";
  out << "# config_hash=" << record.config_hash << "\n";
  out << "# tool_version=" << record.tool_version << "\n";
  for (std::size_t i = 0; i < record.columns.size(); ++i) out << (i ? "," : "") << quote(record.columns[i]);
  out << "\n";
  for (const auto& row : record.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) out << (i ? "," : "") << quote(format_cell(row[i]));
    out << "\n";
  }
  return out.str();
}

nlohmann::json to_json(const ResultRecord& record) {
  nlohmann::json j;
  j["experiment"] = record.experiment;
  j["tool_version"] = record.tool_version;
  j["config_hash"] = record.config_hash;
  j["parameters"] = record.parameters;
  j["replicas"] = record.replicas;
  j["censored"] = record.censored;
  j["columns"] = record.columns;
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& row : record.rows) {
    nlohmann::json r = nlohmann::json::array();
    for (const auto& c : row) r.push_back(std::visit(CellJson{}, c));
    rows.push_back(std::move(r));
  }
  j["rows"] = std::move(rows);
  j["summary"] = record.summary;
  j["assertions"] = record.assertions;
  return j;
}

std::string to_svg(const Plot& plot) {
  const double W = 640, H = 420, left = 70, right = 170, top = 40, bottom = 50;
  auto tx = [&](double v) { return plot.log_x ? std::log10(v) : v; };
  auto ty = [&](double v) { return plot.log_y ? std::log10(v) : v; };
  double x0 = INFINITY, x1 = -INFINITY, y0 = INFINITY, y1 = -INFINITY;
  for (const auto& s : plot.series) {
    for (std::size_t i = 0; i < s.x.size() && i < s.y.size(); ++i) {
      const double a = tx(s.x[i]), b = ty(s.y[i]);
      if (!std::isfinite(a) || !std::isfinite(b)) continue;
      x0 = std::min(x0, a), x1 = std::max(x1, a), y0 = std::min(y0, b), y1 = std::max(y1, b);
    }
  }
  if (!(x0 <= x1)) x0 = 0, x1 = 1, y0 = 0, y1 = 1;
  if (x0 == x1) x0 -= 0.5, x1 += 0.5;
  if (y0 == y1) y0 -= 0.5, y1 += 0.5;
  const double pw = W - left - right, ph = H - top - bottom;
  auto px = [&](double a) { return left + (a - x0) / (x1 - x0) * pw; };
  auto py = [&](double b) { return top + ph - (b - y0) / (y1 - y0) * ph; };

  std::ostringstream o;
  o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  o << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  o << "<text x=\"" << W / 2 << "\" y=\"20\" text-anchor=\"middle\" font-size=\"14\">" << plot.title << "</text>\n";
  o << "<rect x=\"" << left << "\" y=\"" << top << "\" width=\"" << pw << "\" height=\"" << ph
    << "\" fill=\"none\" stroke=\"black\"/>\n";
  for (int k = 0; k <= 4; ++k) {
    const double a = x0 + (x1 - x0) * k / 4, b = y0 + (y1 - y0) * k / 4;
    const double va = plot.log_x ? std::pow(10, a) : a, vb = plot.log_y ? std::pow(10, b) : b;
    char la[32], lb[32];
    std::snprintf(la, sizeof la, "%.3g", va);
    std::snprintf(lb, sizeof lb, "%.3g", vb);
    o << "<text x=\"" << px(a) << "\" y=\"" << top + ph + 16 << "\" text-anchor=\"middle\">" << la << "</text>\n";
    o << "<text x=\"" << left - 6 << "\" y=\"" << py(b) + 4 << "\" text-anchor=\"end\">" << lb << "</text>\n";
  }
  o << "<text x=\"" << left + pw / 2 << "\" y=\"" << H - 12 << "\" text-anchor=\"middle\">" << plot.xlabel << "</text>\n";
  o << "<text x=\"16\" y=\"" << top + ph / 2 << "\" text-anchor=\"middle\" transform=\"rotate(-90 16 " << top + ph / 2
    << ")\">" << plot.ylabel << "</text>\n";
  static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#17becf"};
  for (std::size_t si = 0; si < plot.series.size(); ++si) {
    const auto& s = plot.series[si];
    const char* color = colors[si % 7];
    o << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
    double prev_y = NAN;
    for (std::size_t i = 0; i < s.x.size() && i < s.y.size(); ++i) {
      const double a = tx(s.x[i]), b = ty(s.y[i]);
      if (!std::isfinite(a) || !std::isfinite(b)) continue;
      if (plot.steps && std::isfinite(prev_y)) o << px(a) << "," << py(prev_y) << " ";
      o << px(a) << "," << py(b) << " ";
      prev_y = b;
    }
    o << "\"/>\n";
    const double ly = top + 14 + 18 * static_cast<double>(si);
    o << "<line x1=\"" << W - right + 12 << "\" y1=\"" << ly << "\" x2=\"" << W - right + 36 << "\" y2=\"" << ly
      << "\" stroke=\"" << color << "\" stroke-width=\"2\"/>\n";
    o << "<text x=\"" << W - right + 42 << "\" y=\"" << ly + 4 << "\">" << s.name << "</text>\n";
  }
  o << "</svg>\n";
  return o.str();
}

std::vector<std::string> emit(const ResultRecord& record, const std::string& out_dir, const std::set<Format>& formats) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) throw IoError("cannot create output directory " + out_dir + ": " + ec.message());
  std::vector<std::string> written;
  const fs::path base = fs::path(out_dir) / record.experiment;
  if (formats.count(Format::Csv)) {
    write_file(base.string() + ".csv", to_csv(record));
    written.push_back(base.string() + ".csv");
  }
  if (formats.count(Format::Json)) {
    write_file(base.string() + ".json", to_json(record).dump(2) + "\n");
    written.push_back(base.string() + ".json");
  }
  if (formats.count(Format::Svg)) {
    for (const auto& plot : record.plots) {
      const std::string path = base.string() + "_" + plot.name + ".svg";
      write_file(path, to_svg(plot));
      written.push_back(path);
    }
  }
  return written;
}

CsvTable parse_csv(const std::string& text) {
  CsvTable table;
  std::vector<std::vector<std::string>> lines;
  std::vector<std::string> row;
  std::string field;
  bool quoted = false, any = false;
  std::size_t i = 0;
  // Metadata lines come first.
  while (i < text.size() && text[i] == '#') {
    const auto end = text.find('\n', i);
    const std::string line = text.substr(i + 2, (end == std::string::npos ? text.size() : end) - i - 2);
    const auto eq = line.find('=');
    if (eq != std::string::npos) table.meta[line.substr(0, eq)] = line.substr(eq + 1);
    i = end == std::string::npos ? text.size() : end + 1;
  }
  for (; i < text.size(); ++i) {
    const char c = text[i];
    if (quoted) {
      if (c == '"' && i + 1 < text.size() && text[i + 1] == '"') {
        field += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        field += c;
      }
      continue;
    }
    any = true;
    if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      row.push_back(std::move(field));
      field.clear();
    } else if (c == '\n') {
      row.push_back(std::move(field));
      field.clear();
      lines.push_back(std::move(row));
      row.clear();
      any = false;
    } else {
      field += c;
    }
  }
  if (any) {
    row.push_back(std::move(field));
    lines.push_back(std::move(row));
  }
  if (lines.empty()) throw IoError("csv has no header line");
  table.columns = std::move(lines.front());
  table.rows.assign(std::make_move_iterator(lines.begin() + 1), std::make_move_iterator(lines.end()));
  return table;
}

CsvTable load_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_csv(buf.str());
}

}  // namespace cylwalk
