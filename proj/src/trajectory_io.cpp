#include "cylwalk/trajectory_io.hpp"

#include <fstream>
#include <json.hpp>

#include "cylwalk/config.hpp"

namespace cylwalk {

namespace {

void put_le(std::ostream& out, std::uint64_t v, int bytes) {
  char buf[8];
  for (int i = 0; i < bytes; ++i) buf[i] = static_cast<char>((v >> (8 * i)) & 0xff);
  out.write(buf, bytes);
}

std::uint64_t get_le(const unsigned char* p, int bytes) {
  std::uint64_t v = 0;
  for (int i = bytes - 1; i >= 0; --i) v = (v << 8) | p[i];
  return v;
}

}  // namespace

void write_trajectory(const std::string& file, const TrajectoryHeader& header, std::span<const Site> path) {
  std::ofstream out(file, std::ios::binary);
  if (!out) throw IoError("cannot open " + file + " for writing");
  nlohmann::json h{{"format", "cylwalk-trajectory"}, {"version", header.version}, {"d", header.d},
                   {"N", header.N},                  {"seed", header.seed},       {"stream", header.stream},
                   {"record_bytes", 16},             {"records", path.size()}};
  out << h.dump() << '\n';
  for (std::size_t n = 0; n < path.size(); ++n) {
    put_le(out, n, 8);
    put_le(out, path[n].cell, 4);
    put_le(out, static_cast<std::uint32_t>(path[n].z), 4);
  }
  if (!out) throw IoError("write failed for " + file);
}

LoadedTrajectory read_trajectory(const std::string& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw IoError("cannot open " + file);
  std::string line;
  if (!std::getline(in, line)) throw IoError(file + ": missing header");
  nlohmann::json h;
  try {
    h = nlohmann::json::parse(line);
  } catch (const nlohmann::json::exception& e) {
    throw IoError(file + ": bad header: " + e.what());
  }
  if (h.value("format", "") != "cylwalk-trajectory") throw IoError(file + ": not a trajectory file");
  LoadedTrajectory t;
  t.header.version = h.at("version").get<int>();
  if (t.header.version != kTrajectoryFormatVersion) {
    throw IoError(file + ": unsupported version " + std::to_string(t.header.version));
  }
  t.header.d = h.at("d").get<int>();
  t.header.N = h.at("N").get<int>();
  t.header.seed = h.at("seed").get<std::uint64_t>();
  t.header.stream = h.at("stream").get<std::uint64_t>();
  const auto records = h.at("records").get<std::uint64_t>();
  t.path.reserve(records);
  unsigned char rec[16];
  for (std::uint64_t n = 0; n < records; ++n) {
    if (!in.read(reinterpret_cast<char*>(rec), 16)) throw IoError(file + ": truncated at record " + std::to_string(n));
    if (get_le(rec, 8) != n) throw IoError(file + ": record " + std::to_string(n) + " out of order");
    t.path.push_back(Site{static_cast<std::uint32_t>(get_le(rec + 8, 4)),
                          static_cast<std::int32_t>(static_cast<std::uint32_t>(get_le(rec + 12, 4)))});
  }
  return t;
}

}  // namespace cylwalk
