#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "cylwalk/geometry.hpp"

namespace cylwalk {

inline constexpr int kTrajectoryFormatVersion = 1;

struct TrajectoryHeader {
  int version = kTrajectoryFormatVersion;
  int d = 1;
  int N = 2;
  std::uint64_t seed = 0;
  std::uint64_t stream = 0;
};

struct LoadedTrajectory {
  TrajectoryHeader header;
  std::vector<Site> path;
};

/// One JSON header line, then 16-byte little-endian records
/// (u64 step index, u32 cell, i32 height). See docs/trajectory-format.md.
void write_trajectory(const std::string& file, const TrajectoryHeader& header, std::span<const Site> path);
LoadedTrajectory read_trajectory(const std::string& file);

}  // namespace cylwalk
