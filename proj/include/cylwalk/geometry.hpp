#pragma once

#include <compare>
#include <cstdint>
#include <functional>
#include <set>
#include <span>
#include <vector>

namespace cylwalk {

/// A site of the cylinder (Z/NZ)^d x Z: d torus residues and a height.
struct CylinderPoint {
  std::vector<int> torus;
  std::int64_t z = 0;

  friend auto operator<=>(const CylinderPoint&, const CylinderPoint&) = default;
  friend bool operator==(const CylinderPoint&, const CylinderPoint&) = default;
};

/// Packed site used on the hot paths: the torus residues folded into one
/// mixed-radix cell index (axis 0 is the fastest digit) and a 32-bit height.
struct Site {
  std::uint32_t cell = 0;
  std::int32_t z = 0;

  friend bool operator==(Site, Site) = default;
};

enum class BlockKind { C, B, BTilde };

/// Closed integer height interval [lo, hi].
struct HeightRange {
  std::int64_t lo = 0;
  std::int64_t hi = -1;

  bool contains(std::int64_t z) const { return lo <= z && z <= hi; }
  std::int64_t size() const { return hi >= lo ? hi - lo + 1 : 0; }
  friend bool operator==(const HeightRange&, const HeightRange&) = default;
};

/// Heights of the block of the given kind around level j*N:
///   C_j   = [ceil((j - 3/4) N), floor((j + 3/4) N)]
///   B_j   = [(j - 1) N, (j + 1) N]
///   B~_j  = [(j - 2) N + 1, (j + 2) N - 1]
HeightRange block_heights(BlockKind kind, std::int64_t j, int N);

/// Affine coordinate sub-lattice projected into the cylinder. Axes are
/// 0-based; axis d is the vertical one. The base is canonical: its
/// coordinates along the plane's axes are zero.
struct LatticePlane {
  std::vector<int> axes;
  CylinderPoint base;

  friend auto operator<=>(const LatticePlane&, const LatticePlane&) = default;
  friend bool operator==(const LatticePlane&, const LatticePlane&) = default;
};

/// Direction encoding shared by every module: direction 2a is +e_a,
/// direction 2a + 1 is -e_a, for axes a in [0, d].
constexpr int direction_axis(int direction) { return direction >> 1; }
constexpr int direction_sign(int direction) { return (direction & 1) ? -1 : 1; }
constexpr int make_direction(int axis, int sign) { return 2 * axis + (sign < 0 ? 1 : 0); }

/// Segment of `length` edges: the length + 1 sites base + k * direction.
struct SegmentSpec {
  CylinderPoint base;
  int direction = 0;
  std::int64_t length = 0;
};

class Cylinder {
 public:
  /// Requires d >= 1, N >= 1 and N^d < 2^31.
  Cylinder(int d, int N);

  int dim() const { return d_; }
  int side() const { return N_; }
  std::uint32_t cells() const { return cells_; }
  int directions() const { return 2 * (d_ + 1); }
  int vertical_axis() const { return d_; }
  std::uint32_t stride(int axis) const { return stride_[static_cast<std::size_t>(axis)]; }

  /// Canonical projection Z^{d+1} -> E.
  CylinderPoint project(std::span<const std::int64_t> x) const;

  bool valid(const CylinderPoint& p) const;
  Site pack(const CylinderPoint& p) const;
  CylinderPoint unpack(Site s) const;

  int residue(std::uint32_t cell, int axis) const {
    return static_cast<int>((cell / stride_[axis]) % static_cast<std::uint32_t>(N_));
  }
  std::uint32_t shift_cell(std::uint32_t cell, int axis, int delta) const;

  Site step(Site s, int direction) const {
    const int axis = direction_axis(direction);
    if (axis == d_) {
      s.z += direction_sign(direction);
    } else {
      s.cell = shift_cell(s.cell, axis, direction_sign(direction));
    }
    return s;
  }
  CylinderPoint step(const CylinderPoint& p, int direction) const;

  /// Nearest neighbours, de-duplicated (duplicates only arise for N <= 2).
  std::vector<CylinderPoint> neighbors(const CylinderPoint& p) const;
  /// The 3^{d+1} - 1 sites at l-infinity distance one. Rejects N < 3.
  std::vector<CylinderPoint> star_neighbors(const CylinderPoint& p) const;
  /// Sites outside U having a nearest neighbour in U.
  std::set<CylinderPoint> boundary(const std::set<CylinderPoint>& U) const;

  std::int64_t torus_distance(int a, int b) const;
  std::int64_t linf_distance(const CylinderPoint& a, const CylinderPoint& b) const;

  bool in_block(const CylinderPoint& p, BlockKind kind, std::int64_t j) const {
    return block_heights(kind, j, N_).contains(p.z);
  }

  std::vector<CylinderPoint> segment_sites(const SegmentSpec& seg) const;

  bool plane_contains(const LatticePlane& plane, const CylinderPoint& p) const;
  /// Canonical plane through p spanned by `axes` (sorted, distinct).
  LatticePlane plane_through(const CylinderPoint& p, std::vector<int> axes) const;

  /// Every plane of dimension m meeting C_j, each exactly once, in
  /// canonical form. Rejects m outside [1, d + 1].
  void for_each_plane(std::int64_t j, int m, const std::function<void(const LatticePlane&)>& fn) const;
  std::vector<LatticePlane> enumerate_planes(std::int64_t j, int m) const;

 private:
  int d_;
  int N_;
  std::uint32_t cells_;
  std::vector<std::uint32_t> stride_;
};

/// All size-m subsets of {0, ..., n - 1} in lexicographic order.
std::vector<std::vector<int>> axis_subsets(int n, int m);

}  // namespace cylwalk
