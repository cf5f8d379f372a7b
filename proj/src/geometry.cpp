#include "cylwalk/geometry.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>

namespace cylwalk {
namespace {

std::int64_t floor_div(std::int64_t a, std::int64_t b) {
  std::int64_t q = a / b;
  if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
  return q;
}

std::int64_t ceil_div(std::int64_t a, std::int64_t b) { return -floor_div(-a, b); }

int mod(std::int64_t a, int n) {
  std::int64_t r = a % n;
  return static_cast<int>(r < 0 ? r + n : r);
}

}  // namespace

HeightRange block_heights(BlockKind kind, std::int64_t j, int N) {
  const std::int64_t n = N;
  switch (kind) {
    case BlockKind::C:
      return {ceil_div((4 * j - 3) * n, 4), floor_div((4 * j + 3) * n, 4)};
    case BlockKind::B:
      return {(j - 1) * n, (j + 1) * n};
    case BlockKind::BTilde:
      return {(j - 2) * n + 1, (j + 2) * n - 1};
  }
  throw std::logic_error("unknown block kind");
}

Cylinder::Cylinder(int d, int N) : d_(d), N_(N), cells_(1), stride_(static_cast<std::size_t>(d)) {
  if (d < 1) throw std::invalid_argument("cylinder dimension d must be >= 1");
  if (N < 1) throw std::invalid_argument("cylinder side N must be >= 1");
  std::uint64_t cells = 1;
  for (int a = 0; a < d; ++a) {
    stride_[static_cast<std::size_t>(a)] = static_cast<std::uint32_t>(cells);
    cells *= static_cast<std::uint64_t>(N);
    if (cells >= (1ULL << 31)) {
      throw std::invalid_argument("N^d = " + std::to_string(N) + "^" + std::to_string(d) +
                                  " exceeds the 2^31 cell limit");
    }
  }
  cells_ = static_cast<std::uint32_t>(cells);
}

CylinderPoint Cylinder::project(std::span<const std::int64_t> x) const {
  if (x.size() != static_cast<std::size_t>(d_ + 1)) {
    throw std::invalid_argument("project expects a (d+1)-vector");
  }
  CylinderPoint p;
  p.torus.resize(static_cast<std::size_t>(d_));
  for (int a = 0; a < d_; ++a) p.torus[static_cast<std::size_t>(a)] = mod(x[static_cast<std::size_t>(a)], N_);
  p.z = x[static_cast<std::size_t>(d_)];
  return p;
}

bool Cylinder::valid(const CylinderPoint& p) const {
  if (p.torus.size() != static_cast<std::size_t>(d_)) return false;
  return std::all_of(p.torus.begin(), p.torus.end(), [&](int r) { return r >= 0 && r < N_; });
}

Site Cylinder::pack(const CylinderPoint& p) const {
  if (!valid(p)) throw std::invalid_argument("point is not a reduced cylinder site");
  if (p.z < INT32_MIN || p.z > INT32_MAX) throw std::overflow_error("height does not fit in 32 bits");
  std::uint32_t cell = 0;
  for (int a = 0; a < d_; ++a) cell += static_cast<std::uint32_t>(p.torus[static_cast<std::size_t>(a)]) * stride_[static_cast<std::size_t>(a)];
  return {cell, static_cast<std::int32_t>(p.z)};
}

CylinderPoint Cylinder::unpack(Site s) const {
  CylinderPoint p;
  p.torus.resize(static_cast<std::size_t>(d_));
  for (int a = 0; a < d_; ++a) p.torus[static_cast<std::size_t>(a)] = residue(s.cell, a);
  p.z = s.z;
  return p;
}

std::uint32_t Cylinder::shift_cell(std::uint32_t cell, int axis, int delta) const {
  const std::uint32_t stride = stride_[static_cast<std::size_t>(axis)];
  const int r = residue(cell, axis);
  const int nr = mod(r + delta, N_);
  return cell + static_cast<std::uint32_t>(nr) * stride - static_cast<std::uint32_t>(r) * stride;
}

CylinderPoint Cylinder::step(const CylinderPoint& p, int direction) const {
  CylinderPoint q = p;
  const int axis = direction_axis(direction);
  if (axis == d_) {
    q.z += direction_sign(direction);
  } else {
    auto& r = q.torus[static_cast<std::size_t>(axis)];
    r = mod(r + direction_sign(direction), N_);
  }
  return q;
}

std::vector<CylinderPoint> Cylinder::neighbors(const CylinderPoint& p) const {
  std::vector<CylinderPoint> out;
  out.reserve(static_cast<std::size_t>(directions()));
  for (int dir = 0; dir < directions(); ++dir) {
    CylinderPoint q = step(p, dir);
    if (q != p && std::find(out.begin(), out.end(), q) == out.end()) out.push_back(std::move(q));
  }
  return out;
}

std::vector<CylinderPoint> Cylinder::star_neighbors(const CylinderPoint& p) const {
  if (N_ < 3) throw std::invalid_argument("star neighbourhoods require N >= 3");
  std::vector<CylinderPoint> out;
  std::vector<int> offset(static_cast<std::size_t>(d_ + 1), -1);
  while (true) {
    if (std::any_of(offset.begin(), offset.end(), [](int o) { return o != 0; })) {
      CylinderPoint q = p;
      for (int a = 0; a < d_; ++a) {
        auto& r = q.torus[static_cast<std::size_t>(a)];
        r = mod(r + offset[static_cast<std::size_t>(a)], N_);
      }
      q.z += offset[static_cast<std::size_t>(d_)];
      out.push_back(std::move(q));
    }
    std::size_t k = 0;
    while (k < offset.size() && offset[k] == 1) offset[k++] = -1;
    if (k == offset.size()) break;
    ++offset[k];
  }
  return out;
}

std::set<CylinderPoint> Cylinder::boundary(const std::set<CylinderPoint>& U) const {
  std::set<CylinderPoint> out;
  for (const auto& u : U) {
    for (auto& v : neighbors(u)) {
      if (!U.contains(v)) out.insert(std::move(v));
    }
  }
  return out;
}

std::int64_t Cylinder::torus_distance(int a, int b) const {
  const int diff = mod(static_cast<std::int64_t>(a) - b, N_);
  return std::min(diff, N_ - diff);
}

std::int64_t Cylinder::linf_distance(const CylinderPoint& a, const CylinderPoint& b) const {
  std::int64_t best = a.z > b.z ? a.z - b.z : b.z - a.z;
  for (int k = 0; k < d_; ++k) {
    best = std::max(best, torus_distance(a.torus[static_cast<std::size_t>(k)], b.torus[static_cast<std::size_t>(k)]));
  }
  return best;
}

std::vector<CylinderPoint> Cylinder::segment_sites(const SegmentSpec& seg) const {
  if (seg.length < 0) throw std::invalid_argument("segment length must be non-negative");
  if (seg.direction < 0 || seg.direction >= directions()) throw std::invalid_argument("bad direction");
  std::vector<CylinderPoint> out;
  out.reserve(static_cast<std::size_t>(seg.length + 1));
  CylinderPoint p = seg.base;
  for (std::int64_t k = 0; k <= seg.length; ++k) {
    out.push_back(p);
    p = step(p, seg.direction);
  }
  return out;
}

bool Cylinder::plane_contains(const LatticePlane& plane, const CylinderPoint& p) const {
  auto on_axis = [&](int a) { return std::find(plane.axes.begin(), plane.axes.end(), a) != plane.axes.end(); };
  for (int a = 0; a < d_; ++a) {
    if (!on_axis(a) && p.torus[static_cast<std::size_t>(a)] != plane.base.torus[static_cast<std::size_t>(a)]) return false;
  }
  return on_axis(d_) || p.z == plane.base.z;
}

LatticePlane Cylinder::plane_through(const CylinderPoint& p, std::vector<int> axes) const {
  std::sort(axes.begin(), axes.end());
  if (std::adjacent_find(axes.begin(), axes.end()) != axes.end()) throw std::invalid_argument("repeated plane axis");
  LatticePlane plane{std::move(axes), p};
  for (int a : plane.axes) {
    if (a < 0 || a > d_) throw std::invalid_argument("plane axis out of range");
    if (a == d_) {
      plane.base.z = 0;
    } else {
      plane.base.torus[static_cast<std::size_t>(a)] = 0;
    }
  }
  return plane;
}

std::vector<std::vector<int>> axis_subsets(int n, int m) {
  std::vector<std::vector<int>> out;
  if (m < 0 || m > n) return out;
  std::vector<int> pick(static_cast<std::size_t>(m));
  for (int i = 0; i < m; ++i) pick[static_cast<std::size_t>(i)] = i;
  while (true) {
    out.push_back(pick);
    int i = m - 1;
    while (i >= 0 && pick[static_cast<std::size_t>(i)] == n - m + i) --i;
    if (i < 0) break;
    ++pick[static_cast<std::size_t>(i)];
    for (int k = i + 1; k < m; ++k) pick[static_cast<std::size_t>(k)] = pick[static_cast<std::size_t>(k - 1)] + 1;
  }
  return out;
}

void Cylinder::for_each_plane(std::int64_t j, int m,
                              const std::function<void(const LatticePlane&)>& fn) const {
  if (m < 1 || m > d_ + 1) throw std::invalid_argument("plane dimension m must lie in [1, d+1]");
  const HeightRange c = block_heights(BlockKind::C, j, N_);
  for (auto& axes : axis_subsets(d_ + 1, m)) {
    const bool vertical = axes.back() == d_;
    std::vector<int> free_torus;
    for (int a = 0; a < d_; ++a) {
      if (std::find(axes.begin(), axes.end(), a) == axes.end()) free_torus.push_back(a);
    }
    LatticePlane plane{axes, CylinderPoint{std::vector<int>(static_cast<std::size_t>(d_), 0), 0}};
    const std::int64_t z_lo = vertical ? 0 : c.lo;
    const std::int64_t z_hi = vertical ? 0 : c.hi;
    for (std::int64_t z = z_lo; z <= z_hi; ++z) {
      plane.base.z = z;
      std::vector<int> digits(free_torus.size(), 0);
      while (true) {
        for (std::size_t k = 0; k < free_torus.size(); ++k) {
          plane.base.torus[static_cast<std::size_t>(free_torus[k])] = digits[k];
        }
        fn(plane);
        std::size_t k = 0;
        while (k < digits.size() && digits[k] == N_ - 1) digits[k++] = 0;
        if (k == digits.size()) break;
        ++digits[k];
      }
    }
  }
}

std::vector<LatticePlane> Cylinder::enumerate_planes(std::int64_t j, int m) const {
  std::vector<LatticePlane> out;
  for_each_plane(j, m, [&](const LatticePlane& p) { out.push_back(p); });
  return out;
}

}  // namespace cylwalk
