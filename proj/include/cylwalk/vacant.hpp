#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "cylwalk/geometry.hpp"
#include "cylwalk/walk.hpp"

namespace cylwalk {

/// The trace X_[0,n] as a read-only predicate over sites: a site is in the
/// trace iff its first-hit time is at most n.
class TraceView {
 public:
  TraceView(const Cylinder& cyl, const FirstHitIndex& hits, std::uint64_t n) : cyl_(&cyl), hits_(&hits), n_(n) {}

  bool visited(std::uint32_t cell, std::int64_t z) const { return hits_->raw(cell, z) <= n_; }
  bool visited(Site s) const { return visited(s.cell, s.z); }
  const Cylinder& cylinder() const { return *cyl_; }
  const FirstHitIndex& index() const { return *hits_; }
  std::uint64_t time() const { return n_; }

 private:
  const Cylinder* cyl_;
  const FirstHitIndex* hits_;
  std::uint64_t n_;
};

/// Index in which every listed site has first-hit time 0, so that
/// TraceView(cyl, index, 0) views exactly that set.
FirstHitIndex index_of(const Cylinder& cyl, std::span<const CylinderPoint> sites);

/// Finite slab standing in for the infinite cylinder: every site outside
/// [z_min, z_max] is vacant, with virtual TOP and BOTTOM terminals attached
/// to the two faces.
struct SlabSnapshot {
  TraceView trace;
  std::int64_t z_min = 0;
  std::int64_t z_max = 0;
};

/// Slab spanning the trace's height range padded by `padding` levels.
SlabSnapshot make_slab(const TraceView& trace, std::int64_t padding = 1);

struct ComponentLabeling {
  std::int64_t z_min = 0;
  std::int64_t z_max = 0;
  std::uint32_t cells = 0;
  /// Component id per slab site, -1 for visited sites.
  std::vector<std::int32_t> label;
  std::int32_t top = -1;
  std::int32_t bottom = -1;
  std::int32_t components = 0;

  std::int32_t label_of(Site s) const {
    return label[static_cast<std::size_t>(s.z - z_min) * cells + s.cell];
  }
  bool separated() const { return top != bottom; }
};

/// Union-find labelling of the vacant sites of the slab with the terminals.
ComponentLabeling label_components(const SlabSnapshot& slab);

/// True iff the trace separates the two infinite ends of the cylinder.
bool is_disconnecting(const TraceView& trace);
bool is_disconnecting(const Cylinder& cyl, std::span<const CylinderPoint> sites);

struct DisconnectOptions {
  /// Steps between connectivity checks; 0 selects N^d.
  std::uint64_t cadence = 0;
  /// When positive, the interval between checks grows to growth * n.
  double growth = 0.0;
};

struct DisconnectResult {
  /// First n with X_[0,n] disconnecting; nullopt when the step cap was hit first.
  std::optional<std::uint64_t> time;
  std::uint64_t steps = 0;
  std::uint64_t checks = 0;
};

/// Runs the walk with periodic checks and binary-searches the first
/// disconnecting prefix between the last negative and first positive check.
DisconnectResult disconnection_time(const WalkConfig& config, const DisconnectOptions& options = {});

/// floor(K ln N): the integer part of K log N.
std::int64_t log_segment_length(double K, int N);
/// Number of admissible offsets: #{i >= 0 : i < sqrt(N)}.
int offset_count(int N);

/// For each anchor x in C_j and direction e, the smallest offset i < sqrt(N)
/// with x + (i + [0, L]) e entirely vacant, or -1.
struct SegmentCensus {
  std::int64_t z_lo = 0;
  std::uint32_t cells = 0;
  std::vector<int> directions;
  std::int64_t segment_length = 0;
  int offsets = 0;
  std::vector<std::int16_t> first_offset;
  std::uint64_t failures = 0;

  std::optional<int> at(Site anchor, int direction) const;
};

struct VResult {
  bool holds = false;
  SegmentCensus census;
};

/// Event V at the given trace: every anchor of C_j sees a vacant segment of
/// length [K log N] at some offset below sqrt(N), along every direction
/// (only the d + 1 positive ones when signed_directions is false).
VResult check_V(const TraceView& trace, double K, std::int64_t j, bool signed_directions = true);

struct UOptions {
  /// Planes of L_2 are enumerated exhaustively up to this side length and
  /// sampled above it.
  int full_enumeration_max_N = 16;
  std::size_t sampled_planes = 256;
  std::uint64_t sample_seed = 0;
};

struct UResult {
  bool holds = true;
  std::size_t planes_checked = 0;
  bool sampled = false;
  std::optional<LatticePlane> witness;
};

/// Event U at the given trace: inside every plane section F cap C_j, at most
/// one vacant component has l-infinity diameter >= [K log N]. Checking maximal
/// components is equivalent to checking all connected subsets.
UResult check_U(const TraceView& trace, double K, std::int64_t j, const UOptions& options = {});

struct GResult {
  bool v = false;
  bool u = false;
  bool holds() const { return v && u; }
};

GResult check_G(const TraceView& trace, double K, std::int64_t j, const UOptions& options = {},
                bool signed_directions = true);

struct LinkageVerdict {
  /// Every line of L_1 meeting C_j contains a vacant segment of length L0 inside C_j.
  bool every_line_has_segment = true;
  /// All vacant segments of length L0 inside C_j share one component of C_j minus the trace.
  bool segments_connected = true;
  std::uint64_t vacant_segments = 0;
  std::uint64_t segment_components = 0;
  bool holds() const { return every_line_has_segment && segments_connected; }
};

LinkageVerdict segment_linkage(const TraceView& trace, std::int64_t j, std::int64_t L0);

/// True when the geometric hypotheses under which G forces segment linkage
/// are met: L0 below the torus l-infinity diameter and vertical segments
/// found by V fitting inside C_j.
bool linkage_hypotheses_hold(int N, std::int64_t L0);

enum class UTiming { EveryBoundary, FinalOnly };

/// Event value at the excursion clock D^j_[t]; nullopt when that departure
/// has not been observed (censored).
struct EventOutcome {
  std::optional<bool> value;
  std::optional<std::uint64_t> n;
};

EventOutcome check_V_at(const Cylinder& cyl, const FirstHitIndex& hits, const ExcursionLedger& ledger, double K,
                        double t, bool signed_directions = true);
EventOutcome check_U_at(const Cylinder& cyl, const FirstHitIndex& hits, const ExcursionLedger& ledger, double K,
                        double t, UTiming timing = UTiming::EveryBoundary, const UOptions& options = {});

}  // namespace cylwalk
