#pragma once

#include <array>

#include "lerw/path_ops.hpp"

namespace lerw {

// Occupation measure of a simple path at mesh n: one atom of mass 2^{-beta n}
// per visited lattice point. All atoms carry the same weight, so the measure
// is stored as its support plus that weight.
struct OccupationMeasure {
  int mesh = 0;
  double beta_used = 0;
  double atom_mass = 0;
  std::vector<Vec3i> support;  // path points, path order

  double total_mass() const { return atom_mass * double(support.size()); }
};

// enforce_range: reject beta outside (1, 5/3] (callers may override to probe
// out-of-range values deliberately).
OccupationMeasure occupation_measure(const SimplePath& path, double beta,
                                     bool enforce_range = true);

// Covering of the closed unit ball by closed axis-aligned boxes of side eps
// with centers on the eps sublattice of the (eps/2) grid: the tiling cells
// whose interior meets the open ball. Removing the zero-overlap fringe keeps
// the cover minimal in the tiling family; the union still contains the
// closed ball. The box containing the origin is listed first, the rest in
// lexicographic cell order. Box count scales like eps^{-3}.
struct BoxCover {
  double eps = 0;
  std::vector<Vec3i> cells;            // integer cell coordinates k, center = eps*k
  std::vector<std::array<double, 3>> centers;  // eps * cells[i]

  // smallest-index cover box containing p; -1 if p is in no box
  std::ptrdiff_t assign(double px, double py, double pz) const;
  // indices of boxes whose centers are farther than threshold (euclidean)
  // from both the origin and the unit sphere
  std::vector<std::size_t> typical_indices(double threshold) const;

  PointMap cell_index;  // pack_point(cell) -> position in cells
};

BoxCover minimal_cover(double eps);

// Two-scale box partition: a coarse cube B of side 2^{-k} split into fine
// cubes of side 2^{-q}; each fine cube B_i has a concentric enlargement B_i'
// of half-side (enlargement * fine side), default factor 3. The fine
// exponent follows the k^4 rule while the mesh resolves it (k^4 <= n - 2);
// past that it falls back to the midpoint (n + k) / 2 clamped to [k, n - 2],
// keeping the box-to-fine and fine-to-lattice scale gaps comparable instead
// of letting fine cubes hug the lattice spacing.
// All membership tests are integer comparisons in (doubled) lattice
// coordinates of the path's mesh.
struct BoxPartition {
  int mesh = 0;
  int k = 0;                        // coarse exponent, side 2^{-k}
  int q = 0;                        // fine exponent, side 2^{-q}
  Vec3i corner;                     // low corner of B, lattice coords
  std::int64_t side = 0;            // coarse side, lattice units (2^{mesh-k})
  std::int64_t fine_side = 0;       // fine side, lattice units (2^{mesh-q})
  std::int64_t boxes_per_axis = 0;  // 2^{q-k}

  std::uint64_t box_count() const {
    return std::uint64_t(boxes_per_axis) * std::uint64_t(boxes_per_axis) *
           std::uint64_t(boxes_per_axis);
  }
};

int default_fine_exponent(int k, int mesh);

// Coarse box centered at (cx, cy, cz) physical; the center must sit on the
// mesh lattice and the coarse half-side must be a whole number of lattice
// units (k < mesh).
BoxPartition make_box_partition(int mesh, int k, int q, double cx, double cy,
                                double cz);

// Per-sample box statistics: X_i = path points in fine cube i (boundary
// points tie to the smaller index, so each point counts once), Y_i = 1 if
// the path meets the enlargement B_i'. X = sum X_i, Y = sum Y_i. Only cells
// with X_i > 0 or Y_i = 1 are stored, keyed by pack_point of the cell index
// triple.
struct BoxStats {
  std::uint64_t points_in_box = 0;  // X
  std::uint64_t boxes_hit = 0;      // Y
  PointMap x_counts;
  PointSet y_hits;
};

BoxStats box_stats(const SimplePath& path, const BoxPartition& part,
                   int enlargement = 3);

// X_0 and Y_0 of the reference fine box: the cube of side 2^{-q} centered at
// x0 = (1/2, 0, 0), with the same enlargement rule. A standalone box, not
// necessarily a cell of the partition.
struct ReferenceBoxStat {
  std::uint64_t x0 = 0;
  bool y0 = false;
};

ReferenceBoxStat reference_box_stat(const SimplePath& path,
                                    const BoxPartition& part,
                                    int enlargement = 3);

// alpha0 = E(X_0 | Y_0 = 1) over samples, with its standard error.
// NoConditioningEvents when no sample has Y_0 = 1.
struct Alpha0Estimate {
  double alpha0 = 0;
  double std_error = 0;
  std::uint64_t conditioned = 0;
};

Alpha0Estimate alpha0_estimate(const std::vector<ReferenceBoxStat>& samples);

// Finite-mesh stand-in for the box constant: alpha0 * 2^{-beta n}.
double zeta_surrogate(const Alpha0Estimate& est, int mesh, double beta);

// mean((X - alpha0*Y)^2) / mean(X)^2 over per-sample sums (X, Y).
// ZeroMeanX when every sample has X = 0.
double l2_discrepancy(const std::vector<std::pair<double, double>>& xy,
                      double alpha0);

// Quasi-loop centers: lattice points x whose closed s-ball is visited at two
// times k <= l with some path point outside the closed r-ball in between.
// s and r are physical units, converted at the path's mesh; incidence is
// exact integer arithmetic. BadRadii unless 0 < s < r.
std::vector<Vec3i> quasi_loops(const LatticePath& path, double s, double r);

// Worst empirical escape probability over lattice points within eps^2
// (physical) of the path: SRW from each tested point x, killed on exiting
// the open ball B(x, sqrt(eps)), escaping if it never touches the path
// (time 0 counts, so points on the path never escape). Candidates are
// deduplicated, sorted, and capped by a deterministic stride.
struct HittabilityProbe {
  double worst_escape = 0;
  Vec3i worst_point;
  std::uint64_t candidates_tested = 0;  // 0 flags an empty candidate set
};

HittabilityProbe hittability_probe(const SimplePath& path, double eps,
                                   std::uint32_t probes, RngStream& rng,
                                   std::uint64_t candidate_cap = 4096);

// Escape event at lattice radii m <= n: two independent SRWs from the
// origin, each run to its exit of the open ball B(n); gamma = loop erasure
// of the first. With s the last index of gamma inside the open ball B(m)
// (s = 0 when m = 0, where B(0) is empty), the event is
//   gamma[s..end]  disjoint from  walk2[1..exit].
// m = 0 conditions on the whole curve.
bool escape_event_sample(std::int64_t m, std::int64_t n, RngStream& rng);

// Both indicators from one walk pair: the full-curve event implies the tail
// event, so coupled sampling keeps the estimated pair ordered samplewise.
struct EscapeObservation {
  bool full_escape = false;
  bool tail_escape = false;
  std::uint64_t lerw_length = 0;
};

EscapeObservation escape_event_pair(std::int64_t m, std::int64_t n,
                                    RngStream& rng);

// Does the path pass through the lattice point nearest to the physical point
// (x, y, z)? Component-wise nearest, ties away from zero. The point must lie
// in the open unit ball and off the origin.
bool one_point_hit(const SimplePath& path, double x, double y, double z);

}  // namespace lerw
