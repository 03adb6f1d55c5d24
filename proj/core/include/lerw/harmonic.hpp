#pragma once

#include <map>
#include <utility>

#include "lerw/path_ops.hpp"

namespace lerw {

// Discrete harmonic machinery. Everything here is solved by direct sparse
// factorization over the domain's interior; domains beyond the interior cap
// are refused (DomainTooLarge) instead of silently switching to an
// approximate method. The one deliberate exception is
// green_column_iterative: a matrix-free conjugate gradient (relative
// residual <= 1e-12) for single Green columns on balls too large to factor,
// which backs the whole-space Green fit and the ratio check. Its tolerance
// is part of its contract; nothing routes to it implicitly.

inline constexpr std::size_t kDefaultInteriorCap = 20u * 20u * 20u;

// Harmonic function on domain \ zeros with wired boundary values:
//   at(p) = 0 for p in the zero set (zero set wins every tie),
//   at(p) = 1 for p outside the domain,
//   solved value on the free interior.
class HarmonicField {
 public:
  double at(Vec3i p) const;
  const std::vector<Vec3i>& free_points() const { return points_; }

 private:
  friend HarmonicField solve_dirichlet(const Domain&, const PointSet&,
                                       std::size_t);
  Domain domain_ = Domain::explicit_set({});
  PointSet zeros_;
  PointMap index_;
  std::vector<Vec3i> points_;
  std::vector<double> values_;
};

HarmonicField solve_dirichlet(const Domain& domain, const PointSet& zeros,
                              std::size_t interior_cap = kDefaultInteriorCap);

// G_A(x, y): expected visits to y of SRW from x killed on leaving the
// domain. Dense table over the whole interior, symmetric by reversibility,
// satisfies G = I + P G.
class GreenTable {
 public:
  double at(Vec3i x, Vec3i y) const;
  const std::vector<Vec3i>& points() const { return points_; }

 private:
  friend GreenTable green_table(const Domain&, std::size_t);
  PointMap index_;
  std::vector<Vec3i> points_;
  std::vector<double> values_;  // row-major n x n
};

GreenTable green_table(const Domain& domain,
                       std::size_t interior_cap = kDefaultInteriorCap);

// One column G_A(., source) of the Green table.
class GreenColumn {
 public:
  double at(Vec3i x) const;
  Vec3i source() const { return source_; }

 private:
  friend GreenColumn green_column_direct(const Domain&, Vec3i, std::size_t);
  friend GreenColumn green_column_iterative(const Domain&, Vec3i, double);
  Vec3i source_;
  PointMap index_;
  std::vector<double> values_;
};

GreenColumn green_column_direct(const Domain& domain, Vec3i source,
                                std::size_t interior_cap = kDefaultInteriorCap);

// Ball domains only; bounding half-width capped at 192 (DomainTooLarge
// beyond). Plain CG on the 7-point stencil, stopped at relative residual
// tol; tol floor 1e-12.
GreenColumn green_column_iterative(const Domain& domain, Vec3i source,
                                   double tol = 1e-12);

// Interior-to-interior Green ratio on the ball of radius n (lattice units,
// centered at 0):  |G(x,y) / G(x', y') - 1|.
// Preconditions, checked with PreconditionViolated naming the failed one:
//   (i)   dist(x, boundary) >= eps2 * n, same for y
//   (ii)  eps2 * n <= |x - y| <= 10 * min(n - |x|, n - |y|)
//   (iii) |x - x'| <= eps1 * n and |y - y'| <= eps1 * n
struct GreenRatioResult {
  double deviation;
  double g_xy;
  double g_xpyp;
};
GreenRatioResult green_ratio_check(std::int64_t n_radius, Vec3i x, Vec3i xp,
                                   Vec3i y, Vec3i yp, double eps1,
                                   double eps2);

// Expected exit time E^p(tau) of SRW from the domain; 0 outside.
class ExitTimeField {
 public:
  double at(Vec3i p) const;

 private:
  friend ExitTimeField mean_exit_time(const Domain&, std::size_t);
  PointMap index_;
  std::vector<double> values_;
};

ExitTimeField mean_exit_time(const Domain& domain,
                             std::size_t interior_cap = kDefaultInteriorCap);

// One step of the growth process whose trajectories are loop-erased walks:
// given the simple path lambda grown so far (tip inside the domain), the
// next point is a neighbor y of the tip, off lambda, with probability
// proportional to the harmonic function that is 0 on lambda and 1 on the
// boundary. Entries come in kSteps order, zero-weight neighbors dropped;
// DeadEnd when every neighbor has weight zero.
std::vector<std::pair<Vec3i, double>> laplacian_step(
    const Domain& domain, const SimplePath& lambda,
    std::size_t interior_cap = kDefaultInteriorCap);

// Law of the loop-erased-walk prefix after at most `horizon` steps beyond
// the seed. Keys are packed point sequences starting at the seed (a bare
// start point is a length-0 seed). A key shorter than seed+horizon is a
// path absorbed at the boundary; probabilities over all keys sum to 1.
struct PrefixLaw {
  int horizon = 0;
  std::map<std::vector<std::uint64_t>, double> prob;

  double total() const;
  // 1/2 sum |p - q| over the union of keys
  double tv_distance(const PrefixLaw& other) const;
  // conditional law of paths extending the given prefix, renormalized;
  // keys keep the full sequence. PreconditionViolated if the prefix has
  // zero mass.
  PrefixLaw conditioned_on(const std::vector<std::uint64_t>& prefix) const;
};

PrefixLaw exact_lerw_law(const Domain& domain, Vec3i start, int horizon,
                         std::size_t interior_cap = kDefaultInteriorCap);
PrefixLaw exact_lerw_law_seeded(const Domain& domain, const SimplePath& seed,
                                int horizon,
                                std::size_t interior_cap = kDefaultInteriorCap);

// Empirical counterpart: LERW-to-exit samples truncated to `horizon` steps,
// one RNG stream per trial.
PrefixLaw mc_lerw_prefix_law(const Domain& domain, Vec3i start, int horizon,
                             std::uint64_t trials, std::uint64_t master_seed);

}  // namespace lerw
