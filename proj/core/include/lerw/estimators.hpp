#pragma once

#include <functional>
#include <map>
#include <optional>
#include <string>

#include "lerw/curve.hpp"
#include "lerw/harmonic.hpp"
#include "lerw/observables.hpp"
#include "lerw/stats.hpp"

namespace lerw {

// A single reported estimate with its provenance parameters.
struct EstimateRecord {
  double value = 0;
  double std_error = 0;
  std::uint64_t trials = 0;
  std::map<std::string, std::string> meta;
};

// Log-scale regression: ys are log2 of the estimated quantity at each level
// xs; ordinary least squares with residual-based slope error.
struct ScalingFit {
  std::vector<double> xs;
  std::vector<double> ys;
  std::vector<double> y_errs;  // per-point standard error of ys
  double slope = 0;
  double intercept = 0;
  double slope_stderr = 0;
  std::vector<double> residuals;
};

// One estimated level of a scaling study, on the natural (not log) scale.
struct LevelEstimate {
  double x = 0;
  double value = 0;
  double std_error = 0;
  std::uint64_t trials = 0;
};

struct BetaFit {
  ScalingFit fit;
  std::vector<LevelEstimate> levels;
  double beta = 0;
  double beta_stderr = 0;
  bool in_paper_range = false;  // beta in (1, 5/3]; reported, never clipped
};

// Deterministic trial fan-out: body(t, rng) runs for t in [0, trials) with
// rng = RngStream(master_seed, t). Worker count affects scheduling only;
// results must be written to per-trial slots, so any aggregation downstream
// is order-independent.
void run_trials(std::uint64_t trials, int workers, std::uint64_t master_seed,
                const std::function<void(std::uint64_t, RngStream&)>& body);

// Growth exponent from curve lengths: one SRW per trial run to its exit of
// the largest ball 2^{n_max}, loop-erased incrementally, with the erased
// length recorded at each level's first exit. The levels share each trial's
// walk, which cancels most level-to-level noise in the slope. ys are
// log2 E(M_n) against n; beta = slope.
// synthetic_exponent, when set, replaces every sampled length at level n by
// round(2^{c n}) to exercise the regression plumbing end to end.
BetaFit beta_from_length(const std::vector<int>& levels,
                         std::uint64_t trials_per_level,
                         std::uint64_t master_seed, int workers,
                         std::optional<double> synthetic_exponent = {});

// Growth exponent from escape probabilities: Es(2^j) estimated by the
// full-curve escape event at radius 2^j over the given j list; ys are
// log2 Es(2^j) against j; beta = 2 + slope.
BetaFit beta_from_escape(const std::vector<int>& radius_exponents,
                         std::uint64_t trials_per_level,
                         std::uint64_t master_seed, int workers,
                         std::optional<double> synthetic_exponent = {});

// Exceedance profile of M_n / mean(M_n) over a b grid (each b >= 1): the
// fraction of trials outside [1/b, b], with Wilson-score intervals. One
// shared sample serves every b, so the profile is nonincreasing in b by
// construction.
struct TailPoint {
  double b = 0;
  double exceedance = 0;
  Interval ci;
  std::uint64_t outside = 0;
};
struct TailProfile {
  double mean_length = 0;
  std::uint64_t trials = 0;
  std::vector<TailPoint> points;
};
TailProfile tail_profile(int mesh, std::uint64_t trials,
                         const std::vector<double>& b_grid,
                         std::uint64_t master_seed, int workers);

// L2 discrepancy table over (mesh level, coarse exponent k) cells. Per
// trial one curve per mesh level, evaluated against every k's partition
// (common samples across k sharpen the k trend). The fine exponent comes
// from default_fine_exponent. alpha0 is estimated from the same ensemble's
// reference-box statistics.
struct L2Cell {
  int mesh = 0;
  int k = 0;
  int q = 0;
  double ratio = 0;
  double alpha0 = 0;
  double alpha0_std_error = 0;
  std::uint64_t conditioned = 0;
  std::uint64_t trials = 0;
};
struct L2Trend {
  std::vector<L2Cell> cells;  // mesh-major, then k, in input order
  bool decreasing_in_k = false;   // along every fixed mesh row
  bool decreasing_in_mesh = false;  // along every fixed k column
};
L2Trend l2_trend(const std::vector<int>& mesh_levels,
                 const std::vector<int>& k_values, std::uint64_t trials,
                 std::uint64_t master_seed, int workers, int enlargement = 3);

// Whole-space Green constant: G(x) ~ a/|x|. Ĝ comes from one iterative
// Green column on the ball of radius outer_factor * max(radii) (sources at
// the origin, evaluation at axis points (r,0,0)), then a is the intercept
// of the least-squares line through (1/|x|, Ĝ(x)|x|) at 1/|x| = 0.
struct GreenConstantResult {
  EstimateRecord record;             // value = fitted a
  double slope = 0;                  // next-order coefficient
  std::vector<double> radii;         // as used
  std::vector<double> g_values;      // Ĝ((r,0,0))
  double max_abs_residual = 0;
};
// Pure fit, for synthetic inputs and tests.
GreenConstantResult green_axis_fit(const std::vector<double>& radii,
                                   const std::vector<double>& g_values);
GreenConstantResult green_constant_fit(const std::vector<std::int64_t>& radii,
                                       int outer_factor = 4);

// Monte Carlo mean visits to `target` of SRW from `start` killed on leaving
// the ball of the given radius; agrees with green_table / green_column in
// expectation.
EstimateRecord green_mc_estimate(std::int64_t ball_radius, Vec3i start,
                                 Vec3i target, std::uint64_t walks,
                                 std::uint64_t master_seed, int workers);

// Truncated infinite-LERW surrogate: LERW run to its exit of the ball of
// physical radius m*r, rescaled to the curve with exponent beta, truncated
// at its first exit of the box [-r, r]^3. The endpoint lands exactly on the
// box boundary. BadRadii unless r >= 1 and m >= 2.
ParamCurve ilerw_truncated_sample(double r, int mesh, double beta,
                                  RngStream& rng, int m = 8);

// Which face of the box [-r, r]^3 a truncated curve's endpoint sits on:
// kSteps order (+x, -x, +y, -y, +z, -z); ties to the smallest index.
int exit_face(const ParamCurve& curve, double r);

// (|endpoint|_2, duration) summaries, compared by total variation over a
// bins x bins grid of equal-width cells spanning the pooled data range.
struct CurveSummary {
  double endpoint_norm = 0;
  double duration = 0;
};
double binned_tv(const std::vector<CurveSummary>& a,
                 const std::vector<CurveSummary>& b, int bins_per_axis = 3);

// P(exit-time increment > threshold) per delta, over one shared curve
// ensemble (LERW to the ball of physical radius m*r at the given mesh). The
// increment is monotone in delta for each curve, so the estimated points
// are ordered whenever the deltas are.
struct IncrementPoint {
  double delta = 0;
  double exceedance = 0;
  Interval ci;
  std::uint64_t outside = 0;
};
std::vector<IncrementPoint> increment_exceedance(
    int mesh, double r, const std::vector<double>& deltas, double threshold,
    std::uint64_t trials, double beta, std::uint64_t master_seed, int workers,
    int m = 8);

}  // namespace lerw
