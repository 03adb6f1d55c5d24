#pragma once

#include <iosfwd>
#include <string>

#include "lerw/geometry.hpp"

namespace lerw {

struct Vec3d {
  double x = 0, y = 0, z = 0;

  friend Vec3d operator+(Vec3d a, Vec3d b) {
    return {a.x + b.x, a.y + b.y, a.z + b.z};
  }
  friend Vec3d operator-(Vec3d a, Vec3d b) {
    return {a.x - b.x, a.y - b.y, a.z - b.z};
  }
  friend Vec3d operator*(double s, Vec3d v) {
    return {s * v.x, s * v.y, s * v.z};
  }
  friend bool operator==(Vec3d a, Vec3d b) {
    return a.x == b.x && a.y == b.y && a.z == b.z;
  }
};

inline double norm2d(Vec3d v) { return v.x * v.x + v.y * v.y + v.z * v.z; }
inline double norm(Vec3d v) { return std::sqrt(norm2d(v)); }
inline double norm_inf(Vec3d v) {
  return std::max(std::abs(v.x), std::max(std::abs(v.y), std::abs(v.z)));
}

// Piecewise-linear curve in R^3: strictly increasing breakpoint times
// starting at 0, one position per breakpoint. Evaluation between
// breakpoints interpolates linearly; evaluation outside [0, duration]
// clamps to the nearest endpoint (finite curves stand in for longer ones by
// sitting at their final point).
class ParamCurve {
 public:
  ParamCurve() = default;
  static ParamCurve from_breakpoints(std::vector<double> times,
                                     std::vector<Vec3d> points);

  double duration() const { return times_.empty() ? 0.0 : times_.back(); }
  std::size_t breakpoint_count() const { return times_.size(); }
  const std::vector<double>& times() const { return times_; }
  const std::vector<Vec3d>& points() const { return points_; }

  Vec3d eval(double t) const;

 private:
  std::vector<double> times_;
  std::vector<Vec3d> points_;
};

// Duration-beta rescaling of a lattice path at mesh n: breakpoint j sits at
// time j * 2^{-beta n} and position pts[j] * 2^{-n}. beta must lie in
// (1, 5/3].
ParamCurve rescale_to_curve(const LatticePath& path, double beta);

// rho: time-length mismatch plus sup distance under affine time alignment,
//   |t1 - t2| + max_{0<=s<=1} |a(s t1) - b(s t2)|.
// The sup of a piecewise-affine difference norm is attained at a breakpoint
// of the combined subdivision, so the evaluation grid below is exact.
double rho_distance(const ParamCurve& a, const ParamCurve& b);

// chi metrics return the computed truncation value plus the tail bound that
// the dropped terms cannot exceed.
struct ChiValue {
  double value = 0;
  double tail = 0;
};

// sum_{k=1..K} 2^{-k} max_{0<=t<=k} min(|a(t) - b(t)|, 1); curves shorter
// than K are extended by their endpoint (see ParamCurve::eval).
ChiValue chi_time_window(const ParamCurve& a, const ParamCurve& b, int K = 8);

// sum_{m=1..K} 2^{-m} min(rho(a^(m), b^(m)), 1) with c^(m) the curve
// truncated at its first exit from the centered box of half-side m; a curve
// that never exits enters the term whole.
ChiValue chi_box_truncated(const ParamCurve& a, const ParamCurve& b,
                           int K = 8);

// Curve cut at its first exit from the centered max-norm box of half-side
// m. The crossing coordinate of the new endpoint equals +-m exactly and the
// others are clamped inside, so the endpoint sits on the boundary bit for
// bit. A curve starting outside has duration 0; a curve that never leaves
// raises NeverExitsBox.
ParamCurve truncate_at_box_exit(const ParamCurve& curve, double m);

// tau_{r+delta} - tau_r for the box exit times above. BadRadii for r <= 0,
// BadDelta for delta <= 0.
double exit_time_increment(const ParamCurve& curve, double r, double delta);

// sup_{|t-s| <= delta} |c(t) - c(s)|, exact for piecewise-linear curves:
// the sup is attained at a pair of breakpoints or at a window edge t-s =
// +-delta anchored at a breakpoint.
double modulus_of_continuity(const ParamCurve& curve, double delta);

// Hausdorff distance between finite point sets (exact, quadratic scan).
double hausdorff_distance(const std::vector<Vec3d>& a,
                          const std::vector<Vec3d>& b);

// Hausdorff distance between curve ranges: breakpoints plus adaptive
// segment-midpoint refinement until the bound is within tol.
double hausdorff_distance(const ParamCurve& a, const ParamCurve& b,
                          double tol = 1e-9);

// Curve exchange format. Header line:
//   mesh=<n> beta=<float> len=<m>
// then m+1 lines "t x y z" in physical units, shortest round-trip decimal;
// reading back reproduces every double bit for bit.
void write_curve(std::ostream& os, const ParamCurve& curve, int mesh,
                 double beta);
struct CurveFile {
  ParamCurve curve;
  int mesh = 0;
  double beta = 0;
};
CurveFile read_curve(std::istream& is);

void write_curve_file(const std::string& path, const ParamCurve& curve,
                      int mesh, double beta);
CurveFile read_curve_file(const std::string& path);

}  // namespace lerw
