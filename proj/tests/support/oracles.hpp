#pragma once

// Reference implementations used as test oracles. Deliberately simple and
// slow; the production code must agree with them, never the other way
// around.

#include <map>
#include <set>
#include <vector>

#include "lerw/curve.hpp"
#include "lerw/geometry.hpp"
#include "lerw/rng.hpp"

namespace lerw::testing {

// Last-visit recursion for loop erasure: sigma_0 is the last visit time of
// S[0], sigma_{i+1} the last visit time of S[sigma_i + 1]; the erasure is S
// read at those times.
inline std::vector<Vec3i> loop_erase_last_visit(const std::vector<Vec3i>& pts) {
  std::map<std::uint64_t, std::size_t> last;
  for (std::size_t i = 0; i < pts.size(); ++i) last[pack_point(pts[i])] = i;
  std::vector<Vec3i> out;
  out.push_back(pts[0]);
  std::size_t sigma = last[pack_point(pts[0])];
  while (sigma + 1 < pts.size()) {
    Vec3i next = pts[sigma + 1];
    sigma = last[pack_point(next)];
    out.push_back(next);
  }
  return out;
}

// A uniform-ish random lattice walk of the given length for oracle tests;
// not a module under test, just input fodder.
inline LatticePath random_walk(RngStream& rng, std::uint64_t length,
                               int mesh = 0) {
  LatticePath walk;
  walk.mesh = mesh;
  walk.pts.push_back({0, 0, 0});
  for (std::uint64_t i = 0; i < length; ++i) {
    walk.pts.push_back(walk.pts.back() + kSteps[rng.uniform_below(6)]);
  }
  return walk;
}

// Quasi-loop centers by the definition, cubic scan: x is a center when two
// visit times k <= l of the closed s-ball around x bracket a point outside
// the closed r-ball around x.
inline std::vector<Vec3i> brute_quasi_loops(const LatticePath& path, double s,
                                            double r) {
  const double h = mesh_h(path.mesh);
  const std::int64_t s_thr = closed_sq_threshold(s / h);
  const std::int64_t r_thr = closed_sq_threshold(r / h);
  std::set<std::uint64_t> centers;
  // candidate centers: lattice points within s of some path point
  std::vector<Vec3i> offs = ball_offsets(s_thr);
  std::set<std::uint64_t> cand;
  for (const Vec3i& p : path.pts) {
    for (const Vec3i& o : offs) cand.insert(pack_point(p + o));
  }
  for (std::uint64_t key : cand) {
    Vec3i x = unpack_point(key);
    std::vector<std::size_t> visits;
    for (std::size_t i = 0; i < path.pts.size(); ++i) {
      if (norm2(path.pts[i] - x) <= s_thr) visits.push_back(i);
    }
    bool found = false;
    for (std::size_t a = 0; a < visits.size() && !found; ++a) {
      for (std::size_t b = a; b < visits.size() && !found; ++b) {
        for (std::size_t j = visits[a]; j <= visits[b] && !found; ++j) {
          if (norm2(path.pts[j] - x) > r_thr) found = true;
        }
      }
    }
    if (found) centers.insert(key);
  }
  std::vector<Vec3i> out;
  for (std::uint64_t key : centers) out.push_back(unpack_point(key));
  return out;
}

// Hausdorff distance between dense samplings of two curves, plus the
// sampling slack: true value lies within max step length of this.
inline double sampled_hausdorff(const ParamCurve& a, const ParamCurve& b,
                                int samples_per_segment) {
  auto sample = [&](const ParamCurve& c) {
    std::vector<Vec3d> pts;
    const auto& ts = c.times();
    for (std::size_t i = 1; i < ts.size(); ++i) {
      for (int j = 0; j < samples_per_segment; ++j) {
        double t = ts[i - 1] + (ts[i] - ts[i - 1]) * j / samples_per_segment;
        pts.push_back(c.eval(t));
      }
    }
    pts.push_back(c.points().back());
    return pts;
  };
  return hausdorff_distance(sample(a), sample(b));
}

}  // namespace lerw::testing
