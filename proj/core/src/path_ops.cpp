#include "lerw/path_ops.hpp"

namespace lerw {

SimplePath loop_erase(const LatticePath& path) {
  require(!path.pts.empty(), Err::EmptyPath, "loop_erase on empty path");
  StreamingLoopEraser eraser(path.mesh);
  for (const auto& p : path.pts) eraser.push(p);
  return eraser.finish();
}

LatticePath reverse_path(const LatticePath& path) {
  LatticePath out = path;
  std::reverse(out.pts.begin(), out.pts.end());
  return out;
}

SimplePath reverse_path(const SimplePath& path) {
  SimplePath out = path;
  std::reverse(out.pts.begin(), out.pts.end());
  return out;
}

LatticePath concat_paths(const LatticePath& a, const LatticePath& b) {
  require(!a.pts.empty() && !b.pts.empty(), Err::EmptyPath,
          "concat of empty path");
  require(a.mesh == b.mesh, Err::InvalidParams, "concat across meshes");
  require(a.pts.back() == b.pts.front(), Err::EndpointMismatch,
          "concat requires a.back == b.front");
  LatticePath out;
  out.mesh = a.mesh;
  out.pts.reserve(a.pts.size() + b.pts.size() - 1);
  out.pts = a.pts;
  out.pts.insert(out.pts.end(), b.pts.begin() + 1, b.pts.end());
  if (path_validation_enabled()) out.validate();
  return out;
}

std::vector<std::size_t> find_cut_times(const LatticePath& path) {
  require(!path.pts.empty(), Err::EmptyPath, "find_cut_times on empty path");
  const auto& pts = path.pts;
  // last occurrence of each point
  PointMap last(pts.size() * 2);
  for (std::size_t i = 0; i < pts.size(); ++i) {
    last.insert_or_assign(pack_point(pts[i]), i);
  }
  // active(k) = #points first seen at or before k whose last occurrence is
  // after k; k is a cut time iff active(k) == 0
  std::vector<std::size_t> cuts;
  PointSet seen(pts.size() * 2);
  std::size_t active = 0;
  std::vector<std::size_t> closers(pts.size(), 0);
  for (std::size_t i = 0; i < pts.size(); ++i) {
    std::uint64_t key = pack_point(pts[i]);
    if (!seen.contains_key(key)) {
      seen.insert_key(key);
      std::size_t l = std::size_t(*last.find(key));
      if (l > i) {
        ++active;
        closers[l] += 1;
      }
    }
    active -= closers[i];
    if (active == 0) cuts.push_back(i);
  }
  return cuts;
}

SimplePath sample_lerw_to_exit(Vec3i start, const Domain& domain,
                               RngStream& rng, int mesh) {
  require(domain.contains(start), Err::NotInDomain,
          "walk start lies outside the domain");
  StreamingLoopEraser eraser(mesh);
  eraser.push(start);
  Vec3i cur = start;
  for (;;) {
    cur = cur + kSteps[rng.step_direction()];
    eraser.push(cur);
    if (!domain.contains(cur)) return eraser.finish();
  }
}

}  // namespace lerw
