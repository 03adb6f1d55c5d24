#pragma once

#include "lerw/walk.hpp"

namespace lerw {

// Chronological loop erasure, forward pass: keep a stack of the loop-erased
// prefix and a map from point to its stack position; a revisit truncates the
// stack back to that position. O(length) expected, memory proportional to
// the erased path. Feeding points one at a time gives the same result as
// erasing the whole walk at the end, which is what Wilson branches rely on.
class StreamingLoopEraser {
 public:
  explicit StreamingLoopEraser(int mesh = 0) : mesh_(mesh) { reset(mesh); }

  void reset(int mesh) {
    mesh_ = mesh;
    stack_.clear();
    pos_.clear();
  }

  void push(Vec3i p) {
    std::uint64_t key = pack_point(p);
    if (const std::uint64_t* at = pos_.find(key)) {
      // copy before erasing: backward-shift deletion moves map values, so
      // the pointer from find() does not survive the erase calls below
      std::size_t keep = std::size_t(*at);
      for (std::size_t i = stack_.size(); i-- > keep + 1;) {
        pos_.erase(pack_point(stack_[i]));
      }
      stack_.resize(keep + 1);
    } else {
      pos_.insert_or_assign(key, stack_.size());
      stack_.push_back(p);
    }
  }

  bool empty() const { return stack_.empty(); }
  std::size_t size() const { return stack_.size(); }
  Vec3i back() const { return stack_.back(); }
  const std::vector<Vec3i>& current() const { return stack_; }

  SimplePath finish() {
    SimplePath out;
    out.mesh = mesh_;
    out.pts = std::move(stack_);
    stack_.clear();
    pos_.clear();
    if (path_validation_enabled()) out.validate();
    return out;
  }

 private:
  int mesh_;
  std::vector<Vec3i> stack_;
  PointMap pos_;
};

// LE(path): loop-erased image of a finite walk. Single point in, single
// point out; EmptyPath on a path with no points.
SimplePath loop_erase(const LatticePath& path);

SimplePath reverse_path(const SimplePath& path);
LatticePath reverse_path(const LatticePath& path);

// a ⊕ b, defined only when a ends where b starts (EndpointMismatch) and the
// meshes agree (InvalidParams). The shared point appears once.
LatticePath concat_paths(const LatticePath& a, const LatticePath& b);

// All indices k whose prefix point set {path[0..k]} and strict suffix point
// set {path[k+1..]} are disjoint. The final index always qualifies. Sweep
// over first/last occurrence counters, O(length).
std::vector<std::size_t> find_cut_times(const LatticePath& path);

// SRW from start to its first exit of domain, loop-erased on the fly. The
// resulting simple path runs from start to the exit point (the one point
// outside the domain).
SimplePath sample_lerw_to_exit(Vec3i start, const Domain& domain,
                               RngStream& rng, int mesh = 0);

}  // namespace lerw
