#pragma once

#include "lerw/path_ops.hpp"

namespace lerw {

// Wired spanning tree of a domain: every interior vertex has a parent edge,
// chains lead to the boundary. All boundary points act as a single wired
// vertex for tree topology, but each interior-to-boundary edge keeps the
// geometric identity of its boundary endpoint, so trees that attach through
// different boundary points are different trees.
class WiredTree {
 public:
  bool has(Vec3i v) const { return parent_.contains(pack_point(v)); }
  Vec3i parent(Vec3i v) const;
  std::size_t size() const { return parent_.size(); }

  // tree branch from v to its boundary attachment point, v first
  SimplePath path_to_boundary(Vec3i v) const;

  // graph distance in the tree with the boundary contracted to one vertex
  std::uint64_t tree_distance(Vec3i a, Vec3i b) const;

  // canonical serialization: "x,y,z->px,py,pz;" per vertex in lex order;
  // used as a tree identity key by the uniformity tests
  std::string canonical_key() const;

 private:
  friend WiredTree wilson_sample(const Domain&, RngStream&,
                                 const std::vector<Vec3i>&,
                                 const SimplePath*);
  const Domain* domain_ = nullptr;
  PointMap parent_;  // packed vertex -> packed parent point
};

// Wilson's algorithm: walks from each yet-unvisited vertex, loop-erased on
// the fly, attached to the growing tree. `ordering` may enumerate any subset
// of the interior in any order (the rest is appended lexicographically); the
// law of the resulting tree does not depend on it. `first_branch`, when
// given, is installed as the first tree branch before any walk runs; it must
// be a simple path from an interior point to a boundary point.
WiredTree wilson_sample(const Domain& domain, RngStream& rng,
                        const std::vector<Vec3i>& ordering = {},
                        const SimplePath* first_branch = nullptr);

// Number of wired spanning trees (multigraph: parallel boundary edges count
// separately), by fraction-free determinant of the reduced Laplacian.
// Exact; refuses interiors larger than max_interior.
std::int64_t matrix_tree_count(const Domain& domain,
                               std::size_t max_interior = 12);

}  // namespace lerw
