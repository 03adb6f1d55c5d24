#include "lerw/wilson.hpp"

#include <limits>
#include <string>

namespace lerw {

Vec3i WiredTree::parent(Vec3i v) const {
  const auto* p = parent_.find(pack_point(v));
  require(p != nullptr, Err::NotInDomain, "vertex not in the tree");
  return unpack_point(*p);
}

SimplePath WiredTree::path_to_boundary(Vec3i v) const {
  SimplePath out;
  out.pts.push_back(v);
  Vec3i cur = v;
  while (has(cur)) {
    cur = parent(cur);
    out.pts.push_back(cur);
  }
  if (path_validation_enabled()) out.validate();
  return out;
}

std::uint64_t WiredTree::tree_distance(Vec3i a, Vec3i b) const {
  if (a == b) return 0;
  SimplePath pa = path_to_boundary(a);
  SimplePath pb = path_to_boundary(b);
  // depth of each interior vertex on a's branch; the boundary endpoint is
  // excluded so that distinct attachment points still meet at the wired
  // vertex below
  PointMap depth_a(pa.pts.size() * 2);
  for (std::size_t i = 0; i + 1 < pa.pts.size(); ++i) {
    depth_a.insert_or_assign(pack_point(pa.pts[i]), i);
  }
  for (std::size_t j = 0; j + 1 < pb.pts.size(); ++j) {
    if (const auto* i = depth_a.find(pack_point(pb.pts[j]))) {
      return *i + j;
    }
  }
  // branches meet only at the wired boundary vertex
  return (pa.pts.size() - 1) + (pb.pts.size() - 1);
}

std::string WiredTree::canonical_key() const {
  std::vector<std::pair<Vec3i, Vec3i>> edges;
  edges.reserve(parent_.size());
  parent_.for_each([&](std::uint64_t k, std::uint64_t v) {
    edges.emplace_back(unpack_point(k), unpack_point(v));
  });
  std::sort(edges.begin(), edges.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });
  std::string key;
  auto put = [&key](Vec3i p) {
    key += std::to_string(p.x);
    key += ',';
    key += std::to_string(p.y);
    key += ',';
    key += std::to_string(p.z);
  };
  for (const auto& [v, p] : edges) {
    put(v);
    key += "->";
    put(p);
    key += ';';
  }
  return key;
}

WiredTree wilson_sample(const Domain& domain, RngStream& rng,
                        const std::vector<Vec3i>& ordering,
                        const SimplePath* first_branch) {
  std::vector<Vec3i> interior = domain.interior_points();
  require(!interior.empty(), Err::EmptyDomain, "domain has no interior");

  WiredTree tree;
  tree.domain_ = &domain;

  if (first_branch) {
    first_branch->validate();
    require(domain.contains(first_branch->pts.front()), Err::NotInDomain,
            "first branch must start inside the domain");
    require(!domain.contains(first_branch->pts.back()),
            Err::EndpointMismatch,
            "first branch must end at a boundary point");
    for (std::size_t i = 0; i + 1 < first_branch->pts.size(); ++i) {
      require(domain.contains(first_branch->pts[i]), Err::NotInDomain,
              "first branch leaves the domain before its endpoint");
      tree.parent_.insert_or_assign(pack_point(first_branch->pts[i]),
                                    pack_point(first_branch->pts[i + 1]));
    }
  }

  // ordering prefix as given, remaining interior vertices appended in lex
  // order; duplicates and already-attached vertices are skipped when reached
  std::vector<Vec3i> order;
  order.reserve(interior.size() + ordering.size());
  for (const auto& v : ordering) {
    require(domain.contains(v), Err::NotInDomain,
            "ordering names a vertex outside the domain");
    order.push_back(v);
  }
  order.insert(order.end(), interior.begin(), interior.end());

  StreamingLoopEraser eraser;
  for (const auto& v : order) {
    if (tree.has(v)) continue;
    eraser.reset(0);
    eraser.push(v);
    Vec3i cur = v;
    for (;;) {
      cur = cur + kSteps[rng.step_direction()];
      if (!domain.contains(cur) || tree.has(cur)) break;
      eraser.push(cur);
    }
    const auto& branch = eraser.current();
    for (std::size_t i = 0; i + 1 < branch.size(); ++i) {
      tree.parent_.insert_or_assign(pack_point(branch[i]),
                                    pack_point(branch[i + 1]));
    }
    tree.parent_.insert_or_assign(pack_point(branch.back()), pack_point(cur));
  }
  return tree;
}

namespace {

// Fraction-free Bareiss elimination; entries stay exact minors. With the
// degree-6 lattice Laplacian and up to 12 rows the Hadamard bound keeps
// every intermediate below 2^63, __int128 gives slack on top.
std::int64_t bareiss_determinant(std::vector<__int128>& m, std::size_t n) {
  __int128 prev = 1;
  int sign = 1;
  for (std::size_t k = 0; k + 1 < n; ++k) {
    if (m[k * n + k] == 0) {
      std::size_t swap_row = k + 1;
      while (swap_row < n && m[swap_row * n + k] == 0) ++swap_row;
      if (swap_row == n) return 0;
      for (std::size_t j = 0; j < n; ++j) {
        std::swap(m[k * n + j], m[swap_row * n + j]);
      }
      sign = -sign;
    }
    for (std::size_t i = k + 1; i < n; ++i) {
      for (std::size_t j = k + 1; j < n; ++j) {
        m[i * n + j] = (m[i * n + j] * m[k * n + k] -
                        m[i * n + k] * m[k * n + j]) /
                       prev;
      }
      m[i * n + k] = 0;
    }
    prev = m[k * n + k];
  }
  __int128 det = m[(n - 1) * n + (n - 1)];
  if (sign < 0) det = -det;
  require(det >= std::numeric_limits<std::int64_t>::min() &&
              det <= std::numeric_limits<std::int64_t>::max(),
          Err::DomainTooLarge, "tree count overflows 64 bits");
  return std::int64_t(det);
}

}  // namespace

std::int64_t matrix_tree_count(const Domain& domain,
                               std::size_t max_interior) {
  std::vector<Vec3i> interior = domain.interior_points();
  require(!interior.empty(), Err::EmptyDomain, "domain has no interior");
  require(interior.size() <= max_interior, Err::DomainTooLarge,
          "matrix-tree determinant capped at " +
              std::to_string(max_interior) + " interior vertices");

  PointMap index(interior.size() * 2);
  for (std::size_t i = 0; i < interior.size(); ++i) {
    index.insert_or_assign(pack_point(interior[i]), i);
  }

  std::size_t n = interior.size();
  std::vector<__int128> lap(n * n, 0);
  for (std::size_t i = 0; i < n; ++i) {
    lap[i * n + i] = 6;  // boundary edges stay on the diagonal
    for (const auto& s : kSteps) {
      if (const auto* j = index.find(pack_point(interior[i] + s))) {
        lap[i * n + *j] -= 1;
      }
    }
  }
  return bareiss_determinant(lap, n);
}

}  // namespace lerw
