#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <vector>

#include "lerw/errors.hpp"

// Integer lattice geometry. All membership predicates reduce to integer
// comparisons of squared norms against precomputed thresholds, so two points
// at the same coordinates always classify identically; no float drift.

namespace lerw {

struct Vec3i {
  std::int64_t x = 0, y = 0, z = 0;

  friend Vec3i operator+(Vec3i a, Vec3i b) {
    return {a.x + b.x, a.y + b.y, a.z + b.z};
  }
  friend Vec3i operator-(Vec3i a, Vec3i b) {
    return {a.x - b.x, a.y - b.y, a.z - b.z};
  }
  friend bool operator==(Vec3i a, Vec3i b) {
    return a.x == b.x && a.y == b.y && a.z == b.z;
  }
  friend bool operator!=(Vec3i a, Vec3i b) { return !(a == b); }
  friend bool operator<(Vec3i a, Vec3i b) {  // lexicographic, for determinism
    if (a.x != b.x) return a.x < b.x;
    if (a.y != b.y) return a.y < b.y;
    return a.z < b.z;
  }
};

inline std::int64_t norm2(Vec3i v) { return v.x * v.x + v.y * v.y + v.z * v.z; }
inline std::int64_t norm1(Vec3i v) {
  return std::abs(v.x) + std::abs(v.y) + std::abs(v.z);
}
inline std::int64_t norm_inf(Vec3i v) {
  return std::max(std::abs(v.x), std::max(std::abs(v.y), std::abs(v.z)));
}

// The six nearest-neighbor steps, in the fixed order the RNG indexes into.
inline constexpr std::array<Vec3i, 6> kSteps = {{
    {+1, 0, 0}, {-1, 0, 0}, {0, +1, 0}, {0, -1, 0}, {0, 0, +1}, {0, 0, -1},
}};

// Packed coordinate keys: 21 bits per axis, two's complement. Valid range
// per coordinate is [-2^20, 2^20 - 1]; anything outside raises
// CoordinateOverflow rather than silently aliasing.
inline constexpr std::int64_t kCoordMin = -(std::int64_t(1) << 20);
inline constexpr std::int64_t kCoordMax = (std::int64_t(1) << 20) - 1;

inline std::uint64_t pack_point(Vec3i p) {
  if (p.x < kCoordMin || p.x > kCoordMax || p.y < kCoordMin ||
      p.y > kCoordMax || p.z < kCoordMin || p.z > kCoordMax) {
    raise(Err::CoordinateOverflow, "coordinate outside packed 21-bit range");
  }
  constexpr std::uint64_t mask = (std::uint64_t(1) << 21) - 1;
  return (std::uint64_t(p.x) & mask) | ((std::uint64_t(p.y) & mask) << 21) |
         ((std::uint64_t(p.z) & mask) << 42);
}

inline Vec3i unpack_point(std::uint64_t key) {
  auto sext = [](std::uint64_t v) {
    // sign-extend 21 -> 64 bits
    std::int64_t s = std::int64_t(v << 43);
    return s >> 43;
  };
  constexpr std::uint64_t mask = (std::uint64_t(1) << 21) - 1;
  return {sext(key & mask), sext((key >> 21) & mask), sext((key >> 42) & mask)};
}

namespace detail {
inline std::uint64_t mix_key(std::uint64_t k) {
  // splitmix64 finalizer; good avalanche for linear probing
  k += 0x9e3779b97f4a7c15ULL;
  k = (k ^ (k >> 30)) * 0xbf58476d1ce4e5b9ULL;
  k = (k ^ (k >> 27)) * 0x94d049bb133111ebULL;
  return k ^ (k >> 31);
}
}  // namespace detail

// Open-addressed hash map from packed point keys to a 64-bit value.
// Linear probing, power-of-two capacity, max load 0.7. The empty slot is
// marked with kEmptyKey, which is not a packable key (top bit set).
class PointMap {
 public:
  static constexpr std::uint64_t kEmptyKey = ~std::uint64_t(0);

  explicit PointMap(std::size_t expected = 16) { rehash_for(expected); }

  void clear() {
    std::fill(keys_.begin(), keys_.end(), kEmptyKey);
    size_ = 0;
  }

  std::size_t size() const { return size_; }

  void insert_or_assign(std::uint64_t key, std::uint64_t value) {
    if ((size_ + 1) * 10 > keys_.size() * 7) rehash_for(size_ * 2 + 8);
    std::size_t i = slot(key);
    if (keys_[i] == kEmptyKey) {
      keys_[i] = key;
      ++size_;
    }
    vals_[i] = value;
  }

  // nullptr when absent
  const std::uint64_t* find(std::uint64_t key) const {
    std::size_t i = slot(key);
    return keys_[i] == kEmptyKey ? nullptr : &vals_[i];
  }

  bool contains(std::uint64_t key) const { return find(key) != nullptr; }

  // Tombstone-free erase (backward-shift deletion keeps probe chains intact).
  void erase(std::uint64_t key) {
    std::size_t i = slot(key);
    if (keys_[i] == kEmptyKey) return;
    --size_;
    std::size_t mask = keys_.size() - 1;
    std::size_t hole = i;
    std::size_t j = i;
    for (;;) {
      j = (j + 1) & mask;
      if (keys_[j] == kEmptyKey) break;
      std::size_t home = detail::mix_key(keys_[j]) & mask;
      // can slot j reach its home without passing the hole?
      bool between = hole <= j ? (home > hole && home <= j)
                               : (home > hole || home <= j);
      if (!between) {
        keys_[hole] = keys_[j];
        vals_[hole] = vals_[j];
        hole = j;
      }
    }
    keys_[hole] = kEmptyKey;
  }

  template <typename F>
  void for_each(F&& f) const {
    for (std::size_t i = 0; i < keys_.size(); ++i) {
      if (keys_[i] != kEmptyKey) f(keys_[i], vals_[i]);
    }
  }

 private:
  std::size_t slot(std::uint64_t key) const {
    std::size_t mask = keys_.size() - 1;
    std::size_t i = detail::mix_key(key) & mask;
    while (keys_[i] != kEmptyKey && keys_[i] != key) i = (i + 1) & mask;
    return i;
  }

  void rehash_for(std::size_t want) {
    std::size_t cap = 16;
    while (cap * 7 < want * 10) cap <<= 1;
    std::vector<std::uint64_t> old_keys = std::move(keys_);
    std::vector<std::uint64_t> old_vals = std::move(vals_);
    keys_.assign(cap, kEmptyKey);
    vals_.assign(cap, 0);
    size_ = 0;
    for (std::size_t i = 0; i < old_keys.size(); ++i) {
      if (old_keys[i] != kEmptyKey) insert_or_assign(old_keys[i], old_vals[i]);
    }
  }

  std::vector<std::uint64_t> keys_;
  std::vector<std::uint64_t> vals_;
  std::size_t size_ = 0;
};

class PointSet {
 public:
  explicit PointSet(std::size_t expected = 16) : map_(expected) {}

  void insert(Vec3i p) { map_.insert_or_assign(pack_point(p), 1); }
  void insert_key(std::uint64_t k) { map_.insert_or_assign(k, 1); }
  bool contains(Vec3i p) const { return map_.contains(pack_point(p)); }
  bool contains_key(std::uint64_t k) const { return map_.contains(k); }
  std::size_t size() const { return map_.size(); }
  void clear() { map_.clear(); }

  std::vector<Vec3i> sorted_points() const {
    std::vector<Vec3i> out;
    out.reserve(map_.size());
    map_.for_each([&](std::uint64_t k, std::uint64_t) {
      out.push_back(unpack_point(k));
    });
    std::sort(out.begin(), out.end());
    return out;
  }

 private:
  PointMap map_;
};

// Mesh level n: lattice 2^{-n} Z^3 represented by integer coordinates; a
// lattice point p corresponds to the physical point p * 2^{-n}.
inline double mesh_h(int n) { return std::ldexp(1.0, -n); }

// Largest integer m with m < s (membership d2 < s^2 becomes d2 <= m).
std::int64_t strict_sq_threshold(double radius);
// Largest integer m with m <= s^2 (closed-ball membership d2 <= m).
std::int64_t closed_sq_threshold(double radius);
// Largest integer m with m <= s (closed comparisons).
std::int64_t closed_threshold(double bound);

// A subset of the lattice with exact membership tests. Three kinds:
//   Ball:  |p - c|_2 < radius      (strict, squared-integer compare)
//   Box:   |p - c|_inf <= half     (closed on all faces)
//   Explicit: finite point set
// Coordinates and radii are in lattice units of the mesh the caller works at.
class Domain {
 public:
  enum class Kind { Ball, Box, Explicit };

  static Domain ball(Vec3i center, double radius);
  static Domain box(Vec3i center, double half_side);
  static Domain explicit_set(std::vector<Vec3i> pts);

  // Unit-ball domain at mesh n (radius 2^n lattice units), and the scaled
  // variants experiments use.
  static Domain scaled_ball(double cx, double cy, double cz,
                            double radius_physical, int mesh);

  Kind kind() const { return kind_; }

  bool contains(Vec3i p) const {
    switch (kind_) {
      case Kind::Ball:
        return norm2(p - center_) <= ball_thr_;
      case Kind::Box:
        return norm_inf(p - center_) <= box_thr_;
      case Kind::Explicit:
        return set_.contains(p);
    }
    return false;
  }

  // Deterministic (lexicographic) enumeration of the domain's points.
  // Intended for small domains; linear in the bounding box for Ball/Box.
  std::vector<Vec3i> interior_points() const;

  // Outer boundary: points off the domain adjacent to it. Inner boundary:
  // domain points adjacent to the complement. Both sorted.
  std::vector<Vec3i> boundary_points() const;
  std::vector<Vec3i> inner_boundary_points() const;

  Vec3i center() const { return center_; }

 private:
  Kind kind_ = Kind::Explicit;
  Vec3i center_;
  std::int64_t ball_thr_ = -1;  // membership: |p-c|^2 <= ball_thr_
  std::int64_t box_thr_ = -1;   // membership: |p-c|_inf <= box_thr_
  PointSet set_;
  std::vector<Vec3i> explicit_pts_;
  std::int64_t bound_ = 0;  // bounding half-width for enumeration
};

// A nearest-neighbor lattice path. mesh tags the scale (physical position of
// a point is p * 2^{-mesh}); operations that are scale-free ignore it.
// Consecutive points must differ by one kSteps step; validate() enforces it.
struct LatticePath {
  int mesh = 0;
  std::vector<Vec3i> pts;

  std::size_t length() const { return pts.empty() ? 0 : pts.size() - 1; }
  void validate() const;
};

// Simple (self-avoiding) path; same layout, distinctness is the producer's
// contract and validate() checks it.
struct SimplePath : LatticePath {
  void validate() const;
};

// Global toggle: when on, path producers validate their outputs. Tests and
// the CLI selftest switch it on; hot production loops leave it off.
void set_path_validation(bool on);
bool path_validation_enabled();

// Precomputed integer offsets with |v|^2 <= thr, sorted; shared by the
// neighborhood scans in the observables module.
std::vector<Vec3i> ball_offsets(std::int64_t thr);

}  // namespace lerw
