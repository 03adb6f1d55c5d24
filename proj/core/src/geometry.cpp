#include "lerw/geometry.hpp"

#include <atomic>

namespace lerw {

const char* err_name(Err e) {
  switch (e) {
    case Err::StoppingBudgetExceeded: return "StoppingBudgetExceeded";
    case Err::NeverExits: return "NeverExits";
    case Err::NeverHits: return "NeverHits";
    case Err::NotInDomain: return "NotInDomain";
    case Err::EmptyDomain: return "EmptyDomain";
    case Err::EmptyPath: return "EmptyPath";
    case Err::NotAPath: return "NotAPath";
    case Err::EndpointMismatch: return "EndpointMismatch";
    case Err::CoordinateOverflow: return "CoordinateOverflow";
    case Err::SingularSystem: return "SingularSystem";
    case Err::DomainTooLarge: return "DomainTooLarge";
    case Err::DeadEnd: return "DeadEnd";
    case Err::PreconditionViolated: return "PreconditionViolated";
    case Err::NoConditioningEvents: return "NoConditioningEvents";
    case Err::ZeroMeanX: return "ZeroMeanX";
    case Err::BadRadii: return "BadRadii";
    case Err::BadDelta: return "BadDelta";
    case Err::NeverExitsBox: return "NeverExitsBox";
    case Err::BetaOutOfRange: return "BetaOutOfRange";
    case Err::EmptySet: return "EmptySet";
    case Err::InsufficientLevels: return "InsufficientLevels";
    case Err::UnknownExperiment: return "UnknownExperiment";
    case Err::InvalidParams: return "InvalidParams";
    case Err::IoFailure: return "IoFailure";
    case Err::SchemaMismatch: return "SchemaMismatch";
  }
  return "UnknownError";
}

std::int64_t strict_sq_threshold(double radius) {
  if (radius <= 0.0) return -1;
  long double s = (long double)radius * (long double)radius;
  long double f = std::floor(s);
  std::int64_t m = (std::int64_t)f;
  if (f == s) m -= 1;  // d2 < s with s integral means d2 <= s-1
  return m;
}

std::int64_t closed_sq_threshold(double radius) {
  if (radius < 0.0) return -1;
  long double s = (long double)radius * (long double)radius;
  return (std::int64_t)std::floor(s);
}

std::int64_t closed_threshold(double bound) {
  return (std::int64_t)std::floor((long double)bound);
}

static std::int64_t isqrt_floor(std::int64_t v) {
  if (v < 0) return -1;
  auto r = (std::int64_t)std::sqrt((double)v);
  while (r * r > v) --r;
  while ((r + 1) * (r + 1) <= v) ++r;
  return r;
}

Domain Domain::ball(Vec3i center, double radius) {
  Domain d;
  d.kind_ = Kind::Ball;
  d.center_ = center;
  d.ball_thr_ = strict_sq_threshold(radius);
  d.bound_ = isqrt_floor(d.ball_thr_);
  return d;
}

Domain Domain::box(Vec3i center, double half_side) {
  Domain d;
  d.kind_ = Kind::Box;
  d.center_ = center;
  d.box_thr_ = half_side < 0 ? -1 : closed_threshold(half_side);
  d.bound_ = std::max<std::int64_t>(d.box_thr_, -1);
  return d;
}

Domain Domain::explicit_set(std::vector<Vec3i> pts) {
  Domain d;
  d.kind_ = Kind::Explicit;
  std::sort(pts.begin(), pts.end());
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
  for (const auto& p : pts) d.set_.insert(p);
  d.explicit_pts_ = std::move(pts);
  std::int64_t b = 0;
  for (const auto& p : d.explicit_pts_) b = std::max(b, norm_inf(p));
  d.bound_ = b;
  if (!d.explicit_pts_.empty()) d.center_ = d.explicit_pts_.front();
  return d;
}

Domain Domain::scaled_ball(double cx, double cy, double cz,
                           double radius_physical, int mesh) {
  double scale = std::ldexp(1.0, mesh);
  Vec3i c{std::llround(cx * scale), std::llround(cy * scale),
          std::llround(cz * scale)};
  return ball(c, radius_physical * scale);
}

std::vector<Vec3i> Domain::interior_points() const {
  if (kind_ == Kind::Explicit) return explicit_pts_;
  std::vector<Vec3i> out;
  if (bound_ < 0) return out;
  for (std::int64_t x = -bound_; x <= bound_; ++x) {
    for (std::int64_t y = -bound_; y <= bound_; ++y) {
      for (std::int64_t z = -bound_; z <= bound_; ++z) {
        Vec3i p = center_ + Vec3i{x, y, z};
        if (contains(p)) out.push_back(p);
      }
    }
  }
  return out;
}

std::vector<Vec3i> Domain::boundary_points() const {
  PointSet seen;
  std::vector<Vec3i> out;
  for (const auto& p : interior_points()) {
    for (const auto& s : kSteps) {
      Vec3i q = p + s;
      if (!contains(q) && !seen.contains(q)) {
        seen.insert(q);
        out.push_back(q);
      }
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<Vec3i> Domain::inner_boundary_points() const {
  std::vector<Vec3i> out;
  for (const auto& p : interior_points()) {
    for (const auto& s : kSteps) {
      if (!contains(p + s)) {
        out.push_back(p);
        break;
      }
    }
  }
  return out;
}

void LatticePath::validate() const {
  require(!pts.empty(), Err::EmptyPath, "path has no points");
  for (std::size_t i = 1; i < pts.size(); ++i) {
    if (norm1(pts[i] - pts[i - 1]) != 1) {
      raise(Err::NotAPath, "consecutive points are not nearest neighbors");
    }
  }
}

void SimplePath::validate() const {
  LatticePath::validate();
  PointSet seen(pts.size() * 2);
  for (const auto& p : pts) {
    require(!seen.contains(p), Err::NotAPath, "simple path revisits a point");
    seen.insert(p);
  }
}

static std::atomic<bool> g_validate{false};
void set_path_validation(bool on) { g_validate.store(on); }
bool path_validation_enabled() { return g_validate.load(); }

std::vector<Vec3i> ball_offsets(std::int64_t thr) {
  std::vector<Vec3i> out;
  if (thr < 0) return out;
  std::int64_t b = isqrt_floor(thr);
  for (std::int64_t x = -b; x <= b; ++x) {
    for (std::int64_t y = -b; y <= b; ++y) {
      for (std::int64_t z = -b; z <= b; ++z) {
        Vec3i v{x, y, z};
        if (norm2(v) <= thr) out.push_back(v);
      }
    }
  }
  return out;
}

}  // namespace lerw
