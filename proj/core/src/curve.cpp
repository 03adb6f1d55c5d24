#include "lerw/curve.hpp"

#include <charconv>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <sstream>

#include "lerw/errors.hpp"
#include "lerw/format.hpp"

namespace lerw {

namespace {

// strict header-field parsers: the whole token must be numeric
long long parse_ll_field(const std::string& s, const char* what) {
  long long v = 0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  require(ec == std::errc() && p == s.data() + s.size(), Err::SchemaMismatch,
          std::string("bad curve header field ") + what + ": " + s);
  return v;
}

double parse_double_field(const std::string& s, const char* what) {
  char* end = nullptr;
  double v = std::strtod(s.c_str(), &end);
  require(!s.empty() && end == s.c_str() + s.size(), Err::SchemaMismatch,
          std::string("bad curve header field ") + what + ": " + s);
  return v;
}

}  // namespace

ParamCurve ParamCurve::from_breakpoints(std::vector<double> times,
                                        std::vector<Vec3d> points) {
  require(!times.empty(), Err::EmptyPath, "curve needs a breakpoint");
  require(times.size() == points.size(), Err::InvalidParams,
          "times/points length mismatch");
  require(times.front() == 0.0, Err::InvalidParams,
          "curve time must start at 0");
  for (std::size_t i = 1; i < times.size(); ++i) {
    require(times[i] > times[i - 1], Err::InvalidParams,
            "breakpoint times must increase strictly");
  }
  ParamCurve c;
  c.times_ = std::move(times);
  c.points_ = std::move(points);
  return c;
}

Vec3d ParamCurve::eval(double t) const {
  if (t <= 0.0 || times_.size() == 1) return points_.front();
  if (t >= times_.back()) return points_.back();
  auto it = std::upper_bound(times_.begin(), times_.end(), t);
  std::size_t i = std::size_t(it - times_.begin());  // times_[i-1] <= t < times_[i]
  double t0 = times_[i - 1], t1 = times_[i];
  double s = (t - t0) / (t1 - t0);
  return points_[i - 1] + s * (points_[i] - points_[i - 1]);
}

ParamCurve rescale_to_curve(const LatticePath& path, double beta) {
  require(!path.pts.empty(), Err::EmptyPath, "rescale of empty path");
  require(beta > 1.0 && beta <= 5.0 / 3.0, Err::BetaOutOfRange,
          "beta must lie in (1, 5/3]");
  double dt = std::pow(2.0, -beta * path.mesh);
  double h = std::ldexp(1.0, -path.mesh);
  std::vector<double> times(path.pts.size());
  std::vector<Vec3d> pts(path.pts.size());
  for (std::size_t j = 0; j < path.pts.size(); ++j) {
    times[j] = double(j) * dt;
    pts[j] = {double(path.pts[j].x) * h, double(path.pts[j].y) * h,
              double(path.pts[j].z) * h};
  }
  return ParamCurve::from_breakpoints(std::move(times), std::move(pts));
}

double rho_distance(const ParamCurve& a, const ParamCurve& b) {
  double t1 = a.duration(), t2 = b.duration();
  std::vector<double> grid;
  grid.reserve(a.breakpoint_count() + b.breakpoint_count() + 2);
  grid.push_back(0.0);
  grid.push_back(1.0);
  if (t1 > 0) {
    for (double t : a.times()) grid.push_back(t / t1);
  }
  if (t2 > 0) {
    for (double t : b.times()) grid.push_back(t / t2);
  }
  double sup = 0.0;
  for (double s : grid) {
    if (s < 0.0 || s > 1.0) continue;
    double d = norm(a.eval(s * t1) - b.eval(s * t2));
    if (d > sup) sup = d;
  }
  return std::abs(t1 - t2) + sup;
}

ChiValue chi_time_window(const ParamCurve& a, const ParamCurve& b, int K) {
  require(K >= 1, Err::InvalidParams, "window count must be >= 1");
  ChiValue out;
  // merged breakpoint times, ascending; windows reuse the shared prefix
  std::vector<double> grid;
  grid.reserve(a.breakpoint_count() + b.breakpoint_count());
  grid.insert(grid.end(), a.times().begin(), a.times().end());
  grid.insert(grid.end(), b.times().begin(), b.times().end());
  std::sort(grid.begin(), grid.end());

  double weight = 0.5;
  for (int k = 1; k <= K; ++k, weight *= 0.5) {
    double sup = norm(a.eval(double(k)) - b.eval(double(k)));
    for (double t : grid) {
      if (t > double(k)) break;
      double d = norm(a.eval(t) - b.eval(t));
      if (d > sup) sup = d;
    }
    out.value += weight * std::min(sup, 1.0);
  }
  out.tail = std::ldexp(1.0, -K);
  return out;
}

ParamCurve truncate_at_box_exit(const ParamCurve& curve, double m) {
  require(m > 0.0, Err::InvalidParams, "box half-side must be positive");
  const auto& ts = curve.times();
  const auto& ps = curve.points();
  if (norm_inf(ps.front()) >= m) {
    return ParamCurve::from_breakpoints({0.0}, {ps.front()});
  }
  for (std::size_t i = 1; i < ps.size(); ++i) {
    if (norm_inf(ps[i]) < m) continue;
    // First segment reaching the box face. The previous breakpoint is
    // strictly inside, so the earliest face-plane crossing in [0,1] is the
    // exit; every other coordinate is still inside there, or it would have
    // produced an earlier candidate. Corner ties go to the smaller axis.
    Vec3d p0 = ps[i - 1];
    Vec3d d = ps[i] - ps[i - 1];
    const double comp0[3] = {p0.x, p0.y, p0.z};
    const double compd[3] = {d.x, d.y, d.z};
    double s_star = 2.0;
    int cross_axis = -1;
    double cross_face = 0;
    for (int axis = 0; axis < 3; ++axis) {
      if (compd[axis] == 0.0) continue;
      for (double face : {m, -m}) {
        double s = (face - comp0[axis]) / compd[axis];
        if (s >= 0.0 && s <= 1.0 && s < s_star) {
          s_star = s;
          cross_axis = axis;
          cross_face = face;
        }
      }
    }
    require(cross_axis >= 0, Err::NeverExitsBox,
            "no face crossing found on the exiting segment");
    // pin the crossing coordinate to the face it hit; the rest stay inside
    Vec3d q = p0 + s_star * d;
    double qa[3] = {q.x, q.y, q.z};
    qa[cross_axis] = cross_face;
    for (int axis = 0; axis < 3; ++axis) {
      if (axis != cross_axis) qa[axis] = std::min(m, std::max(-m, qa[axis]));
    }
    double t_exit = ts[i - 1] + s_star * (ts[i] - ts[i - 1]);
    std::vector<double> nt(ts.begin(), ts.begin() + long(i));
    std::vector<Vec3d> np(ps.begin(), ps.begin() + long(i));
    if (t_exit <= nt.back()) {
      t_exit = std::nextafter(nt.back(), t_exit + 1.0);
    }
    nt.push_back(t_exit);
    np.push_back({qa[0], qa[1], qa[2]});
    return ParamCurve::from_breakpoints(std::move(nt), std::move(np));
  }
  raise(Err::NeverExitsBox, "curve stays inside the box of half-side " +
                                g17(m));
}

ChiValue chi_box_truncated(const ParamCurve& a, const ParamCurve& b, int K) {
  require(K >= 1, Err::InvalidParams, "truncation count must be >= 1");
  auto truncated = [](const ParamCurve& c, double m) {
    if (norm_inf(c.points().front()) >= m) {
      return ParamCurve::from_breakpoints({0.0}, {c.points().front()});
    }
    for (const auto& p : c.points()) {
      if (norm_inf(p) >= m) return truncate_at_box_exit(c, m);
    }
    return c;  // never exits: enters the term whole
  };
  ChiValue out;
  double weight = 0.5;
  for (int m = 1; m <= K; ++m, weight *= 0.5) {
    double r = rho_distance(truncated(a, double(m)), truncated(b, double(m)));
    out.value += weight * std::min(r, 1.0);
  }
  out.tail = std::ldexp(1.0, -K);
  return out;
}

double exit_time_increment(const ParamCurve& curve, double r, double delta) {
  require(r > 0.0, Err::BadRadii, "radius must be positive");
  require(delta > 0.0, Err::BadDelta, "delta must be positive");
  double tau_r = truncate_at_box_exit(curve, r).duration();
  double tau_rd = truncate_at_box_exit(curve, r + delta).duration();
  return std::max(0.0, tau_rd - tau_r);
}

double modulus_of_continuity(const ParamCurve& curve, double delta) {
  require(delta > 0.0, Err::BadDelta, "delta must be positive");
  const auto& ts = curve.times();
  const auto& ps = curve.points();
  double best = 0.0;
  std::size_t lo = 0;
  for (std::size_t i = 0; i < ts.size(); ++i) {
    while (ts[i] - ts[lo] > delta) ++lo;
    for (std::size_t j = lo; j < i; ++j) {
      double d = norm(ps[i] - ps[j]);
      if (d > best) best = d;
    }
    // window edges anchored at breakpoint i
    for (double t : {ts[i] - delta, ts[i] + delta}) {
      if (t < 0.0 || t > curve.duration()) continue;
      double d = norm(ps[i] - curve.eval(t));
      if (d > best) best = d;
    }
  }
  return best;
}

double hausdorff_distance(const std::vector<Vec3d>& a,
                          const std::vector<Vec3d>& b) {
  require(!a.empty() && !b.empty(), Err::EmptySet,
          "Hausdorff distance of an empty set");
  auto directed = [](const std::vector<Vec3d>& from,
                     const std::vector<Vec3d>& to) {
    double worst = 0.0;
    for (const auto& p : from) {
      double nearest = std::numeric_limits<double>::infinity();
      for (const auto& q : to) {
        nearest = std::min(nearest, norm2d(p - q));
        if (nearest == 0.0) break;
      }
      worst = std::max(worst, nearest);
    }
    return std::sqrt(worst);
  };
  return std::max(directed(a, b), directed(b, a));
}

namespace {

double point_segment_dist2(Vec3d p, Vec3d a, Vec3d b) {
  Vec3d d = b - a;
  double dd = norm2d(d);
  if (dd == 0.0) return norm2d(p - a);
  double s = ((p.x - a.x) * d.x + (p.y - a.y) * d.y + (p.z - a.z) * d.z) / dd;
  s = std::clamp(s, 0.0, 1.0);
  return norm2d(p - (a + s * d));
}

double point_to_curve(Vec3d p, const ParamCurve& c) {
  const auto& ps = c.points();
  double best = norm2d(p - ps.front());
  for (std::size_t i = 1; i < ps.size(); ++i) {
    best = std::min(best, point_segment_dist2(p, ps[i - 1], ps[i]));
  }
  return std::sqrt(best);
}

// sup over the segment [p0, p1] of dist(., other), bounded two ways: the
// 1-Lipschitz bound max(endpoints) + half-length, and the convexity bound
// min over target segments b of max(dist(p0,b), dist(p1,b)) (dist(., b) is
// convex, so its segment sup sits at an endpoint). The second collapses the
// bound on overlapping or parallel stretches, where Lipschitz alone would
// keep subdividing down to tol.
double segment_sup(Vec3d p0, Vec3d p1, const ParamCurve& other, double tol,
                   double best) {
  const auto& ps = other.points();
  double d20 = norm2d(p0 - ps.front());
  double d21 = norm2d(p1 - ps.front());
  double ub2 = std::max(d20, d21);
  for (std::size_t i = 1; i < ps.size(); ++i) {
    double a = point_segment_dist2(p0, ps[i - 1], ps[i]);
    double b = point_segment_dist2(p1, ps[i - 1], ps[i]);
    d20 = std::min(d20, a);
    d21 = std::min(d21, b);
    ub2 = std::min(ub2, std::max(a, b));
  }
  double d0 = std::sqrt(d20), d1 = std::sqrt(d21);
  double half = 0.5 * norm(p1 - p0);
  double lo = std::max(d0, d1);
  double up = std::min(lo + half, std::sqrt(ub2));
  if (up - lo <= tol || up <= best + tol || half <= tol) return lo;
  Vec3d mid = p0 + 0.5 * (p1 - p0);
  double left = segment_sup(p0, mid, other, tol, std::max(best, lo));
  double right = segment_sup(mid, p1, other, tol, std::max({best, lo, left}));
  return std::max({lo, left, right});
}

double directed_curve(const ParamCurve& from, const ParamCurve& to,
                      double tol) {
  const auto& ps = from.points();
  double best = point_to_curve(ps.front(), to);
  for (std::size_t i = 1; i < ps.size(); ++i) {
    best = std::max(best, segment_sup(ps[i - 1], ps[i], to, tol, best));
  }
  return best;
}

}  // namespace

double hausdorff_distance(const ParamCurve& a, const ParamCurve& b,
                          double tol) {
  require(tol > 0.0, Err::InvalidParams, "tolerance must be positive");
  return std::max(directed_curve(a, b, tol), directed_curve(b, a, tol));
}

void write_curve(std::ostream& os, const ParamCurve& curve, int mesh,
                 double beta) {
  os << "mesh=" << mesh << " beta=" << g17(beta)
     << " len=" << (curve.breakpoint_count() - 1) << "\n";
  for (std::size_t i = 0; i < curve.breakpoint_count(); ++i) {
    const Vec3d& p = curve.points()[i];
    os << g17(curve.times()[i]) << ' ' << g17(p.x) << ' ' << g17(p.y) << ' '
       << g17(p.z) << "\n";
  }
  require(bool(os), Err::IoFailure, "curve write failed");
}

CurveFile read_curve(std::istream& is) {
  std::string header;
  require(bool(std::getline(is, header)), Err::IoFailure,
          "missing curve header");
  CurveFile out;
  long long len = -1;
  {
    std::istringstream hs(header);
    std::string tok;
    bool saw_mesh = false, saw_beta = false, saw_len = false;
    while (hs >> tok) {
      if (tok.rfind("mesh=", 0) == 0) {
        out.mesh = int(parse_ll_field(tok.substr(5), "mesh"));
        saw_mesh = true;
      } else if (tok.rfind("beta=", 0) == 0) {
        out.beta = parse_double_field(tok.substr(5), "beta");
        saw_beta = true;
      } else if (tok.rfind("len=", 0) == 0) {
        len = parse_ll_field(tok.substr(4), "len");
        saw_len = true;
      } else {
        raise(Err::SchemaMismatch, "unknown curve header field: " + tok);
      }
    }
    require(saw_mesh && saw_beta && saw_len && len >= 0, Err::SchemaMismatch,
            "curve header must carry mesh=, beta=, len=");
  }
  std::vector<double> times;
  std::vector<Vec3d> pts;
  times.reserve(std::size_t(len) + 1);
  pts.reserve(std::size_t(len) + 1);
  for (long long i = 0; i <= len; ++i) {
    double t, x, y, z;
    require(bool(is >> t >> x >> y >> z), Err::SchemaMismatch,
            "curve body ended early at line " + std::to_string(i));
    times.push_back(t);
    pts.push_back({x, y, z});
  }
  try {
    out.curve = ParamCurve::from_breakpoints(std::move(times), std::move(pts));
  } catch (const Error& e) {
    raise(Err::SchemaMismatch,
          std::string("curve body is not a valid curve: ") + e.what());
  }
  return out;
}

void write_curve_file(const std::string& path, const ParamCurve& curve,
                      int mesh, double beta) {
  std::ofstream os(path);
  require(bool(os), Err::IoFailure, "cannot open for write: " + path);
  write_curve(os, curve, mesh, beta);
}

CurveFile read_curve_file(const std::string& path) {
  std::ifstream is(path);
  require(bool(is), Err::IoFailure, "cannot open for read: " + path);
  return read_curve(is);
}

}  // namespace lerw
