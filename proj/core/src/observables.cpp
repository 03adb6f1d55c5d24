#include "lerw/observables.hpp"

#include <algorithm>
#include <cmath>

namespace lerw {

namespace {

// divisor > 0
std::int64_t floor_div(std::int64_t a, std::int64_t b) {
  return a >= 0 ? a / b : -((-a + b - 1) / b);
}
std::int64_t ceil_div(std::int64_t a, std::int64_t b) {
  return a >= 0 ? (a + b - 1) / b : -((-a) / b);
}

}  // namespace

OccupationMeasure occupation_measure(const SimplePath& path, double beta,
                                     bool enforce_range) {
  require(!path.pts.empty(), Err::EmptyPath, "occupation measure of nothing");
  if (enforce_range) {
    require(beta > 1.0 && beta <= 5.0 / 3.0, Err::BetaOutOfRange,
            "beta outside (1, 5/3]");
  }
  OccupationMeasure m;
  m.mesh = path.mesh;
  m.beta_used = beta;
  m.atom_mass = std::exp2(-beta * double(path.mesh));
  m.support = path.pts;
  return m;
}

BoxCover minimal_cover(double eps) {
  require(eps > 0.0 && eps <= 2.0, Err::InvalidParams, "eps must be in (0, 2]");
  BoxCover cover;
  cover.eps = eps;
  // cell k overlaps the open ball iff the closest point of the closed box
  // [eps k - eps/2, eps k + eps/2]^3 is strictly inside it
  auto overlaps = [eps](std::int64_t kx, std::int64_t ky, std::int64_t kz) {
    double s = 0;
    for (std::int64_t c : {kx, ky, kz}) {
      double d = std::abs(double(c)) * eps - eps / 2;
      if (d > 0) s += d * d;
    }
    return s < 1.0;
  };
  std::int64_t K = std::int64_t(std::floor(1.0 / eps + 0.5)) + 1;
  cover.cells.push_back({0, 0, 0});
  for (std::int64_t x = -K; x <= K; ++x) {
    for (std::int64_t y = -K; y <= K; ++y) {
      for (std::int64_t z = -K; z <= K; ++z) {
        if (x == 0 && y == 0 && z == 0) continue;
        if (overlaps(x, y, z)) cover.cells.push_back({x, y, z});
      }
    }
  }
  cover.centers.reserve(cover.cells.size());
  for (std::size_t i = 0; i < cover.cells.size(); ++i) {
    const Vec3i& c = cover.cells[i];
    cover.centers.push_back(
        {eps * double(c.x), eps * double(c.y), eps * double(c.z)});
    cover.cell_index.insert_or_assign(pack_point(c), i);
  }
  return cover;
}

std::ptrdiff_t BoxCover::assign(double px, double py, double pz) const {
  auto axis_candidates = [this](double v) {
    std::vector<std::int64_t> ks;
    std::int64_t lo = std::int64_t(std::floor(v / eps - 0.5));
    std::int64_t hi = std::int64_t(std::ceil(v / eps + 0.5));
    for (std::int64_t k = lo; k <= hi; ++k) {
      if (std::abs(v - eps * double(k)) <= eps / 2) ks.push_back(k);
    }
    return ks;
  };
  auto xs = axis_candidates(px), ys = axis_candidates(py),
       zs = axis_candidates(pz);
  std::ptrdiff_t best = -1;
  for (std::int64_t kx : xs) {
    for (std::int64_t ky : ys) {
      for (std::int64_t kz : zs) {
        if (const std::uint64_t* at =
                cell_index.find(pack_point({kx, ky, kz}))) {
          auto idx = std::ptrdiff_t(*at);
          if (best < 0 || idx < best) best = idx;
        }
      }
    }
  }
  return best;
}

std::vector<std::size_t> BoxCover::typical_indices(double threshold) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < centers.size(); ++i) {
    const auto& c = centers[i];
    double nc = std::sqrt(c[0] * c[0] + c[1] * c[1] + c[2] * c[2]);
    if (nc > threshold && std::abs(1.0 - nc) > threshold) out.push_back(i);
  }
  return out;
}

int default_fine_exponent(int k, int mesh) {
  require(k >= 1, Err::InvalidParams, "coarse exponent k must be >= 1");
  require(mesh >= k + 2, Err::InvalidParams,
          "mesh too small for coarse exponent k (need mesh >= k+2)");
  long long k4 = (long long)k * k * k * k;
  if (k4 <= mesh - 2) return int(k4);
  // k^4 outruns the mesh: balance the box-to-fine and fine-to-lattice gaps
  int q = (mesh + k) / 2;
  return std::clamp(q, k, mesh - 2);
}

BoxPartition make_box_partition(int mesh, int k, int q, double cx, double cy,
                                double cz) {
  require(k >= 1, Err::InvalidParams, "coarse exponent k must be >= 1");
  require(q >= k, Err::InvalidParams, "fine exponent q must be >= k");
  require(q <= mesh, Err::InvalidParams, "fine exponent q must be <= mesh");
  require(k < mesh, Err::InvalidParams, "coarse exponent k must be < mesh");
  BoxPartition part;
  part.mesh = mesh;
  part.k = k;
  part.q = q;
  part.side = std::int64_t(1) << (mesh - k);
  part.fine_side = std::int64_t(1) << (mesh - q);
  part.boxes_per_axis = std::int64_t(1) << (q - k);
  double scale = std::ldexp(1.0, mesh);
  std::int64_t half = part.side / 2;
  double cs[3] = {cx, cy, cz};
  std::int64_t corner[3];
  for (int a = 0; a < 3; ++a) {
    double c = cs[a] * scale;
    std::int64_t cl = std::llround(c);
    require(std::abs(c - double(cl)) <= 1e-9, Err::InvalidParams,
            "box center must sit on the mesh lattice");
    corner[a] = cl - half;
  }
  part.corner = {corner[0], corner[1], corner[2]};
  return part;
}

BoxStats box_stats(const SimplePath& path, const BoxPartition& part,
                   int enlargement) {
  require(enlargement >= 1, Err::InvalidParams, "enlargement must be >= 1");
  require(path.mesh == part.mesh, Err::InvalidParams,
          "path and partition are at different meshes");
  const std::int64_t S = part.side, F = part.fine_side, A = part.boxes_per_axis;
  const std::int64_t e = enlargement;
  BoxStats out;

  // dense accumulators when the cell cube is small, sparse otherwise
  bool dense = A * A * A <= (std::int64_t(1) << 21);
  std::vector<std::uint32_t> xc;
  std::vector<std::uint8_t> yf;
  if (dense) {
    xc.assign(std::size_t(A * A * A), 0);
    yf.assign(std::size_t(A * A * A), 0);
  }

  auto cell_of = [F](std::int64_t rel) {
    // boundary points tie to the smaller cell index
    return rel == 0 ? 0 : (rel - 1) / F;
  };

  for (const Vec3i& p : path.pts) {
    std::int64_t rel[3] = {p.x - part.corner.x, p.y - part.corner.y,
                           p.z - part.corner.z};
    if (rel[0] >= 0 && rel[0] <= S && rel[1] >= 0 && rel[1] <= S &&
        rel[2] >= 0 && rel[2] <= S) {
      std::int64_t ix = cell_of(rel[0]), iy = cell_of(rel[1]),
                   iz = cell_of(rel[2]);
      ++out.points_in_box;
      if (dense) {
        ++xc[std::size_t(ix + A * (iy + A * iz))];
      } else {
        std::uint64_t key = pack_point({ix, iy, iz});
        const std::uint64_t* v = out.x_counts.find(key);
        out.x_counts.insert_or_assign(key, v ? *v + 1 : 1);
      }
    }
    // cells whose enlargement (concentric, half-side e*F) contains p:
    // |2 rel - (2i+1) F| <= 2 e F per axis
    std::int64_t lo[3], hi[3];
    bool any = true;
    for (int a = 0; a < 3 && any; ++a) {
      lo[a] = std::max<std::int64_t>(
          ceil_div(2 * rel[a] - (2 * e + 1) * F, 2 * F), 0);
      hi[a] = std::min<std::int64_t>(
          floor_div(2 * rel[a] + (2 * e - 1) * F, 2 * F), A - 1);
      if (lo[a] > hi[a]) any = false;
    }
    if (!any) continue;
    for (std::int64_t ix = lo[0]; ix <= hi[0]; ++ix) {
      for (std::int64_t iy = lo[1]; iy <= hi[1]; ++iy) {
        for (std::int64_t iz = lo[2]; iz <= hi[2]; ++iz) {
          if (dense) {
            yf[std::size_t(ix + A * (iy + A * iz))] = 1;
          } else {
            out.y_hits.insert({ix, iy, iz});
          }
        }
      }
    }
  }

  if (dense) {
    for (std::int64_t iz = 0; iz < A; ++iz) {
      for (std::int64_t iy = 0; iy < A; ++iy) {
        for (std::int64_t ix = 0; ix < A; ++ix) {
          std::size_t flat = std::size_t(ix + A * (iy + A * iz));
          if (xc[flat]) {
            out.x_counts.insert_or_assign(pack_point({ix, iy, iz}), xc[flat]);
          }
          if (yf[flat]) out.y_hits.insert({ix, iy, iz});
        }
      }
    }
  }
  out.boxes_hit = out.y_hits.size();
  return out;
}

ReferenceBoxStat reference_box_stat(const SimplePath& path,
                                    const BoxPartition& part,
                                    int enlargement) {
  require(enlargement >= 1, Err::InvalidParams, "enlargement must be >= 1");
  require(path.mesh == part.mesh, Err::InvalidParams,
          "path and partition are at different meshes");
  const std::int64_t F = part.fine_side;
  const std::int64_t e = enlargement;
  Vec3i x0{std::int64_t(1) << (part.mesh - 1), 0, 0};
  ReferenceBoxStat out;
  for (const Vec3i& p : path.pts) {
    Vec3i d2 = {2 * (p.x - x0.x), 2 * (p.y - x0.y), 2 * (p.z - x0.z)};
    std::int64_t m = norm_inf(d2);
    if (m <= F) ++out.x0;
    if (m <= 2 * e * F) out.y0 = true;
  }
  return out;
}

Alpha0Estimate alpha0_estimate(const std::vector<ReferenceBoxStat>& samples) {
  Alpha0Estimate est;
  double sum = 0;
  for (const auto& s : samples) {
    if (s.y0) {
      ++est.conditioned;
      sum += double(s.x0);
    }
  }
  require(est.conditioned > 0, Err::NoConditioningEvents,
          "no sample hit the reference box enlargement");
  est.alpha0 = sum / double(est.conditioned);
  if (est.conditioned > 1) {
    double ss = 0;
    for (const auto& s : samples) {
      if (s.y0) {
        double d = double(s.x0) - est.alpha0;
        ss += d * d;
      }
    }
    double var = ss / double(est.conditioned - 1);
    est.std_error = std::sqrt(var / double(est.conditioned));
  }
  return est;
}

double zeta_surrogate(const Alpha0Estimate& est, int mesh, double beta) {
  return est.alpha0 * std::exp2(-beta * double(mesh));
}

double l2_discrepancy(const std::vector<std::pair<double, double>>& xy,
                      double alpha0) {
  require(!xy.empty(), Err::InvalidParams, "no samples");
  double num = 0, mean_x = 0;
  for (const auto& [x, y] : xy) {
    double d = x - alpha0 * y;
    num += d * d;
    mean_x += x;
  }
  num /= double(xy.size());
  mean_x /= double(xy.size());
  require(mean_x != 0.0, Err::ZeroMeanX, "every sample has X = 0");
  return num / (mean_x * mean_x);
}

std::vector<Vec3i> quasi_loops(const LatticePath& path, double s, double r) {
  require(s > 0.0 && s < r, Err::BadRadii, "need 0 < s < r");
  require(!path.pts.empty(), Err::EmptyPath, "no path");
  require(path.pts.size() <= 0xFFFFFFFFull, Err::InvalidParams,
          "path too long for the index packing");
  double scale = std::ldexp(1.0, path.mesh);
  std::int64_t s_thr = closed_sq_threshold(s * scale);
  std::int64_t r_thr = closed_sq_threshold(r * scale);
  std::vector<Vec3i> out;
  if (s_thr < 0) return out;  // s-ball holds no lattice points at all

  // pass 1: for every center x within s of the path, the first and last
  // visit times of the closed s-ball around x, packed (first << 32 | last)
  auto offs = ball_offsets(s_thr);
  PointMap span(path.pts.size() * 2);
  for (std::size_t j = 0; j < path.pts.size(); ++j) {
    for (const Vec3i& o : offs) {
      std::uint64_t key = pack_point(path.pts[j] + o);
      if (const std::uint64_t* v = span.find(key)) {
        span.insert_or_assign(key, (*v & 0xFFFFFFFF00000000ull) | j);
      } else {
        span.insert_or_assign(key, (std::uint64_t(j) << 32) | j);
      }
    }
  }

  // between two s-visits the walk must travel out past r and back, which
  // takes at least 2 (sqrt(r_thr+1) - sqrt(s_thr)) unit steps
  double gap =
      2.0 * (std::sqrt(double(r_thr + 1)) - std::sqrt(double(s_thr)));
  span.for_each([&](std::uint64_t key, std::uint64_t v) {
    std::size_t f = std::size_t(v >> 32);
    std::size_t l = std::size_t(v & 0xFFFFFFFFull);
    if (l <= f) return;
    if (double(l - f) < gap - 1e-9) return;
    Vec3i x = unpack_point(key);
    for (std::size_t j = f; j <= l; ++j) {
      if (norm2(path.pts[j] - x) > r_thr) {
        out.push_back(x);
        break;
      }
    }
  });
  std::sort(out.begin(), out.end());
  return out;
}

HittabilityProbe hittability_probe(const SimplePath& path, double eps,
                                   std::uint32_t probes, RngStream& rng,
                                   std::uint64_t candidate_cap) {
  require(eps > 0.0 && eps < 1.0, Err::InvalidParams, "eps must be in (0, 1)");
  require(probes >= 1, Err::InvalidParams, "probes must be >= 1");
  require(candidate_cap >= 1, Err::InvalidParams, "candidate cap must be >= 1");
  require(!path.pts.empty(), Err::EmptyPath, "no path");
  double scale = std::ldexp(1.0, path.mesh);
  std::int64_t near_thr = closed_sq_threshold(eps * eps * scale);
  double kill_radius = std::sqrt(eps) * scale;

  HittabilityProbe res;
  if (near_thr < 0) return res;  // nothing within eps^2 on this lattice

  auto offs = ball_offsets(near_thr);
  PointSet cand(path.pts.size() * 4);
  for (const Vec3i& p : path.pts) {
    for (const Vec3i& o : offs) cand.insert(p + o);
  }
  auto pts = cand.sorted_points();
  if (pts.empty()) return res;

  PointSet on_path(path.pts.size() * 2);
  for (const Vec3i& p : path.pts) on_path.insert(p);

  std::uint64_t stride = (pts.size() + candidate_cap - 1) / candidate_cap;
  for (std::uint64_t i = 0; i < pts.size(); i += stride) {
    Vec3i x = pts[std::size_t(i)];
    Domain ball = Domain::ball(x, kill_radius);
    std::uint32_t escaped = 0;
    for (std::uint32_t t = 0; t < probes; ++t) {
      StopRule rule;
      rule.exit_domain = &ball;
      rule.hit_set = &on_path;
      WalkResult w = sample_srw(x, rule, rng, path.mesh);
      if (w.cause == StopCause::ExitedDomain) ++escaped;
    }
    double pe = double(escaped) / double(probes);
    if (res.candidates_tested == 0 || pe > res.worst_escape) {
      res.worst_escape = pe;
      res.worst_point = x;
    }
    ++res.candidates_tested;
  }
  return res;
}

EscapeObservation escape_event_pair(std::int64_t m, std::int64_t n,
                                    RngStream& rng) {
  require(n >= 1 && m >= 0 && m <= n, Err::BadRadii,
          "need 0 <= m <= n with n >= 1");
  Domain bn = Domain::ball({0, 0, 0}, double(n));
  SimplePath gamma = sample_lerw_to_exit({0, 0, 0}, bn, rng, 0);

  StopRule rule;
  rule.exit_domain = &bn;
  WalkResult w2 = sample_srw({0, 0, 0}, rule, rng, 0);
  PointSet w2set(w2.path.pts.size() * 2);
  for (std::size_t i = 1; i < w2.path.pts.size(); ++i) {
    w2set.insert(w2.path.pts[i]);
  }

  std::int64_t m_thr = strict_sq_threshold(double(m));
  std::size_t s = 0;
  for (std::size_t j = 0; j < gamma.pts.size(); ++j) {
    if (norm2(gamma.pts[j]) <= m_thr) s = j;
  }

  bool hit_full = false, hit_tail = false;
  for (std::size_t j = 0; j < gamma.pts.size(); ++j) {
    if (w2set.contains(gamma.pts[j])) {
      hit_full = true;
      if (j >= s) {
        hit_tail = true;
        break;
      }
    }
  }
  EscapeObservation o;
  o.lerw_length = gamma.length();
  o.full_escape = !hit_full;
  o.tail_escape = !hit_tail;
  return o;
}

bool escape_event_sample(std::int64_t m, std::int64_t n, RngStream& rng) {
  return escape_event_pair(m, n, rng).tail_escape;
}

bool one_point_hit(const SimplePath& path, double x, double y, double z) {
  require(!path.pts.empty(), Err::EmptyPath, "no path");
  double n2 = x * x + y * y + z * z;
  require(n2 > 0.0 && n2 < 1.0, Err::InvalidParams,
          "point must lie in the open unit ball, off the origin");
  double scale = std::ldexp(1.0, path.mesh);
  Vec3i q{std::llround(x * scale), std::llround(y * scale),
          std::llround(z * scale)};
  for (const Vec3i& p : path.pts) {
    if (p == q) return true;
  }
  return false;
}

}  // namespace lerw
