#include "lerw/harmonic.hpp"

#include <optional>

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

namespace lerw {

namespace {

struct InteriorSystem {
  std::vector<Vec3i> points;  // free interior, lex order
  PointMap index;             // packed point -> row
  Eigen::SparseMatrix<double> lap;  // 6 I - adjacency over free points
};

// Enumerate the free interior (domain minus zero set) and assemble the
// lattice Laplacian. Refuses oversized domains before enumerating a huge
// bounding box.
InteriorSystem build_system(const Domain& domain, const PointSet& zeros,
                            std::size_t cap) {
  InteriorSystem sys;
  require(cap > 0, Err::InvalidParams, "interior cap must be positive");

  std::vector<Vec3i> interior = domain.interior_points();
  sys.points.reserve(interior.size());
  for (const auto& p : interior) {
    if (!zeros.contains(p)) sys.points.push_back(p);
  }
  require(!sys.points.empty(), Err::EmptyDomain, "no free interior points");
  require(sys.points.size() <= cap, Err::DomainTooLarge,
          "interior size " + std::to_string(sys.points.size()) +
              " exceeds cap " + std::to_string(cap));

  for (std::size_t i = 0; i < sys.points.size(); ++i) {
    sys.index.insert_or_assign(pack_point(sys.points[i]), i);
  }

  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(sys.points.size() * 7);
  for (std::size_t i = 0; i < sys.points.size(); ++i) {
    trip.emplace_back(int(i), int(i), 6.0);
    for (const auto& s : kSteps) {
      if (const auto* j = sys.index.find(pack_point(sys.points[i] + s))) {
        trip.emplace_back(int(i), int(*j), -1.0);
      }
    }
  }
  sys.lap.resize(int(sys.points.size()), int(sys.points.size()));
  sys.lap.setFromTriplets(trip.begin(), trip.end());
  return sys;
}

using Factor = Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>>;

void factorize(Factor& f, const Eigen::SparseMatrix<double>& lap) {
  f.compute(lap);
  require(f.info() == Eigen::Success, Err::SingularSystem,
          "Laplacian factorization failed");
}

}  // namespace

double HarmonicField::at(Vec3i p) const {
  if (zeros_.contains(p)) return 0.0;
  if (!domain_.contains(p)) return 1.0;
  const auto* i = index_.find(pack_point(p));
  require(i != nullptr, Err::NotInDomain,
          "query point not in the solved system");
  return values_[*i];
}

HarmonicField solve_dirichlet(const Domain& domain, const PointSet& zeros,
                              std::size_t interior_cap) {
  InteriorSystem sys = build_system(domain, zeros, interior_cap);

  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(long(sys.points.size()));
  for (std::size_t i = 0; i < sys.points.size(); ++i) {
    for (const auto& s : kSteps) {
      Vec3i q = sys.points[i] + s;
      if (!domain.contains(q)) rhs[long(i)] += 1.0;  // wired boundary, f = 1
    }
  }

  Factor f;
  factorize(f, sys.lap);
  Eigen::VectorXd sol = f.solve(rhs);
  require(f.info() == Eigen::Success, Err::SingularSystem,
          "Dirichlet solve failed");

  HarmonicField out;
  out.domain_ = domain;
  out.zeros_ = zeros;
  out.index_ = std::move(sys.index);
  out.points_ = std::move(sys.points);
  out.values_.assign(sol.data(), sol.data() + sol.size());
  return out;
}

double GreenTable::at(Vec3i x, Vec3i y) const {
  const auto* i = index_.find(pack_point(x));
  const auto* j = index_.find(pack_point(y));
  require(i != nullptr && j != nullptr, Err::NotInDomain,
          "Green table query outside the domain interior");
  return values_[*i * points_.size() + *j];
}

GreenTable green_table(const Domain& domain, std::size_t interior_cap) {
  InteriorSystem sys = build_system(domain, PointSet(), interior_cap);
  long n = long(sys.points.size());

  Factor f;
  factorize(f, sys.lap);
  // (I - P) G = I, with P the killed step matrix, so G = 6 (6I - A)^{-1}
  Eigen::MatrixXd rhs = 6.0 * Eigen::MatrixXd::Identity(n, n);
  Eigen::MatrixXd sol = f.solve(rhs);
  require(f.info() == Eigen::Success, Err::SingularSystem,
          "Green table solve failed");

  GreenTable out;
  out.index_ = std::move(sys.index);
  out.points_ = std::move(sys.points);
  out.values_.assign(sol.data(), sol.data() + n * n);
  // Eigen stores column-major; the table is symmetric so layout is moot,
  // but keep the row-major contract exact anyway
  for (long i = 0; i < n; ++i) {
    for (long j = 0; j < i; ++j) {
      std::swap(out.values_[std::size_t(i) * n + j],
                out.values_[std::size_t(j) * n + i]);
    }
  }
  return out;
}

double GreenColumn::at(Vec3i x) const {
  const auto* i = index_.find(pack_point(x));
  require(i != nullptr, Err::NotInDomain,
          "Green column query outside the domain interior");
  return values_[*i];
}

GreenColumn green_column_direct(const Domain& domain, Vec3i source,
                                std::size_t interior_cap) {
  InteriorSystem sys = build_system(domain, PointSet(), interior_cap);
  const auto* src = sys.index.find(pack_point(source));
  require(src != nullptr, Err::NotInDomain, "source outside the domain");

  Factor f;
  factorize(f, sys.lap);
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(long(sys.points.size()));
  rhs[long(*src)] = 6.0;
  Eigen::VectorXd sol = f.solve(rhs);
  require(f.info() == Eigen::Success, Err::SingularSystem,
          "Green column solve failed");

  GreenColumn out;
  out.source_ = source;
  out.index_ = std::move(sys.index);
  out.values_.assign(sol.data(), sol.data() + sol.size());
  return out;
}

GreenColumn green_column_iterative(const Domain& domain, Vec3i source,
                                   double tol) {
  require(domain.kind() == Domain::Kind::Ball, Err::InvalidParams,
          "iterative Green column is defined for ball domains");
  require(domain.contains(source), Err::NotInDomain,
          "source outside the domain");
  if (tol < 1e-12) tol = 1e-12;

  // flat bounding-box grid around the ball center
  Vec3i c = domain.center();
  std::int64_t b = 0;
  while (domain.contains(c + Vec3i{b + 1, 0, 0})) ++b;
  require(b <= 192, Err::DomainTooLarge,
          "iterative Green column capped at ball bound 192");
  // one-cell margin: every neighbor of an inside cell lands on the grid,
  // and margin cells stay marked outside
  std::int64_t m = b + 1;
  std::int64_t w = 2 * m + 1;
  std::size_t total = std::size_t(w) * w * w;

  auto flat = [&](Vec3i p) {
    Vec3i r = p - c;
    return std::size_t(r.x + m) +
           std::size_t(w) * (std::size_t(r.y + m) +
                             std::size_t(w) * std::size_t(r.z + m));
  };

  std::vector<char> inside(total, 0);
  for (std::int64_t x = -b; x <= b; ++x) {
    for (std::int64_t y = -b; y <= b; ++y) {
      for (std::int64_t z = -b; z <= b; ++z) {
        Vec3i p = c + Vec3i{x, y, z};
        if (domain.contains(p)) inside[flat(p)] = 1;
      }
    }
  }

  std::vector<double> rhs(total, 0.0), sol(total, 0.0), r(total, 0.0),
      p(total, 0.0), ap(total, 0.0);
  rhs[flat(source)] = 6.0;

  const std::int64_t sx = 1, sy = w, sz = w * w;
  auto apply = [&](const std::vector<double>& v, std::vector<double>& out) {
    for (std::size_t i = 0; i < total; ++i) {
      if (!inside[i]) {
        out[i] = 0.0;
        continue;
      }
      double acc = 6.0 * v[i];
      // neighbors outside the ball carry value 0 (killed)
      if (inside[i - sx]) acc -= v[i - sx];
      if (inside[i + sx]) acc -= v[i + sx];
      if (inside[i - sy]) acc -= v[i - sy];
      if (inside[i + sy]) acc -= v[i + sy];
      if (inside[i - sz]) acc -= v[i - sz];
      if (inside[i + sz]) acc -= v[i + sz];
      out[i] = acc;
    }
  };

  auto dot = [&](const std::vector<double>& a, const std::vector<double>& bb) {
    double acc = 0.0;
    for (std::size_t i = 0; i < total; ++i) acc += a[i] * bb[i];
    return acc;
  };

  r = rhs;
  p = rhs;
  double rr = dot(r, r);
  double bnorm = std::sqrt(rr);
  std::size_t max_iter = 200 + 40 * std::size_t(w);
  for (std::size_t it = 0; it < max_iter && std::sqrt(rr) > tol * bnorm;
       ++it) {
    apply(p, ap);
    double alpha = rr / dot(p, ap);
    for (std::size_t i = 0; i < total; ++i) {
      sol[i] += alpha * p[i];
      r[i] -= alpha * ap[i];
    }
    double rr_new = dot(r, r);
    double beta = rr_new / rr;
    rr = rr_new;
    for (std::size_t i = 0; i < total; ++i) p[i] = r[i] + beta * p[i];
  }
  require(std::sqrt(rr) <= tol * bnorm, Err::SingularSystem,
          "conjugate gradient failed to converge");

  GreenColumn out;
  out.source_ = source;
  std::vector<Vec3i> pts = domain.interior_points();
  out.values_.reserve(pts.size());
  for (std::size_t i = 0; i < pts.size(); ++i) {
    out.index_.insert_or_assign(pack_point(pts[i]), i);
    out.values_.push_back(sol[flat(pts[i])]);
  }
  return out;
}

namespace {
// interior cells of a grid-bounded ball beyond which direct factorization
// is not attempted
constexpr std::size_t kRatioDirectCap = kDefaultInteriorCap;
}  // namespace

GreenRatioResult green_ratio_check(std::int64_t n_radius, Vec3i x, Vec3i xp,
                                   Vec3i y, Vec3i yp, double eps1,
                                   double eps2) {
  require(n_radius > 0 && eps1 > 0 && eps2 > 0, Err::InvalidParams,
          "radius and epsilons must be positive");
  Domain ball = Domain::ball({0, 0, 0}, double(n_radius));
  double n = double(n_radius);
  auto len = [](Vec3i v) { return std::sqrt(double(norm2(v))); };

  auto dist_to_boundary = [&](Vec3i v) { return n - len(v); };
  if (dist_to_boundary(x) < eps2 * n || dist_to_boundary(y) < eps2 * n) {
    raise(Err::PreconditionViolated,
          "(i): x or y closer than eps2*n to the boundary");
  }
  double dxy = len(x - y);
  if (dxy < eps2 * n) {
    raise(Err::PreconditionViolated, "(ii): |x-y| below eps2*n");
  }
  if (dxy > 10.0 * std::min(dist_to_boundary(x), dist_to_boundary(y))) {
    raise(Err::PreconditionViolated,
          "(ii): |x-y| above 10*min boundary distance");
  }
  if (len(x - xp) > eps1 * n || len(y - yp) > eps1 * n) {
    raise(Err::PreconditionViolated, "(iii): perturbation exceeds eps1*n");
  }

  // column per source; direct when the ball is small enough to factor
  double vol_guess = 4.19 * n * n * n;
  GreenColumn gy = vol_guess <= double(kRatioDirectCap)
                       ? green_column_direct(ball, y)
                       : green_column_iterative(ball, y);
  GreenColumn gyp = vol_guess <= double(kRatioDirectCap)
                        ? green_column_direct(ball, yp)
                        : green_column_iterative(ball, yp);

  GreenRatioResult res;
  res.g_xy = gy.at(x);
  res.g_xpyp = gyp.at(xp);
  require(res.g_xpyp != 0.0, Err::SingularSystem, "zero reference Green value");
  res.deviation = std::abs(res.g_xy / res.g_xpyp - 1.0);
  return res;
}

double ExitTimeField::at(Vec3i p) const {
  const auto* i = index_.find(pack_point(p));
  return i ? values_[*i] : 0.0;
}

ExitTimeField mean_exit_time(const Domain& domain, std::size_t interior_cap) {
  InteriorSystem sys = build_system(domain, PointSet(), interior_cap);
  Factor f;
  factorize(f, sys.lap);
  Eigen::VectorXd rhs =
      Eigen::VectorXd::Constant(long(sys.points.size()), 6.0);
  Eigen::VectorXd sol = f.solve(rhs);
  require(f.info() == Eigen::Success, Err::SingularSystem,
          "exit time solve failed");

  ExitTimeField out;
  out.index_ = std::move(sys.index);
  out.values_.assign(sol.data(), sol.data() + sol.size());
  return out;
}

std::vector<std::pair<Vec3i, double>> laplacian_step(
    const Domain& domain, const SimplePath& lambda, std::size_t interior_cap) {
  require(!lambda.pts.empty(), Err::EmptyPath, "step from empty path");
  Vec3i tip = lambda.pts.back();
  require(domain.contains(tip), Err::PreconditionViolated,
          "path tip already absorbed at the boundary");

  PointSet zeros(lambda.pts.size() * 2);
  for (const auto& p : lambda.pts) zeros.insert(p);

  // the path may cover the whole interior; the step law is then carried by
  // the wired boundary alone and no solve is needed
  bool any_free = false;
  for (const auto& p : domain.interior_points()) {
    if (!zeros.contains(p)) {
      any_free = true;
      break;
    }
  }
  std::optional<HarmonicField> f;
  if (any_free) f = solve_dirichlet(domain, zeros, interior_cap);

  std::vector<std::pair<Vec3i, double>> weights;
  double total = 0.0;
  for (const auto& s : kSteps) {
    Vec3i q = tip + s;
    if (zeros.contains(q)) continue;
    double w = domain.contains(q) ? f->at(q) : 1.0;
    if (w > 0.0) {
      weights.emplace_back(q, w);
      total += w;
    }
  }
  require(!weights.empty() && total > 0.0, Err::DeadEnd,
          "no neighbor carries positive harmonic weight");
  for (auto& [q, w] : weights) w /= total;
  return weights;
}

double PrefixLaw::total() const {
  double acc = 0.0;
  for (const auto& [k, v] : prob) acc += v;
  return acc;
}

double PrefixLaw::tv_distance(const PrefixLaw& other) const {
  double acc = 0.0;
  auto it = prob.begin();
  auto jt = other.prob.begin();
  while (it != prob.end() || jt != other.prob.end()) {
    if (jt == other.prob.end() || (it != prob.end() && it->first < jt->first)) {
      acc += std::abs(it->second);
      ++it;
    } else if (it == prob.end() || jt->first < it->first) {
      acc += std::abs(jt->second);
      ++jt;
    } else {
      acc += std::abs(it->second - jt->second);
      ++it;
      ++jt;
    }
  }
  return acc / 2.0;
}

PrefixLaw PrefixLaw::conditioned_on(
    const std::vector<std::uint64_t>& prefix) const {
  PrefixLaw out;
  out.horizon = horizon;
  double mass = 0.0;
  for (const auto& [key, p] : prob) {
    if (key.size() < prefix.size()) continue;
    if (!std::equal(prefix.begin(), prefix.end(), key.begin())) continue;
    out.prob[key] = p;
    mass += p;
  }
  require(mass > 0.0, Err::PreconditionViolated,
          "conditioning prefix has zero mass");
  for (auto& [key, p] : out.prob) p /= mass;
  return out;
}

namespace {

void enumerate_law(const Domain& domain, SimplePath& lambda, double mass,
                   int steps_left, std::size_t cap, PrefixLaw& law) {
  std::vector<std::uint64_t> key;
  key.reserve(lambda.pts.size());
  if (steps_left == 0 || !domain.contains(lambda.pts.back())) {
    for (const auto& p : lambda.pts) key.push_back(pack_point(p));
    law.prob[key] += mass;
    return;
  }
  auto step = laplacian_step(domain, lambda, cap);
  for (const auto& [q, w] : step) {
    lambda.pts.push_back(q);
    enumerate_law(domain, lambda, mass * w, steps_left - 1, cap, law);
    lambda.pts.pop_back();
  }
}

}  // namespace

PrefixLaw exact_lerw_law_seeded(const Domain& domain, const SimplePath& seed,
                                int horizon, std::size_t interior_cap) {
  require(horizon >= 0, Err::InvalidParams, "negative horizon");
  seed.validate();
  PrefixLaw law;
  law.horizon = horizon;
  SimplePath lambda = seed;
  enumerate_law(domain, lambda, 1.0, horizon, interior_cap, law);
  return law;
}

PrefixLaw exact_lerw_law(const Domain& domain, Vec3i start, int horizon,
                         std::size_t interior_cap) {
  require(domain.contains(start), Err::NotInDomain,
          "law start outside the domain");
  SimplePath seed;
  seed.mesh = 0;
  seed.pts.push_back(start);
  return exact_lerw_law_seeded(domain, seed, horizon, interior_cap);
}

PrefixLaw mc_lerw_prefix_law(const Domain& domain, Vec3i start, int horizon,
                             std::uint64_t trials, std::uint64_t master_seed) {
  require(trials > 0, Err::InvalidParams, "no trials");
  PrefixLaw law;
  law.horizon = horizon;
  double w = 1.0 / double(trials);
  std::vector<std::uint64_t> key;
  for (std::uint64_t t = 0; t < trials; ++t) {
    RngStream rng(master_seed, t);
    SimplePath gamma = sample_lerw_to_exit(start, domain, rng);
    std::size_t keep =
        std::min(gamma.pts.size(), std::size_t(horizon) + 1);
    key.clear();
    for (std::size_t i = 0; i < keep; ++i) key.push_back(pack_point(gamma.pts[i]));
    law.prob[key] += w;
  }
  return law;
}

}  // namespace lerw
