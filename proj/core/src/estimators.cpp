#include "lerw/estimators.hpp"

#include <atomic>
#include <cmath>
#include <mutex>
#include <thread>

namespace lerw {

namespace {

constexpr double kLn2 = 0.6931471805599453;
constexpr double kBetaLo = 1.0;
constexpr double kBetaHi = 5.0 / 3.0;

void require_increasing_levels(const std::vector<int>& levels, int max_level) {
  require(levels.size() >= 3, Err::InsufficientLevels,
          "need at least 3 levels for a scaling fit");
  for (std::size_t i = 0; i < levels.size(); ++i) {
    require(levels[i] >= 1 && levels[i] <= max_level, Err::InvalidParams,
            "level out of the supported range");
    if (i) {
      require(levels[i] > levels[i - 1], Err::InvalidParams,
              "levels must be strictly increasing");
    }
  }
}

void fill_fit(BetaFit& out, const std::vector<int>& levels, double shift) {
  for (std::size_t i = 0; i < levels.size(); ++i) {
    const LevelEstimate& le = out.levels[i];
    out.fit.xs.push_back(double(levels[i]));
    out.fit.ys.push_back(std::log2(le.value));
    out.fit.y_errs.push_back(le.value > 0 && le.std_error > 0
                                 ? le.std_error / (le.value * kLn2)
                                 : 0.0);
  }
  OlsFit f = ols_fit(out.fit.xs, out.fit.ys);
  out.fit.slope = f.slope;
  out.fit.intercept = f.intercept;
  out.fit.slope_stderr = f.slope_stderr;
  out.fit.residuals = f.residuals;
  out.beta = shift + f.slope;
  out.beta_stderr = f.slope_stderr;
  out.in_paper_range = out.beta > kBetaLo && out.beta <= kBetaHi;
}

}  // namespace

void run_trials(std::uint64_t trials, int workers, std::uint64_t master_seed,
                const std::function<void(std::uint64_t, RngStream&)>& body) {
  require(workers >= 1, Err::InvalidParams, "worker count must be >= 1");
  if (trials == 0) return;
  if (workers == 1) {
    for (std::uint64_t t = 0; t < trials; ++t) {
      RngStream rng(master_seed, t);
      body(t, rng);
    }
    return;
  }
  std::atomic<std::uint64_t> next{0};
  std::mutex err_mu;
  std::exception_ptr first_err;
  auto work = [&] {
    for (;;) {
      std::uint64_t t = next.fetch_add(1, std::memory_order_relaxed);
      if (t >= trials) return;
      try {
        RngStream rng(master_seed, t);
        body(t, rng);
      } catch (...) {
        std::lock_guard<std::mutex> lock(err_mu);
        if (!first_err) first_err = std::current_exception();
        return;
      }
    }
  };
  std::size_t n = std::min<std::uint64_t>(std::uint64_t(workers), trials);
  std::vector<std::thread> pool;
  pool.reserve(n);
  for (std::size_t i = 0; i < n; ++i) pool.emplace_back(work);
  for (auto& th : pool) th.join();
  if (first_err) std::rethrow_exception(first_err);
}

BetaFit beta_from_length(const std::vector<int>& levels,
                         std::uint64_t trials_per_level,
                         std::uint64_t master_seed, int workers,
                         std::optional<double> synthetic_exponent) {
  require_increasing_levels(levels, 19);
  require(trials_per_level >= 1, Err::InvalidParams, "trials must be >= 1");
  const std::size_t L = levels.size();
  std::vector<std::vector<double>> lens(
      L, std::vector<double>(trials_per_level, 0.0));

  if (synthetic_exponent) {
    for (std::size_t i = 0; i < L; ++i) {
      double v = std::round(std::exp2(*synthetic_exponent * levels[i]));
      std::fill(lens[i].begin(), lens[i].end(), v);
    }
  } else {
    std::vector<std::int64_t> thr(L);
    for (std::size_t i = 0; i < L; ++i) {
      thr[i] = strict_sq_threshold(std::ldexp(1.0, levels[i]));
    }
    run_trials(trials_per_level, workers, master_seed,
               [&](std::uint64_t t, RngStream& rng) {
                 // one walk to the largest radius; each level reads the
                 // erased length at its own first exit
                 StreamingLoopEraser er(levels.back());
                 Vec3i cur{0, 0, 0};
                 er.push(cur);
                 std::size_t li = 0;
                 while (li < L) {
                   cur = cur + kSteps[rng.step_direction()];
                   er.push(cur);
                   std::int64_t d2 = norm2(cur);
                   while (li < L && d2 > thr[li]) {
                     lens[li][t] = double(er.size() - 1);
                     ++li;
                   }
                 }
               });
  }

  BetaFit out;
  for (std::size_t i = 0; i < L; ++i) {
    LevelEstimate le;
    le.x = double(levels[i]);
    le.value = mean(lens[i]);
    le.std_error = stderr_of_mean(lens[i]);
    le.trials = trials_per_level;
    out.levels.push_back(le);
  }
  fill_fit(out, levels, 0.0);
  return out;
}

BetaFit beta_from_escape(const std::vector<int>& radius_exponents,
                         std::uint64_t trials_per_level,
                         std::uint64_t master_seed, int workers,
                         std::optional<double> synthetic_exponent) {
  require_increasing_levels(radius_exponents, 19);
  require(trials_per_level >= 1, Err::InvalidParams, "trials must be >= 1");
  const std::size_t L = radius_exponents.size();

  BetaFit out;
  if (synthetic_exponent) {
    for (std::size_t i = 0; i < L; ++i) {
      LevelEstimate le;
      le.x = double(radius_exponents[i]);
      le.value = std::exp2(*synthetic_exponent * radius_exponents[i]);
      le.trials = trials_per_level;
      out.levels.push_back(le);
    }
  } else {
    std::vector<std::vector<std::uint8_t>> esc(
        L, std::vector<std::uint8_t>(trials_per_level, 0));
    run_trials(L * trials_per_level, workers, master_seed,
               [&](std::uint64_t u, RngStream& rng) {
                 std::size_t i = std::size_t(u / trials_per_level);
                 std::size_t t = std::size_t(u % trials_per_level);
                 std::int64_t radius = std::int64_t(1) << radius_exponents[i];
                 esc[i][t] = escape_event_sample(0, radius, rng) ? 1 : 0;
               });
    for (std::size_t i = 0; i < L; ++i) {
      std::uint64_t hits = 0;
      for (auto e : esc[i]) hits += e;
      double p = double(hits) / double(trials_per_level);
      require(p > 0.0, Err::InvalidParams,
              "no escapes observed at a radius; increase trials");
      LevelEstimate le;
      le.x = double(radius_exponents[i]);
      le.value = p;
      le.std_error = std::sqrt(p * (1.0 - p) / double(trials_per_level));
      le.trials = trials_per_level;
      out.levels.push_back(le);
    }
  }
  fill_fit(out, radius_exponents, 2.0);
  return out;
}

TailProfile tail_profile(int mesh, std::uint64_t trials,
                         const std::vector<double>& b_grid,
                         std::uint64_t master_seed, int workers) {
  require(mesh >= 1 && mesh <= 19, Err::InvalidParams,
          "mesh out of the supported range");
  require(trials >= 100, Err::InvalidParams, "tail profile needs >= 100 trials");
  require(!b_grid.empty(), Err::InvalidParams, "empty b grid");
  for (double b : b_grid) {
    require(b >= 1.0, Err::InvalidParams, "each b must be >= 1");
  }

  std::vector<double> lens(trials, 0.0);
  Domain ball = Domain::ball({0, 0, 0}, std::ldexp(1.0, mesh));
  run_trials(trials, workers, master_seed,
             [&](std::uint64_t t, RngStream& rng) {
               SimplePath g = sample_lerw_to_exit({0, 0, 0}, ball, rng, mesh);
               lens[t] = double(g.length());
             });

  TailProfile out;
  out.trials = trials;
  out.mean_length = mean(lens);
  for (double b : b_grid) {
    TailPoint pt;
    pt.b = b;
    double lo = out.mean_length / b, hi = out.mean_length * b;
    for (double v : lens) {
      if (v < lo || v > hi) ++pt.outside;
    }
    pt.exceedance = double(pt.outside) / double(trials);
    pt.ci = wilson_interval(pt.outside, trials);
    out.points.push_back(pt);
  }
  return out;
}

L2Trend l2_trend(const std::vector<int>& mesh_levels,
                 const std::vector<int>& k_values, std::uint64_t trials,
                 std::uint64_t master_seed, int workers, int enlargement) {
  require(!mesh_levels.empty() && !k_values.empty(), Err::InvalidParams,
          "need at least one mesh level and one k");
  require(trials >= 2, Err::InvalidParams,
          "need >= 2 trials for a discrepancy ratio");
  const std::size_t NL = mesh_levels.size(), NK = k_values.size();

  // partitions up front; parameter problems surface before any sampling
  std::vector<std::vector<BoxPartition>> parts(NL);
  for (std::size_t ni = 0; ni < NL; ++ni) {
    int n = mesh_levels[ni];
    require(n >= 1 && n <= 19, Err::InvalidParams, "mesh out of range");
    for (std::size_t ki = 0; ki < NK; ++ki) {
      int q = default_fine_exponent(k_values[ki], n);
      parts[ni].push_back(make_box_partition(n, k_values[ki], q, 0.5, 0, 0));
    }
  }

  std::vector<std::vector<std::vector<std::pair<double, double>>>> xy(
      NL, std::vector<std::vector<std::pair<double, double>>>(
              NK, std::vector<std::pair<double, double>>(trials)));
  std::vector<std::vector<std::vector<ReferenceBoxStat>>> refs(
      NL, std::vector<std::vector<ReferenceBoxStat>>(
              NK, std::vector<ReferenceBoxStat>(trials)));

  run_trials(
      NL * trials, workers, master_seed,
      [&](std::uint64_t u, RngStream& rng) {
        std::size_t ni = std::size_t(u / trials);
        std::size_t t = std::size_t(u % trials);
        int n = mesh_levels[ni];
        Domain ball = Domain::ball({0, 0, 0}, std::ldexp(1.0, n));
        SimplePath g = sample_lerw_to_exit({0, 0, 0}, ball, rng, n);
        for (std::size_t ki = 0; ki < NK; ++ki) {
          BoxStats bs = box_stats(g, parts[ni][ki], enlargement);
          xy[ni][ki][t] = {double(bs.points_in_box), double(bs.boxes_hit)};
          refs[ni][ki][t] = reference_box_stat(g, parts[ni][ki], enlargement);
        }
      });

  L2Trend out;
  for (std::size_t ni = 0; ni < NL; ++ni) {
    for (std::size_t ki = 0; ki < NK; ++ki) {
      Alpha0Estimate a = alpha0_estimate(refs[ni][ki]);
      L2Cell cell;
      cell.mesh = mesh_levels[ni];
      cell.k = k_values[ki];
      cell.q = parts[ni][ki].q;
      cell.alpha0 = a.alpha0;
      cell.alpha0_std_error = a.std_error;
      cell.conditioned = a.conditioned;
      cell.trials = trials;
      cell.ratio = l2_discrepancy(xy[ni][ki], a.alpha0);
      out.cells.push_back(cell);
    }
  }
  auto cell_at = [&](std::size_t ni, std::size_t ki) -> const L2Cell& {
    return out.cells[ni * NK + ki];
  };
  out.decreasing_in_k = NK >= 2;
  for (std::size_t ni = 0; ni < NL && out.decreasing_in_k; ++ni) {
    for (std::size_t ki = 1; ki < NK; ++ki) {
      if (!(cell_at(ni, ki).ratio < cell_at(ni, ki - 1).ratio)) {
        out.decreasing_in_k = false;
        break;
      }
    }
  }
  out.decreasing_in_mesh = NL >= 2;
  for (std::size_t ki = 0; ki < NK && out.decreasing_in_mesh; ++ki) {
    for (std::size_t ni = 1; ni < NL; ++ni) {
      if (!(cell_at(ni, ki).ratio < cell_at(ni - 1, ki).ratio)) {
        out.decreasing_in_mesh = false;
        break;
      }
    }
  }
  return out;
}

GreenConstantResult green_axis_fit(const std::vector<double>& radii,
                                   const std::vector<double>& g_values) {
  require(radii.size() == g_values.size(), Err::InvalidParams,
          "radii/values size mismatch");
  require(radii.size() >= 3, Err::InsufficientLevels,
          "need at least 3 radii for the fit");
  std::vector<double> xs, ys;
  for (std::size_t i = 0; i < radii.size(); ++i) {
    require(radii[i] > 0, Err::InvalidParams, "radii must be positive");
    xs.push_back(1.0 / radii[i]);
    ys.push_back(g_values[i] * radii[i]);
  }
  OlsFit f = ols_fit(xs, ys);
  GreenConstantResult res;
  res.record.value = f.intercept;
  res.record.std_error = f.intercept_stderr;
  res.record.trials = radii.size();
  res.slope = f.slope;
  res.radii = radii;
  res.g_values = g_values;
  for (double r : f.residuals) {
    res.max_abs_residual = std::max(res.max_abs_residual, std::abs(r));
  }
  return res;
}

GreenConstantResult green_constant_fit(const std::vector<std::int64_t>& radii,
                                       int outer_factor) {
  require(!radii.empty(), Err::InvalidParams, "no radii");
  require(outer_factor >= 2, Err::InvalidParams, "outer factor must be >= 2");
  std::vector<std::int64_t> rs = radii;
  std::sort(rs.begin(), rs.end());
  rs.erase(std::unique(rs.begin(), rs.end()), rs.end());
  for (auto r : rs) {
    require(r >= 8, Err::InvalidParams, "radii must be >= 8 lattice units");
  }
  std::int64_t outer = outer_factor * rs.back();
  Domain ball = Domain::ball({0, 0, 0}, double(outer));
  GreenColumn col = green_column_iterative(ball, {0, 0, 0});
  std::vector<double> xs, gs;
  for (auto r : rs) {
    xs.push_back(double(r));
    gs.push_back(col.at({r, 0, 0}));
  }
  GreenConstantResult res = green_axis_fit(xs, gs);
  res.record.meta["outer_radius"] = std::to_string(outer);
  return res;
}

EstimateRecord green_mc_estimate(std::int64_t ball_radius, Vec3i start,
                                 Vec3i target, std::uint64_t walks,
                                 std::uint64_t master_seed, int workers) {
  require(ball_radius >= 1, Err::InvalidParams, "ball radius must be >= 1");
  require(walks >= 1, Err::InvalidParams, "need at least one walk");
  Domain ball = Domain::ball({0, 0, 0}, double(ball_radius));
  require(ball.contains(start), Err::NotInDomain, "start outside the ball");
  require(ball.contains(target), Err::NotInDomain, "target outside the ball");

  std::vector<double> visits(walks, 0.0);
  run_trials(walks, workers, master_seed,
             [&](std::uint64_t t, RngStream& rng) {
               Vec3i cur = start;
               std::uint64_t v = cur == target ? 1 : 0;
               for (;;) {
                 cur = cur + kSteps[rng.step_direction()];
                 if (!ball.contains(cur)) break;
                 if (cur == target) ++v;
               }
               visits[t] = double(v);
             });
  EstimateRecord rec;
  rec.value = mean(visits);
  rec.std_error = stderr_of_mean(visits);
  rec.trials = walks;
  rec.meta["ball_radius"] = std::to_string(ball_radius);
  return rec;
}

ParamCurve ilerw_truncated_sample(double r, int mesh, double beta,
                                  RngStream& rng, int m) {
  require(r >= 1.0, Err::BadRadii, "box half-side r must be >= 1");
  require(m >= 2, Err::BadRadii, "truncation multiple m must be >= 2");
  require(mesh >= 1, Err::InvalidParams, "mesh must be >= 1");
  double radius_lat = double(m) * r * std::ldexp(1.0, mesh);
  require(radius_lat <= double(kCoordMax - 2), Err::InvalidParams,
          "sampling ball exceeds the packed coordinate range");
  Domain ball = Domain::scaled_ball(0, 0, 0, double(m) * r, mesh);
  SimplePath gamma = sample_lerw_to_exit({0, 0, 0}, ball, rng, mesh);
  ParamCurve c = rescale_to_curve(gamma, beta);
  return truncate_at_box_exit(c, r);
}

int exit_face(const ParamCurve& curve, double r) {
  require(curve.breakpoint_count() >= 1, Err::EmptyPath, "empty curve");
  Vec3d e = curve.points().back();
  const double c[3] = {e.x, e.y, e.z};
  for (int axis = 0; axis < 3; ++axis) {
    if (c[axis] == r) return 2 * axis;
    if (c[axis] == -r) return 2 * axis + 1;
  }
  raise(Err::InvalidParams, "curve endpoint is not on the box boundary");
}

double binned_tv(const std::vector<CurveSummary>& a,
                 const std::vector<CurveSummary>& b, int bins_per_axis) {
  require(bins_per_axis >= 1, Err::InvalidParams, "bins must be >= 1");
  require(!a.empty() && !b.empty(), Err::EmptySet, "empty summary sample");
  double lo0 = a[0].endpoint_norm, hi0 = lo0;
  double lo1 = a[0].duration, hi1 = lo1;
  auto widen = [&](const CurveSummary& s) {
    lo0 = std::min(lo0, s.endpoint_norm);
    hi0 = std::max(hi0, s.endpoint_norm);
    lo1 = std::min(lo1, s.duration);
    hi1 = std::max(hi1, s.duration);
  };
  for (const auto& s : a) widen(s);
  for (const auto& s : b) widen(s);
  int B = bins_per_axis;
  auto bin = [B](double v, double lo, double hi) {
    if (hi <= lo) return 0;
    int i = int((v - lo) / (hi - lo) * B);
    return std::min(std::max(i, 0), B - 1);
  };
  std::vector<double> pa(std::size_t(B) * B, 0.0), pb(std::size_t(B) * B, 0.0);
  for (const auto& s : a) {
    pa[std::size_t(bin(s.endpoint_norm, lo0, hi0)) * B +
       bin(s.duration, lo1, hi1)] += 1.0 / double(a.size());
  }
  for (const auto& s : b) {
    pb[std::size_t(bin(s.endpoint_norm, lo0, hi0)) * B +
       bin(s.duration, lo1, hi1)] += 1.0 / double(b.size());
  }
  double tv = 0;
  for (std::size_t i = 0; i < pa.size(); ++i) tv += std::abs(pa[i] - pb[i]);
  return 0.5 * tv;
}

std::vector<IncrementPoint> increment_exceedance(
    int mesh, double r, const std::vector<double>& deltas, double threshold,
    std::uint64_t trials, double beta, std::uint64_t master_seed, int workers,
    int m) {
  require(r > 0.0, Err::BadRadii, "r must be positive");
  require(!deltas.empty(), Err::BadDelta, "empty delta grid");
  double dmax = 0;
  for (double d : deltas) {
    require(d > 0.0, Err::BadDelta, "each delta must be positive");
    dmax = std::max(dmax, d);
  }
  require(threshold > 0.0, Err::InvalidParams, "threshold must be positive");
  require(trials >= 1, Err::InvalidParams, "trials must be >= 1");
  require(m >= 2, Err::BadRadii, "truncation multiple m must be >= 2");
  // the sampled curve must reach past the largest truncation box
  require(double(m) * r / std::sqrt(3.0) > r + dmax, Err::BadRadii,
          "sampling ball too small for the largest delta");
  double radius_lat = double(m) * r * std::ldexp(1.0, mesh);
  require(radius_lat <= double(kCoordMax - 2), Err::InvalidParams,
          "sampling ball exceeds the packed coordinate range");

  std::vector<std::vector<std::uint8_t>> over(
      deltas.size(), std::vector<std::uint8_t>(trials, 0));
  Domain ball = Domain::scaled_ball(0, 0, 0, double(m) * r, mesh);
  run_trials(trials, workers, master_seed,
             [&](std::uint64_t t, RngStream& rng) {
               SimplePath g = sample_lerw_to_exit({0, 0, 0}, ball, rng, mesh);
               ParamCurve c = rescale_to_curve(g, beta);
               for (std::size_t di = 0; di < deltas.size(); ++di) {
                 double inc = exit_time_increment(c, r, deltas[di]);
                 over[di][t] = inc > threshold ? 1 : 0;
               }
             });

  std::vector<IncrementPoint> out;
  for (std::size_t di = 0; di < deltas.size(); ++di) {
    IncrementPoint pt;
    pt.delta = deltas[di];
    for (auto o : over[di]) pt.outside += o;
    pt.exceedance = double(pt.outside) / double(trials);
    pt.ci = wilson_interval(pt.outside, trials);
    out.push_back(pt);
  }
  return out;
}

}  // namespace lerw
