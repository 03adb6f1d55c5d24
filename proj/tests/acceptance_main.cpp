// Acceptance gate: every release-blocking check in one binary, one line per
// criterion with the measured values and the wall-clock budget. Exits with
// the number of failed criteria. Pass criterion numbers as arguments to run
// a subset, e.g. `lerw3d_acceptance 5 8`.

#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "lerw/curve.hpp"
#include "lerw/errors.hpp"
#include "lerw/estimators.hpp"
#include "lerw/experiment.hpp"
#include "lerw/geometry.hpp"
#include "lerw/harmonic.hpp"
#include "lerw/observables.hpp"
#include "lerw/path_ops.hpp"
#include "lerw/rng.hpp"
#include "lerw/stats.hpp"
#include "lerw/wilson.hpp"
#include "support/oracles.hpp"

namespace fs = std::filesystem;
using namespace lerw;

namespace {

std::string fmt(const char* f, ...) {
  char buf[512];
  va_list ap;
  va_start(ap, f);
  std::vsnprintf(buf, sizeof buf, f, ap);
  va_end(ap);
  return buf;
}

struct Outcome {
  bool ok = false;
  std::string detail;
};

// 1. Forward eraser vs the last-visit recursion, plus idempotence and
// endpoint preservation, on random free walks up to 10^4 steps.
Outcome c_loop_erasure() {
  const std::uint64_t paths = 10000;
  std::uint64_t bad = 0, total_steps = 0;
  for (std::uint64_t t = 0; t < paths; ++t) {
    RngStream rng(41001, t);
    std::uint64_t len = 1 + rng.uniform_below(10000);
    LatticePath w = testing::random_walk(rng, len);
    total_steps += len;
    SimplePath le = loop_erase(w);
    if (le.pts != testing::loop_erase_last_visit(w.pts)) ++bad;
    if (!(le.pts.front() == w.pts.front()) ||
        !(le.pts.back() == w.pts.back()))
      ++bad;
    if (loop_erase(le).pts != le.pts) ++bad;
  }
  return {bad == 0, fmt("%llu paths, %llu steps, %llu mismatches",
                        (unsigned long long)paths,
                        (unsigned long long)total_steps,
                        (unsigned long long)bad)};
}

// 2. Horizon-3 prefix law on the 5^3 wired box: exact linear algebra vs
// 10^6 Monte Carlo loop erasures.
Outcome c_prefix_law_mc() {
  Domain dom = Domain::box({2, 2, 2}, 2.0);
  PrefixLaw exact = exact_lerw_law(dom, {2, 2, 2}, 3);
  PrefixLaw mc = mc_lerw_prefix_law(dom, {2, 2, 2}, 3, 1000000, 42002);
  double tv = exact.tv_distance(mc);
  return {tv <= 0.01, fmt("tv=%.5f (<=0.01), %zu exact keys", tv,
                          exact.prob.size())};
}

// 3. Domain Markov property: the horizon-3 law conditioned on any realized
// 3-point prefix equals the seeded 1-step law, to linear-algebra precision.
Outcome c_domain_markov() {
  std::vector<Vec3i> sites;
  for (int x = 0; x < 4; ++x)
    for (int y = 0; y < 4; ++y)
      for (int z = 0; z < 4; ++z) sites.push_back({x, y, z});
  Domain dom = Domain::explicit_set(sites);
  PrefixLaw law = exact_lerw_law(dom, {1, 1, 1}, 3);

  std::set<std::vector<std::uint64_t>> prefixes;
  for (const auto& [key, p] : law.prob) {
    if (key.size() == 4 && p > 0.0)
      prefixes.insert({key[0], key[1], key[2]});
  }
  double max_tv = 0;
  for (const auto& pre : prefixes) {
    SimplePath seed;
    for (std::uint64_t k : pre) seed.pts.push_back(unpack_point(k));
    PrefixLaw cond = law.conditioned_on(pre);
    PrefixLaw one = exact_lerw_law_seeded(dom, seed, 1);
    max_tv = std::max(max_tv, cond.tv_distance(one));
  }
  return {max_tv <= 1e-9 && prefixes.size() >= 10,
          fmt("%zu prefixes, max tv=%.3g (<=1e-9)", prefixes.size(), max_tv)};
}

// 4. Wilson sampler uniformity against the matrix-tree count, and
// independence from the sweep ordering.
Outcome c_wilson_uniformity() {
  Domain dom = Domain::explicit_set({{0, 0, 0}, {1, 0, 0}});
  std::int64_t count = matrix_tree_count(dom);
  const std::uint64_t n = 100000;
  std::map<std::string, std::array<std::uint64_t, 2>> cnt;
  std::vector<Vec3i> reversed = {{1, 0, 0}, {0, 0, 0}};
  for (std::uint64_t u = 0; u < n; ++u) {
    RngStream ra(44004, u), rb(44005, u);
    cnt[wilson_sample(dom, ra).canonical_key()][0]++;
    cnt[wilson_sample(dom, rb, reversed).canonical_key()][1]++;
  }
  if (count <= 0 || cnt.size() > std::size_t(count))
    return {false, fmt("%zu distinct trees vs matrix-tree count %lld",
                       cnt.size(), (long long)count)};

  std::vector<std::uint64_t> a, b;
  for (const auto& [key, c] : cnt) {
    a.push_back(c[0]);
    b.push_back(c[1]);
  }
  a.resize(std::size_t(count), 0);  // trees the sampler never produced
  std::vector<double> probs(std::size_t(count), 1.0 / double(count));
  double p_gof = chi_square_gof_pvalue(a, probs);
  double p_hom = chi_square_homogeneity_pvalue(a, b);
  return {p_gof >= 0.001 && p_hom >= 0.001,
          fmt("%lld trees, gof p=%.4f, ordering p=%.4f (>=0.001)",
              (long long)count, p_gof, p_hom)};
}

// 5. Green's function on Ball(8): table vs Monte Carlo at the origin, plus
// symmetry and the resolvent identity over every pair.
Outcome c_green_function() {
  Domain dom = Domain::ball({0, 0, 0}, 8.0);
  GreenTable gt = green_table(dom);
  double exact = gt.at({0, 0, 0}, {0, 0, 0});
  EstimateRecord mc = green_mc_estimate(8, {0, 0, 0}, {0, 0, 0}, 1000000,
                                        45005, 1);
  double diff = std::abs(mc.value - exact);
  bool mc_ok = diff <= 3.0 * mc.std_error && diff <= 0.02 * exact;

  std::vector<Vec3i> pts = dom.interior_points();
  double sym = 0, res = 0;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    for (std::size_t j = i + 1; j < pts.size(); ++j) {
      sym = std::max(sym, std::abs(gt.at(pts[i], pts[j]) -
                                   gt.at(pts[j], pts[i])));
    }
  }
  for (const Vec3i& x : pts) {
    for (const Vec3i& y : pts) {
      double acc = (x == y) ? 1.0 : 0.0;
      for (const Vec3i& s : kSteps) {
        Vec3i z = x + s;
        if (dom.contains(z)) acc += gt.at(z, y) / 6.0;
      }
      res = std::max(res, std::abs(acc - gt.at(x, y)));
    }
  }
  bool lin_ok = sym <= 1e-9 && res <= 1e-9;
  return {mc_ok && lin_ok,
          fmt("G=%.6f mc=%.6f (3sig=%.2g, rel=%.3f%%), sym=%.2g res=%.2g",
              exact, mc.value, 3.0 * mc.std_error, 100.0 * diff / exact, sym,
              res)};
}

// 6. Growth exponent: length estimator in the admissible range with a tight
// slope error, escape estimator consistent with it.
Outcome c_growth_exponent() {
  BetaFit bl = beta_from_length({5, 6, 7, 8, 9}, 2000, 46006, 1);
  BetaFit be = beta_from_escape({4, 5, 6, 7}, 10000, 46007, 1);
  double gap = std::abs(be.beta - bl.beta);
  bool ok = bl.in_paper_range && bl.beta_stderr <= 0.03 && gap <= 0.1;
  return {ok, fmt("beta_len=%.4f+-%.4f (in range: %d), beta_esc=%.4f, "
                  "gap=%.4f (<=0.1)",
                  bl.beta, bl.beta_stderr, int(bl.in_paper_range), be.beta,
                  gap)};
}

// 7. Length concentration: exceedance of M_n/mean outside [1/b, b].
Outcome c_length_tails() {
  TailProfile tp = tail_profile(7, 10000, {1.5, 2, 3, 4}, 47007, 1);
  bool mono = true;
  for (std::size_t i = 1; i < tp.points.size(); ++i) {
    if (tp.points[i].exceedance > tp.points[i - 1].exceedance) mono = false;
  }
  double at4 = tp.points.back().exceedance;
  return {mono && at4 <= 0.05,
          fmt("exceedance(b=4)=%.4f (<=0.05), monotone=%d", at4, int(mono))};
}

// 8. Two-scale occupation approximation: the normalized L2 discrepancy
// drops from k=1 to k=2 at mesh 8 in at least 14 of 20 seeded replications.
Outcome c_l2_trend() {
  int decreasing = 0;
  for (std::uint64_t rep = 1; rep <= 20; ++rep) {
    if (l2_trend({8}, {1, 2}, 10000, rep, 1).decreasing_in_k) ++decreasing;
  }
  return {decreasing >= 14, fmt("%d/20 replications decreasing (>=14)",
                                decreasing)};
}

// 9. Quasi-loop prevalence decays along eps in {0.4, 0.2, 0.1} with the
// paper's (eps^3, sqrt(eps)) window.
Outcome c_quasi_loops() {
  const std::uint64_t trials = 1000;
  const std::vector<double> eps = {0.4, 0.2, 0.1};
  Domain dom = Domain::scaled_ball(0, 0, 0, 1.0, 7);
  std::vector<std::array<std::uint8_t, 3>> hit(trials);
  run_trials(trials, 1, 49009, [&](std::uint64_t t, RngStream& rng) {
    SimplePath g = sample_lerw_to_exit({0, 0, 0}, dom, rng, 7);
    for (std::size_t i = 0; i < eps.size(); ++i) {
      double e = eps[i];
      hit[t][i] =
          quasi_loops(g, std::pow(e, 3.0), std::sqrt(e)).empty() ? 0 : 1;
    }
  });
  double prev[3] = {0, 0, 0};
  for (std::size_t i = 0; i < eps.size(); ++i) {
    std::uint64_t c = 0;
    for (const auto& h : hit) c += h[i];
    prev[i] = double(c) / double(trials);
  }
  bool mono = prev[0] >= prev[1] && prev[1] >= prev[2];
  return {mono, fmt("prevalence %.3f / %.3f / %.3f (nonincreasing=%d)",
                    prev[0], prev[1], prev[2], int(mono))};
}

// 10. Metric axioms for rho, both chi variants, and Hausdorff on sampled
// curve triples: symmetry, triangle, identity.
Outcome c_metric_axioms() {
  const std::uint64_t trials = 1000;
  const int mesh = 4, K = 8;
  const double beta = 1.5, haus_tol = 1e-10;
  Domain dom = Domain::scaled_ball(0, 0, 0, 1.0, mesh);
  std::vector<std::array<double, 2>> slack(trials);  // exact, interpolated
  run_trials(trials, 1, 41010, [&](std::uint64_t t, RngStream& rng) {
    std::array<ParamCurve, 3> c;
    for (int j = 0; j < 3; ++j) {
      c[j] = rescale_to_curve(sample_lerw_to_exit({0, 0, 0}, dom, rng, mesh),
                              beta);
    }
    auto worst = [&](const auto& dist) {
      double ab = dist(c[0], c[1]), ba = dist(c[1], c[0]);
      double ac = dist(c[0], c[2]), ca = dist(c[2], c[0]);
      double bc = dist(c[1], c[2]), cb = dist(c[2], c[1]);
      double w = std::max({std::abs(ab - ba), std::abs(ac - ca),
                           std::abs(bc - cb)});
      w = std::max({w, ab - (ac + cb), ac - (ab + bc), bc - (ba + ac)});
      return std::max({w, dist(c[0], c[0]), dist(c[1], c[1]),
                       dist(c[2], c[2])});
    };
    double ex = worst([](const ParamCurve& a, const ParamCurve& b) {
      return rho_distance(a, b);
    });
    ex = std::max(ex, worst([&](const ParamCurve& a, const ParamCurve& b) {
           return chi_time_window(a, b, K).value;
         }));
    ex = std::max(ex, worst([&](const ParamCurve& a, const ParamCurve& b) {
           return chi_box_truncated(a, b, K).value;
         }));
    double in = worst([&](const ParamCurve& a, const ParamCurve& b) {
      return hausdorff_distance(a, b, haus_tol);
    });
    slack[t] = {ex, in};
  });
  double worst_exact = 0, worst_interp = 0;
  for (const auto& s : slack) {
    worst_exact = std::max(worst_exact, s[0]);
    worst_interp = std::max(worst_interp, s[1]);
  }
  return {worst_exact <= 1e-12 && worst_interp <= 1e-9,
          fmt("%llu triples, exact slack=%.2g (<=1e-12), interpolated=%.2g "
              "(<=1e-9)",
              (unsigned long long)trials, worst_exact, worst_interp)};
}

// 11. Exit-time increments: P(increment > 0.2) falls as delta shrinks.
Outcome c_exit_increments() {
  std::vector<IncrementPoint> pts = increment_exceedance(
      7, 0.5, {0.1, 0.05, 0.025}, 0.2, 1000, 1.5, 41111, 1, 8);
  bool mono = true;
  for (std::size_t i = 1; i < pts.size(); ++i) {
    if (pts[i].exceedance > pts[i - 1].exceedance) mono = false;
  }
  bool strict = pts.front().exceedance > pts.back().exceedance;
  return {mono && strict,
          fmt("exceedance %.3f / %.3f / %.3f (decreasing=%d)",
              pts[0].exceedance, pts[1].exceedance, pts[2].exceedance,
              int(mono && strict))};
}

// 12. Truncation robustness: doubling the truncation multiple m barely
// moves the (endpoint radius, duration) summary ensemble.
Outcome c_truncation_tv() {
  const std::uint64_t trials = 10000;
  const int mesh = 5;
  const double r = 1.0, beta = 1.5;
  std::vector<CurveSummary> s8(trials), s16(trials);
  for (int mi = 0; mi < 2; ++mi) {
    auto& out = mi == 0 ? s8 : s16;
    int m = mi == 0 ? 8 : 16;
    // shared master seed: the m comparison runs on common random numbers
    run_trials(trials, 1, 41212, [&, m](std::uint64_t t, RngStream& rng) {
      ParamCurve c = ilerw_truncated_sample(r, mesh, beta, rng, m);
      out[t] = {norm(c.points().back()), c.duration()};
    });
  }
  double tv = binned_tv(s8, s16, 3);
  return {tv <= 0.02, fmt("binned tv=%.5f (<=0.02) at %llu samples", tv,
                          (unsigned long long)trials)};
}

// 13. Determinism: identical config and seed give byte-identical result
// CSVs, for 1 worker rerun and for 8 workers.
Outcome c_determinism() {
  fs::path base = fs::temp_directory_path() /
                  ("lerw3d-acceptance-" +
                   std::to_string(std::chrono::steady_clock::now()
                                      .time_since_epoch()
                                      .count()));
  auto slurp = [](const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
  };
  std::string csv[3];
  const char* sub[3] = {"w1a", "w1b", "w8"};
  const char* workers[3] = {"1", "1", "8"};
  for (int i = 0; i < 3; ++i) {
    Config cfg = Config::from_text(
        "experiment=tails\nmesh=4\ntrials=2000\nseed=13013\n");
    cfg.set("workers", workers[i]);
    fs::path dir = base / sub[i];
    fs::create_directories(dir);
    run_experiment(cfg, dir.string());
    csv[i] = slurp(dir / "results.csv");
  }
  fs::remove_all(base);
  bool rerun = !csv[0].empty() && csv[0] == csv[1];
  bool workers8 = csv[0] == csv[2];
  return {rerun && workers8, fmt("rerun identical=%d, workers 1 vs 8 "
                                 "identical=%d, %zu bytes",
                                 int(rerun), int(workers8), csv[0].size())};
}

struct Criterion {
  int id;
  const char* label;
  double budget_s;  // 0 = no budget
  Outcome (*fn)();
};

const Criterion kCriteria[] = {
    {1, "loop erasure equals last-visit recursion", 30, c_loop_erasure},
    {2, "exact prefix law matches Monte Carlo", 300, c_prefix_law_mc},
    {3, "domain Markov conditional laws agree", 60, c_domain_markov},
    {4, "Wilson trees uniform, ordering-invariant", 120, c_wilson_uniformity},
    {5, "Green solve matches Monte Carlo, identities", 180, c_green_function},
    {6, "growth exponent in range, estimators agree", 1800,
     c_growth_exponent},
    {7, "length tail exceedance small and monotone", 600, c_length_tails},
    {8, "L2 discrepancy ratio falls from k=1 to k=2", 1200, c_l2_trend},
    {9, "quasi-loop prevalence decays with epsilon", 600, c_quasi_loops},
    {10, "curve metrics satisfy the metric axioms", 60, c_metric_axioms},
    {11, "exit-time increments shrink with delta", 600, c_exit_increments},
    {12, "m=8 vs m=16 truncation ensembles agree", 900, c_truncation_tv},
    {13, "reruns byte-identical across worker counts", 0, c_determinism},
};

}  // namespace

int main(int argc, char** argv) {
  std::set<int> only;
  for (int i = 1; i < argc; ++i) only.insert(std::atoi(argv[i]));

  int failures = 0, ran = 0;
  for (const Criterion& c : kCriteria) {
    if (!only.empty() && !only.count(c.id)) continue;
    ++ran;
    auto t0 = std::chrono::steady_clock::now();
    Outcome out;
    try {
      out = c.fn();
    } catch (const std::exception& e) {
      out = {false, fmt("exception: %s", e.what())};
    }
    double wall = std::chrono::duration<double>(
                      std::chrono::steady_clock::now() - t0)
                      .count();
    bool in_budget = c.budget_s == 0 || wall <= c.budget_s;
    bool pass = out.ok && in_budget;
    failures += !pass;
    std::printf("[%s] %2d %-46s %7.1fs", pass ? "PASS" : "FAIL", c.id,
                c.label, wall);
    if (c.budget_s > 0) std::printf("/%-5.0fs", c.budget_s);
    std::printf("  %s%s\n", out.detail.c_str(),
                in_budget ? "" : "  [over budget]");
    std::fflush(stdout);
  }
  std::printf("acceptance: %d/%d criteria passed\n", ran - failures, ran);
  return failures;
}
