// lerw3d: run experiments from config files, emit plot columns, self-check.
// Exit codes: 0 ok, 2 invalid config/params, 3 I/O failure, 4 selftest
// failure.

#include <cinttypes>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "lerw/experiment.hpp"
#include "lerw/format.hpp"
#include "lerw/wilson.hpp"

namespace {

using namespace lerw;

int exit_code_for(const Error& e) {
  switch (e.code()) {
    case Err::IoFailure:
      return 3;
    case Err::InvalidParams:
    case Err::UnknownExperiment:
    case Err::SchemaMismatch:
      return 2;
    default:
      return 1;
  }
}

int cmd_run(const std::string& config_path, const std::string& seed_override,
            const std::string& workers_override,
            const std::string& out_override) {
  Config cfg = Config::from_file(config_path);
  if (!seed_override.empty()) cfg.set("seed", seed_override);
  if (!workers_override.empty()) cfg.set("workers", workers_override);
  std::string out = !out_override.empty()
                        ? out_override
                        : cfg.get_string_or("out", "runs/" + cfg.experiment());
  RunManifest man = run_experiment(cfg, out);
  std::printf("experiment: %s\n", man.experiment.c_str());
  std::printf("config_hash: %016" PRIx64 "\n", man.config_hash);
  std::printf("streams: %" PRIu64 "\n", man.trials_total);
  std::printf("out: %s\n", out.c_str());
  std::printf("wall_seconds: %.3f\n", man.wall_seconds);
  return 0;
}

int cmd_plot(const std::string& results_path, const std::string& kind) {
  plot_data(results_path, kind, std::cout);
  return 0;
}

// ---- selftest -------------------------------------------------------------

struct SelfTest {
  int failures = 0;

  void check(bool ok, const std::string& name, const std::string& detail) {
    if (ok) {
      std::printf("[ok]   %s\n", name.c_str());
    } else {
      ++failures;
      std::printf("[FAIL] %s: %s\n", name.c_str(), detail.c_str());
    }
    std::fflush(stdout);
  }
};

// Last-visit recursion: sigma_0 is the last visit time of S[0] and
// sigma_{i+1} the last visit time of S[sigma_i + 1]; the loop erasure is S
// read at those times. Independent of the streaming eraser by construction.
std::vector<Vec3i> loop_erase_last_visit(const std::vector<Vec3i>& pts) {
  std::map<std::uint64_t, std::size_t> last;
  for (std::size_t i = 0; i < pts.size(); ++i) last[pack_point(pts[i])] = i;
  std::vector<Vec3i> out;
  std::size_t sigma = last[pack_point(pts[0])];
  out.push_back(pts[0]);
  while (sigma + 1 < pts.size()) {
    Vec3i next = pts[sigma + 1];
    sigma = last[pack_point(next)];
    out.push_back(next);
  }
  return out;
}

void check_eraser(SelfTest& st) {
  RngStream rng(9001, 0);
  bool equal = true, idem = true, ends = true;
  for (int trial = 0; trial < 2000 && equal && idem && ends; ++trial) {
    std::uint64_t len = 1 + rng.uniform_below(2000);
    LatticePath walk;
    walk.pts.push_back({0, 0, 0});
    for (std::uint64_t i = 0; i < len; ++i) {
      walk.pts.push_back(walk.pts.back() +
                         kSteps[rng.uniform_below(6)]);
    }
    SimplePath erased = loop_erase(walk);
    std::vector<Vec3i> oracle = loop_erase_last_visit(walk.pts);
    if (erased.pts != oracle) equal = false;
    LatticePath again;
    again.pts = erased.pts;
    if (loop_erase(again).pts != erased.pts) idem = false;
    if (erased.pts.front() != walk.pts.front() ||
        erased.pts.back() != walk.pts.back()) {
      ends = false;
    }
  }
  st.check(equal, "eraser-matches-last-visit-oracle", "mismatch found");
  st.check(idem, "eraser-idempotent", "second pass changed the path");
  st.check(ends, "eraser-preserves-endpoints", "endpoint moved");
}

void check_domain_markov(SelfTest& st) {
  std::vector<Vec3i> box;
  for (int x = 0; x < 4; ++x) {
    for (int y = 0; y < 4; ++y) {
      for (int z = 0; z < 4; ++z) box.push_back({x, y, z});
    }
  }
  Domain dom = Domain::explicit_set(box);
  PrefixLaw law = exact_lerw_law(dom, {1, 1, 1}, 2);
  double worst = 0;
  int tested = 0;
  for (const auto& [key, p] : law.prob) {
    if (key.size() < 2 || p <= 0) continue;
    std::vector<std::uint64_t> prefix(key.begin(), key.begin() + 2);
    PrefixLaw cond = law.conditioned_on(prefix);
    SimplePath seed;
    seed.pts = {unpack_point(prefix[0]), unpack_point(prefix[1])};
    PrefixLaw grown = exact_lerw_law_seeded(dom, seed, 1);
    worst = std::max(worst, cond.tv_distance(grown));
    if (++tested >= 6) break;
  }
  st.check(tested > 0 && worst <= 1e-9, "domain-markov-exact",
           "TV " + g17(worst) + " over " + std::to_string(tested) +
               " prefixes");
}

void check_wilson(SelfTest& st) {
  Domain dom = Domain::explicit_set({{0, 0, 0}, {1, 0, 0}});
  std::int64_t total = matrix_tree_count(dom);
  std::map<std::string, std::uint64_t> counts;
  RngStream rng(424242, 0);
  const std::uint64_t trials = 20000;
  for (std::uint64_t t = 0; t < trials; ++t) {
    counts[wilson_sample(dom, rng).canonical_key()]++;
  }
  std::vector<std::uint64_t> obs;
  for (const auto& [k, c] : counts) obs.push_back(c);
  for (std::int64_t i = std::int64_t(counts.size()); i < total; ++i) {
    obs.push_back(0);
  }
  std::vector<double> probs(std::size_t(total), 1.0 / double(total));
  double p = chi_square_gof_pvalue(obs, probs);
  st.check(p >= 0.001, "wilson-tree-law-uniform",
           "chi-square p " + g17(p) + " over " + std::to_string(total) +
               " trees");
}

void check_green(SelfTest& st) {
  Domain dom = Domain::ball({0, 0, 0}, 5.0);
  GreenTable table = green_table(dom);
  const std::vector<Vec3i>& pts = table.points();
  double max_asym = 0, max_res = 0;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    for (std::size_t j = i + 1; j < pts.size(); ++j) {
      max_asym = std::max(max_asym, std::abs(table.at(pts[i], pts[j]) -
                                             table.at(pts[j], pts[i])));
    }
  }
  for (const Vec3i& x : pts) {
    for (const Vec3i& y : pts) {
      double acc = 0;
      for (const Vec3i& d : kSteps) {
        Vec3i nb = x + d;
        if (dom.contains(nb)) acc += table.at(nb, y);
      }
      max_res = std::max(
          max_res,
          std::abs(table.at(x, y) - (x == y ? 1.0 : 0.0) - acc / 6.0));
    }
  }
  st.check(max_asym <= 1e-9, "green-symmetric", "max asym " + g17(max_asym));
  st.check(max_res <= 1e-9, "green-resolvent-identity",
           "max residual " + g17(max_res));

  double g00 = table.at({0, 0, 0}, {0, 0, 0});
  EstimateRecord mc =
      green_mc_estimate(5, {0, 0, 0}, {0, 0, 0}, 100000, 77, 1);
  double sig = std::abs(mc.value - g00) / mc.std_error;
  double rel = std::abs(mc.value - g00) / g00;
  st.check(sig <= 3.0 && rel <= 0.02, "green-solve-matches-walks",
           "solve " + g17(g00) + " mc " + g17(mc.value) + " (" + g17(sig) +
               " sigma)");
}

void check_metric_axioms(SelfTest& st) {
  Domain dom = Domain::scaled_ball(0, 0, 0, 1.0, 3);
  RngStream rng(31337, 0);
  double worst_exact = 0, worst_haus = 0;
  for (int t = 0; t < 200; ++t) {
    std::array<ParamCurve, 3> c;
    for (int j = 0; j < 3; ++j) {
      c[j] = rescale_to_curve(sample_lerw_to_exit({0, 0, 0}, dom, rng, 3),
                              1.5);
    }
    auto probe = [&](auto dist, double& worst) {
      double ab = dist(c[0], c[1]), ba = dist(c[1], c[0]);
      double ac = dist(c[0], c[2]), cb = dist(c[2], c[1]);
      double bc = dist(c[1], c[2]);
      worst = std::max(worst, std::abs(ab - ba));
      worst = std::max(worst, ab - (ac + cb));
      worst = std::max(worst, dist(c[0], c[0]));
      (void)bc;
    };
    probe([](const ParamCurve& a, const ParamCurve& b) {
      return rho_distance(a, b);
    }, worst_exact);
    probe([](const ParamCurve& a, const ParamCurve& b) {
      return chi_time_window(a, b).value;
    }, worst_exact);
    probe([](const ParamCurve& a, const ParamCurve& b) {
      return chi_box_truncated(a, b).value;
    }, worst_exact);
    probe([](const ParamCurve& a, const ParamCurve& b) {
      return hausdorff_distance(a, b, 1e-10);
    }, worst_haus);
  }
  st.check(worst_exact <= 1e-12, "metric-axioms-exact",
           "worst slack " + g17(worst_exact));
  st.check(worst_haus <= 1e-9, "metric-axioms-hausdorff",
           "worst slack " + g17(worst_haus));
}

std::string file_bytes(const std::filesystem::path& p) {
  std::ifstream is(p, std::ios::binary);
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

void check_determinism(SelfTest& st) {
  namespace fs = std::filesystem;
  fs::path base = fs::temp_directory_path() /
                  ("lerw3d-selftest-" + std::to_string(::getpid()));
  Config cfg = Config::from_text(
      "experiment=tails\nmesh=4\ntrials=200\nseed=11\n");
  run_experiment(cfg, (base / "a").string());
  run_experiment(cfg, (base / "b").string());
  cfg.set("workers", "4");
  run_experiment(cfg, (base / "c").string());

  std::string a = file_bytes(base / "a" / "results.csv");
  std::string b = file_bytes(base / "b" / "results.csv");
  std::string c = file_bytes(base / "c" / "results.csv");
  st.check(!a.empty() && a == b, "rerun-byte-identical", "CSV bytes differ");
  st.check(a == c, "worker-count-invariant", "CSV bytes differ at workers=4");

  std::ostringstream plot;
  plot_data((base / "a" / "results.csv").string(), "tails", plot);
  std::size_t rows = 0;
  std::istringstream ps(plot.str());
  for (std::string line; std::getline(ps, line);) {
    if (!line.empty() && line[0] != '#' && line != "x,y,yerr") ++rows;
  }
  st.check(rows == 4, "plot-preserves-row-count",
           "expected 4 rows, got " + std::to_string(rows));

  bool rejected = false;
  try {
    Config bad = Config::from_text("experiment=tails\ntrials=0\n");
    run_experiment(bad, (base / "d").string());
  } catch (const Error& e) {
    rejected = e.code() == Err::InvalidParams;
  }
  st.check(rejected, "zero-trials-rejected", "no InvalidParams raised");

  std::error_code ec;
  fs::remove_all(base, ec);
}

int cmd_selftest() {
  set_path_validation(true);
  SelfTest st;
  check_eraser(st);
  check_domain_markov(st);
  check_wilson(st);
  check_green(st);
  check_metric_axioms(st);
  check_determinism(st);
  if (st.failures > 0) {
    std::printf("selftest: %d check(s) failed\n", st.failures);
    return 4;
  }
  std::printf("selftest: all checks passed\n");
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"3D loop-erased random walk toolkit"};
  app.require_subcommand(1);

  std::string config_path, seed_override, workers_override, out_override;
  CLI::App* run = app.add_subcommand("run", "run an experiment from a config");
  run->add_option("config", config_path, "config file (key=value or .json)")
      ->required();
  run->add_option("--seed", seed_override, "override master seed");
  run->add_option("--workers", workers_override, "override worker count");
  run->add_option("--out", out_override, "output directory");

  std::string results_path, kind;
  CLI::App* plot = app.add_subcommand("plot", "emit x,y,yerr plot columns");
  plot->add_option("results", results_path, "results.csv from a run")
      ->required();
  plot->add_option("--kind", kind, "experiment kind of the file")->required();

  CLI::App* selftest =
      app.add_subcommand("selftest", "run the exact-oracle invariant suite");

  try {
    app.parse(argc, argv);
    if (run->parsed()) {
      return cmd_run(config_path, seed_override, workers_override,
                     out_override);
    }
    if (plot->parsed()) return cmd_plot(results_path, kind);
    if (selftest->parsed()) return cmd_selftest();
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  } catch (const Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return exit_code_for(e);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
