#include "lerw/experiment.hpp"

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "lerw/format.hpp"
#include "lerw/wilson.hpp"

namespace lerw {
namespace {

using nlohmann::json;

std::string trim(const std::string& s) {
  std::size_t a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  std::size_t b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::size_t pos = 0;
  while (true) {
    std::size_t next = s.find(sep, pos);
    if (next == std::string::npos) {
      out.push_back(s.substr(pos));
      return out;
    }
    out.push_back(s.substr(pos, next - pos));
    pos = next + 1;
  }
}

std::int64_t parse_int(const std::string& raw, const std::string& key) {
  const std::string t = trim(raw);
  require(!t.empty(), Err::InvalidParams,
          "parameter '" + key + "': empty value");
  errno = 0;
  char* end = nullptr;
  long long v = std::strtoll(t.c_str(), &end, 10);
  require(errno == 0 && end && *end == '\0', Err::InvalidParams,
          "parameter '" + key + "': expected an integer, got '" + t + "'");
  return v;
}

double parse_double(const std::string& raw, const std::string& key) {
  const std::string t = trim(raw);
  require(!t.empty(), Err::InvalidParams,
          "parameter '" + key + "': empty value");
  errno = 0;
  char* end = nullptr;
  double v = std::strtod(t.c_str(), &end);
  require(errno == 0 && end && *end == '\0' && std::isfinite(v),
          Err::InvalidParams,
          "parameter '" + key + "': expected a number, got '" + t + "'");
  return v;
}

std::string hash_hex(std::uint64_t h) {
  char buf[24];
  std::snprintf(buf, sizeof buf, "%016llx", (unsigned long long)h);
  return buf;
}

}  // namespace

Config Config::from_text(const std::string& text) {
  Config cfg;
  for (const std::string& raw : split(text, '\n')) {
    std::string line = trim(raw);
    if (line.empty() || line[0] == '#') continue;
    std::size_t eq = line.find('=');
    require(eq != std::string::npos, Err::InvalidParams,
            "config line without '=': '" + line + "'");
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    require(!key.empty(), Err::InvalidParams,
            "config line with empty key: '" + line + "'");
    if (key == "experiment") {
      require(cfg.experiment_.empty(), Err::InvalidParams,
              "duplicate 'experiment' line");
      cfg.experiment_ = value;
    } else {
      // comma lists normalize to one entry per element, same as JSON arrays
      for (const std::string& piece : split(value, ',')) {
        std::string item = trim(piece);
        require(!item.empty(), Err::InvalidParams,
                "empty list element in '" + line + "'");
        cfg.params_[key].push_back(item);
      }
    }
  }
  require(!cfg.experiment_.empty(), Err::InvalidParams,
          "config does not name an experiment");
  return cfg;
}

Config Config::from_json_text(const std::string& text) {
  json doc = json::parse(text, nullptr, /*allow_exceptions=*/false);
  require(!doc.is_discarded(), Err::InvalidParams,
          "config is not valid JSON");
  require(doc.is_object(), Err::InvalidParams,
          "config JSON must be one object");
  auto scalar = [](const json& v, const std::string& key) -> std::string {
    if (v.is_string()) return v.get<std::string>();
    require(v.is_number() || v.is_boolean(), Err::InvalidParams,
            "parameter '" + key + "': values must be scalars or arrays");
    return v.dump();
  };
  Config cfg;
  for (auto it = doc.begin(); it != doc.end(); ++it) {
    const std::string& key = it.key();
    const json& v = it.value();
    if (key == "experiment") {
      require(v.is_string(), Err::InvalidParams,
              "'experiment' must be a string");
      cfg.experiment_ = v.get<std::string>();
      continue;
    }
    if (v.is_array()) {
      for (const json& e : v) cfg.params_[key].push_back(scalar(e, key));
    } else {
      cfg.params_[key].push_back(scalar(v, key));
    }
  }
  require(!cfg.experiment_.empty(), Err::InvalidParams,
          "config does not name an experiment");
  return cfg;
}

Config Config::from_file(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  require(is.good(), Err::IoFailure, "cannot read config '" + path + "'");
  std::ostringstream buf;
  buf << is.rdbuf();
  require(!is.bad(), Err::IoFailure, "cannot read config '" + path + "'");
  const std::string text = buf.str();
  if (path.size() >= 5 && path.substr(path.size() - 5) == ".json") {
    return from_json_text(text);
  }
  return from_text(text);
}

bool Config::has(const std::string& key) const {
  return params_.contains(key);
}

void Config::set(const std::string& key, const std::string& value) {
  params_[key].clear();
  for (const std::string& piece : split(value, ',')) {
    params_[key].push_back(trim(piece));
  }
}

const std::vector<std::string>& Config::values_for(
    const std::string& key) const {
  auto it = params_.find(key);
  require(it != params_.end(), Err::InvalidParams,
          "parameter '" + key + "' is required");
  return it->second;
}

std::string Config::get_string(const std::string& key) const {
  const auto& vs = values_for(key);
  require(vs.size() == 1, Err::InvalidParams,
          "parameter '" + key + "': expected a single value");
  return vs[0];
}

std::string Config::get_string_or(const std::string& key,
                                  const std::string& fallback) const {
  return has(key) ? get_string(key) : fallback;
}

std::int64_t Config::get_int(const std::string& key) const {
  return parse_int(get_string(key), key);
}

std::int64_t Config::get_int_or(const std::string& key,
                                std::int64_t fallback) const {
  return has(key) ? get_int(key) : fallback;
}

std::uint64_t Config::get_u64_or(const std::string& key,
                                 std::uint64_t fallback) const {
  if (!has(key)) return fallback;
  std::int64_t v = get_int(key);
  require(v >= 0, Err::InvalidParams,
          "parameter '" + key + "' must be nonnegative");
  return std::uint64_t(v);
}

double Config::get_double(const std::string& key) const {
  return parse_double(get_string(key), key);
}

double Config::get_double_or(const std::string& key, double fallback) const {
  return has(key) ? get_double(key) : fallback;
}

std::vector<std::int64_t> Config::get_int_list(const std::string& key) const {
  std::vector<std::int64_t> out;
  for (const std::string& v : values_for(key)) {
    for (const std::string& piece : split(v, ',')) {
      out.push_back(parse_int(piece, key));
    }
  }
  require(!out.empty(), Err::InvalidParams,
          "parameter '" + key + "': empty list");
  return out;
}

std::vector<std::int64_t> Config::get_int_list_or(
    const std::string& key, const std::vector<std::int64_t>& fallback) const {
  return has(key) ? get_int_list(key) : fallback;
}

std::vector<double> Config::get_double_list(const std::string& key) const {
  std::vector<double> out;
  for (const std::string& v : values_for(key)) {
    for (const std::string& piece : split(v, ',')) {
      out.push_back(parse_double(piece, key));
    }
  }
  require(!out.empty(), Err::InvalidParams,
          "parameter '" + key + "': empty list");
  return out;
}

std::vector<double> Config::get_double_list_or(
    const std::string& key, const std::vector<double>& fallback) const {
  return has(key) ? get_double_list(key) : fallback;
}

std::string Config::canonical() const {
  // workers and out are execution context, not result identity: the same
  // numbers must hash the same at any worker count or output location
  std::string out = "experiment=" + experiment_ + "\n";
  for (const auto& [key, values] : params_) {
    if (key == "workers" || key == "out") continue;
    for (const std::string& v : values) out += key + "=" + v + "\n";
  }
  return out;
}

std::uint64_t Config::hash() const {
  // FNV-1a 64
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : canonical()) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

namespace {

// What one experiment hands back to the shared writer.
struct ExpResult {
  std::string header;
  std::vector<std::string> rows;
  json summary;
  std::uint64_t trials_total = 0;
};

using Handler = ExpResult (*)(const Config&, std::uint64_t, int);

std::uint64_t required_trials(const Config& cfg, std::uint64_t fallback) {
  std::uint64_t t = cfg.get_u64_or("trials", fallback);
  require(t >= 1, Err::InvalidParams, "trials must be >= 1");
  return t;
}

std::vector<int> int_levels(const Config& cfg, const std::string& key,
                            const std::vector<std::int64_t>& fallback,
                            std::int64_t lo, std::int64_t hi) {
  std::vector<int> out;
  for (std::int64_t v : cfg.get_int_list_or(key, fallback)) {
    require(v >= lo && v <= hi, Err::InvalidParams,
            "parameter '" + key + "': value " + std::to_string(v) +
                " outside [" + std::to_string(lo) + ", " + std::to_string(hi) +
                "]");
    out.push_back(int(v));
  }
  return out;
}

std::string join_row(const std::vector<std::string>& cells) {
  std::string out;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (i) out += ',';
    out += cells[i];
  }
  return out;
}

std::string u64s(std::uint64_t v) { return std::to_string(v); }

bool nonincreasing(const std::vector<double>& ys) {
  for (std::size_t i = 1; i < ys.size(); ++i) {
    if (ys[i] > ys[i - 1]) return false;
  }
  return true;
}

json fit_summary(const BetaFit& bf) {
  json j;
  j["beta"] = bf.beta;
  j["beta_stderr"] = bf.beta_stderr;
  j["slope"] = bf.fit.slope;
  j["slope_stderr"] = bf.fit.slope_stderr;
  j["intercept"] = bf.fit.intercept;
  j["in_range"] = bf.in_paper_range;
  return j;
}

ExpResult run_beta_length(const Config& cfg, std::uint64_t seed, int workers) {
  std::vector<int> levels = int_levels(cfg, "levels", {5, 6, 7, 8, 9}, 1, 19);
  std::uint64_t trials = required_trials(cfg, 2000);
  std::optional<double> syn;
  if (cfg.has("synthetic_exponent")) syn = cfg.get_double("synthetic_exponent");

  BetaFit bf = beta_from_length(levels, trials, seed, workers, syn);
  ExpResult r;
  r.header = "level,mean_length,std_error,trials";
  for (const LevelEstimate& le : bf.levels) {
    r.rows.push_back(join_row({std::to_string(std::llround(le.x)),
                               g17(le.value), g17(le.std_error),
                               u64s(le.trials)}));
  }
  r.summary = fit_summary(bf);
  r.trials_total = trials;
  return r;
}

ExpResult run_beta_escape(const Config& cfg, std::uint64_t seed, int workers) {
  std::vector<int> exps =
      int_levels(cfg, "radius_exponents", {4, 5, 6, 7}, 1, 18);
  std::uint64_t trials = required_trials(cfg, 2000);
  std::optional<double> syn;
  if (cfg.has("synthetic_exponent")) syn = cfg.get_double("synthetic_exponent");

  BetaFit bf = beta_from_escape(exps, trials, seed, workers, syn);
  ExpResult r;
  r.header = "radius_exponent,escape_probability,std_error,trials";
  for (const LevelEstimate& le : bf.levels) {
    r.rows.push_back(join_row({std::to_string(std::llround(le.x)),
                               g17(le.value), g17(le.std_error),
                               u64s(le.trials)}));
  }
  r.summary = fit_summary(bf);
  r.trials_total = trials * exps.size();
  return r;
}

ExpResult run_tails(const Config& cfg, std::uint64_t seed, int workers) {
  int mesh = int_levels(cfg, "mesh", {7}, 1, 19).at(0);
  std::uint64_t trials = required_trials(cfg, 10000);
  std::vector<double> bs =
      cfg.get_double_list_or("b_grid", {1.5, 2.0, 3.0, 4.0});
  for (double b : bs) {
    require(b >= 1.0, Err::InvalidParams, "parameter 'b_grid': b must be >= 1");
  }

  TailProfile tp = tail_profile(mesh, trials, bs, seed, workers);
  ExpResult r;
  r.header = "b,exceedance,ci_lo,ci_hi,outside,trials";
  std::vector<double> ys;
  for (const TailPoint& p : tp.points) {
    ys.push_back(p.exceedance);
    r.rows.push_back(join_row({g17(p.b), g17(p.exceedance), g17(p.ci.lo),
                               g17(p.ci.hi), u64s(p.outside), u64s(trials)}));
  }
  r.summary["mean_length"] = tp.mean_length;
  r.summary["nonincreasing_in_b"] = nonincreasing(ys);
  r.summary["exceedance_last"] = ys.empty() ? 0.0 : ys.back();
  r.trials_total = trials;
  return r;
}

ExpResult run_l2_approx(const Config& cfg, std::uint64_t seed, int workers) {
  std::vector<int> levels = int_levels(cfg, "levels", {8}, 3, 19);
  std::vector<int> ks = int_levels(cfg, "k_values", {1, 2}, 1, 4);
  std::uint64_t trials = required_trials(cfg, 200);
  int enlargement = int(cfg.get_int_or("enlargement", 3));
  require(enlargement >= 1, Err::InvalidParams, "enlargement must be >= 1");

  L2Trend tr = l2_trend(levels, ks, trials, seed, workers, enlargement);
  ExpResult r;
  r.header = "mesh,k,q,ratio,alpha0,alpha0_std_error,conditioned,trials";
  for (const L2Cell& c : tr.cells) {
    r.rows.push_back(join_row(
        {std::to_string(c.mesh), std::to_string(c.k), std::to_string(c.q),
         g17(c.ratio), g17(c.alpha0), g17(c.alpha0_std_error),
         u64s(c.conditioned), u64s(c.trials)}));
  }
  r.summary["decreasing_in_k"] = tr.decreasing_in_k;
  r.summary["decreasing_in_mesh"] = tr.decreasing_in_mesh;
  r.trials_total = trials * levels.size();
  return r;
}

ExpResult run_quasi_loops(const Config& cfg, std::uint64_t seed, int workers) {
  int mesh = int_levels(cfg, "mesh", {7}, 1, 19).at(0);
  std::uint64_t trials = required_trials(cfg, 1000);
  std::vector<double> eps = cfg.get_double_list_or("eps_grid", {0.4, 0.2, 0.1});
  std::int64_t sexp = cfg.get_int_or("s_exponent", 3);
  require(sexp >= 1, Err::InvalidParams, "s_exponent must be >= 1");
  std::vector<double> s_radii, r_radii;
  for (double e : eps) {
    require(e > 0.0 && e < 1.0, Err::InvalidParams,
            "parameter 'eps_grid': eps must lie in (0, 1)");
    s_radii.push_back(std::pow(e, double(sexp)));
    r_radii.push_back(std::sqrt(e));
  }

  std::vector<std::vector<std::uint8_t>> nonempty(
      eps.size(), std::vector<std::uint8_t>(trials, 0));
  Domain dom = Domain::scaled_ball(0, 0, 0, 1.0, mesh);
  run_trials(trials, workers, seed,
             [&](std::uint64_t t, RngStream& rng) {
               SimplePath g = sample_lerw_to_exit({0, 0, 0}, dom, rng, mesh);
               for (std::size_t i = 0; i < eps.size(); ++i) {
                 nonempty[i][t] =
                     quasi_loops(g, s_radii[i], r_radii[i]).empty() ? 0 : 1;
               }
             });

  ExpResult r;
  r.header = "eps,s,r,prevalence,ci_lo,ci_hi,nonempty,trials";
  std::vector<double> prev;
  for (std::size_t i = 0; i < eps.size(); ++i) {
    std::uint64_t hits = 0;
    for (std::uint8_t b : nonempty[i]) hits += b;
    double p = double(hits) / double(trials);
    Interval ci = wilson_interval(hits, trials);
    prev.push_back(p);
    r.rows.push_back(join_row({g17(eps[i]), g17(s_radii[i]), g17(r_radii[i]),
                               g17(p), g17(ci.lo), g17(ci.hi), u64s(hits),
                               u64s(trials)}));
  }
  // nonincreasing along the grid as given (callers pass eps descending)
  r.summary["nonincreasing_in_grid"] = nonincreasing(prev);
  r.summary["prevalence_first"] = prev.empty() ? 0.0 : prev.front();
  r.summary["prevalence_last"] = prev.empty() ? 0.0 : prev.back();
  r.trials_total = trials;
  return r;
}

ExpResult run_hittability(const Config& cfg, std::uint64_t seed, int workers) {
  int mesh = int_levels(cfg, "mesh", {6}, 1, 19).at(0);
  std::uint64_t trials = required_trials(cfg, 20);
  std::vector<double> eps = cfg.get_double_list_or("eps_grid", {0.2, 0.1, 0.05});
  for (double e : eps) {
    require(e > 0.0 && e < 1.0, Err::InvalidParams,
            "parameter 'eps_grid': eps must lie in (0, 1)");
  }
  std::uint32_t probes = std::uint32_t(cfg.get_u64_or("probes", 32));
  require(probes >= 1, Err::InvalidParams, "probes must be >= 1");
  std::uint64_t cap = cfg.get_u64_or("candidate_cap", 128);
  require(cap >= 1, Err::InvalidParams, "candidate_cap must be >= 1");

  std::vector<std::vector<double>> worst(eps.size(),
                                         std::vector<double>(trials, 0.0));
  Domain dom = Domain::scaled_ball(0, 0, 0, 1.0, mesh);
  run_trials(trials, workers, seed,
             [&](std::uint64_t t, RngStream& rng) {
               SimplePath g = sample_lerw_to_exit({0, 0, 0}, dom, rng, mesh);
               for (std::size_t i = 0; i < eps.size(); ++i) {
                 worst[i][t] =
                     hittability_probe(g, eps[i], probes, rng, cap)
                         .worst_escape;
               }
             });

  ExpResult r;
  r.header = "eps,median_worst_escape,mean_worst_escape,trials";
  double max_median = 0;
  for (std::size_t i = 0; i < eps.size(); ++i) {
    std::vector<double> ws = worst[i];
    std::sort(ws.begin(), ws.end());
    double med = ws[(ws.size() - 1) / 2];  // lower median
    double mn = mean(ws);
    max_median = std::max(max_median, med);
    r.rows.push_back(
        join_row({g17(eps[i]), g17(med), g17(mn), u64s(trials)}));
  }
  r.summary["max_median_worst_escape"] = max_median;
  r.trials_total = trials;
  return r;
}

ExpResult run_one_point(const Config& cfg, std::uint64_t seed, int workers) {
  std::vector<int> levels = int_levels(cfg, "levels", {4, 5, 6}, 1, 19);
  std::uint64_t trials = required_trials(cfg, 20000);
  double px = cfg.get_double_or("x", 0.5);
  double py = cfg.get_double_or("y", 0.0);
  double pz = cfg.get_double_or("z", 0.0);

  std::vector<std::vector<std::uint8_t>> hit(
      levels.size(), std::vector<std::uint8_t>(trials, 0));
  run_trials(levels.size() * trials, workers, seed,
             [&](std::uint64_t u, RngStream& rng) {
               std::size_t li = std::size_t(u / trials);
               std::uint64_t t = u % trials;
               Domain dom = Domain::scaled_ball(0, 0, 0, 1.0, levels[li]);
               SimplePath g =
                   sample_lerw_to_exit({0, 0, 0}, dom, rng, levels[li]);
               hit[li][t] = one_point_hit(g, px, py, pz) ? 1 : 0;
             });

  ExpResult r;
  r.header = "mesh,hit_probability,ci_lo,ci_hi,hits,trials";
  std::vector<double> xs, ys;
  for (std::size_t li = 0; li < levels.size(); ++li) {
    std::uint64_t hits = 0;
    for (std::uint8_t b : hit[li]) hits += b;
    double p = double(hits) / double(trials);
    Interval ci = wilson_interval(hits, trials);
    if (p > 0) {
      xs.push_back(double(levels[li]));
      ys.push_back(std::log2(p));
    }
    r.rows.push_back(join_row({std::to_string(levels[li]), g17(p), g17(ci.lo),
                               g17(ci.hi), u64s(hits), u64s(trials)}));
  }
  if (xs.size() >= 3) {
    OlsFit fit = ols_fit(xs, ys);
    r.summary["slope"] = fit.slope;
    r.summary["slope_stderr"] = fit.slope_stderr;
    // P(hit) ~ 2^{-(3 - beta) n}
    r.summary["implied_beta"] = 3.0 + fit.slope;
  }
  r.trials_total = levels.size() * trials;
  return r;
}

ExpResult run_ust_uniformity(const Config& cfg, std::uint64_t seed,
                             int workers) {
  std::uint64_t trials = required_trials(cfg, 100000);
  std::string dkind = cfg.get_string_or("domain", "pair");
  Domain dom = Domain::explicit_set({{0, 0, 0}, {1, 0, 0}});
  if (dkind == "ball") {
    dom = Domain::ball({0, 0, 0}, cfg.get_double_or("radius", 1.5));
  } else {
    require(dkind == "pair", Err::InvalidParams,
            "parameter 'domain': expected 'pair' or 'ball'");
  }
  std::vector<Vec3i> interior = dom.interior_points();
  require(interior.size() >= 1 && interior.size() <= 12, Err::InvalidParams,
          "domain interior must have 1..12 vertices for exact counting");
  std::int64_t total = matrix_tree_count(dom);
  std::vector<Vec3i> reversed(interior.rbegin(), interior.rend());

  // two independent ensembles, one per sweep ordering
  std::vector<std::string> keys_lex(trials), keys_rev(trials);
  run_trials(2 * trials, workers, seed,
             [&](std::uint64_t u, RngStream& rng) {
               bool rev = u >= trials;
               std::uint64_t t = rev ? u - trials : u;
               WiredTree tree =
                   wilson_sample(dom, rng, rev ? reversed : std::vector<Vec3i>{});
               (rev ? keys_rev : keys_lex)[t] = tree.canonical_key();
             });

  std::map<std::string, std::pair<std::uint64_t, std::uint64_t>> counts;
  for (const std::string& k : keys_lex) counts[k].first++;
  for (const std::string& k : keys_rev) counts[k].second++;

  std::vector<std::uint64_t> obs_lex, obs_rev;
  for (const auto& [key, c] : counts) {
    obs_lex.push_back(c.first);
    obs_rev.push_back(c.second);
  }
  require(std::int64_t(counts.size()) <= total, Err::PreconditionViolated,
          "observed more distinct trees than the matrix-tree count");
  // trees never sampled still occupy cells of the uniform law
  std::vector<std::uint64_t> pad_lex = obs_lex, pad_rev = obs_rev;
  for (std::int64_t i = std::int64_t(counts.size()); i < total; ++i) {
    pad_lex.push_back(0);
    pad_rev.push_back(0);
  }
  std::vector<double> uniform(std::size_t(total), 1.0 / double(total));
  double p_lex = chi_square_gof_pvalue(pad_lex, uniform);
  double p_rev = chi_square_gof_pvalue(pad_rev, uniform);
  double p_hom = chi_square_homogeneity_pvalue(obs_lex, obs_rev);

  ExpResult r;
  r.header = "tree_index,expected_probability,count_lex,count_reversed";
  std::size_t idx = 0;
  for (const auto& [key, c] : counts) {
    r.rows.push_back(join_row({std::to_string(idx++), g17(1.0 / double(total)),
                               u64s(c.first), u64s(c.second)}));
  }
  r.summary["tree_total"] = total;
  r.summary["distinct_observed"] = counts.size();
  r.summary["p_uniform_lex"] = p_lex;
  r.summary["p_uniform_reversed"] = p_rev;
  r.summary["p_homogeneity"] = p_hom;
  r.trials_total = 2 * trials;
  return r;
}

ExpResult run_green_check(const Config& cfg, std::uint64_t seed, int workers) {
  std::int64_t radius = cfg.get_int_or("radius", 8);
  require(radius >= 2 && radius <= 12, Err::InvalidParams,
          "radius must lie in [2, 12] (dense-table solve)");
  std::uint64_t walks = cfg.get_u64_or("walks", 200000);
  require(walks >= 1, Err::InvalidParams, "walks must be >= 1");
  std::vector<std::int64_t> fit_radii =
      cfg.get_int_list_or("fit_radii", {8, 10, 12, 14, 16});
  int outer = int(cfg.get_int_or("outer_factor", 4));

  Domain dom = Domain::ball({0, 0, 0}, double(radius));
  GreenTable table = green_table(dom);
  const std::vector<Vec3i>& pts = table.points();
  double g00 = table.at({0, 0, 0}, {0, 0, 0});

  double max_asym = 0;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    for (std::size_t j = i + 1; j < pts.size(); ++j) {
      max_asym = std::max(
          max_asym, std::abs(table.at(pts[i], pts[j]) -
                             table.at(pts[j], pts[i])));
    }
  }
  // G = I + P G, row by row
  double max_res = 0;
  for (const Vec3i& x : pts) {
    for (const Vec3i& y : pts) {
      double acc = 0;
      for (const Vec3i& d : kSteps) {
        Vec3i nb = x + d;
        if (dom.contains(nb)) acc += table.at(nb, y);
      }
      double res = table.at(x, y) - (x == y ? 1.0 : 0.0) - acc / 6.0;
      max_res = std::max(max_res, std::abs(res));
    }
  }

  EstimateRecord mc =
      green_mc_estimate(radius, {0, 0, 0}, {0, 0, 0}, walks, seed, workers);
  double rel = std::abs(mc.value - g00) / g00;
  double sigmas =
      mc.std_error > 0 ? std::abs(mc.value - g00) / mc.std_error : 0.0;

  GreenConstantResult fit = green_constant_fit(fit_radii, outer);

  ExpResult r;
  r.header = "radius,g_value,g_times_r,inv_r";
  for (std::size_t i = 0; i < fit.radii.size(); ++i) {
    double rr = fit.radii[i];
    r.rows.push_back(join_row({g17(rr), g17(fit.g_values[i]),
                               g17(fit.g_values[i] * rr), g17(1.0 / rr)}));
  }
  r.summary["g00_solve"] = g00;
  r.summary["g00_mc"] = mc.value;
  r.summary["mc_std_error"] = mc.std_error;
  r.summary["mc_rel_error"] = rel;
  r.summary["mc_sigmas"] = sigmas;
  r.summary["max_asymmetry"] = max_asym;
  r.summary["max_resolvent_residual"] = max_res;
  r.summary["fitted_constant"] = fit.record.value;
  r.summary["fit_slope"] = fit.slope;
  r.summary["fit_max_abs_residual"] = fit.max_abs_residual;
  r.trials_total = walks;
  return r;
}

ExpResult run_metric_axioms(const Config& cfg, std::uint64_t seed,
                            int workers) {
  std::uint64_t trials = required_trials(cfg, 1000);
  int mesh = int_levels(cfg, "mesh", {4}, 1, 19).at(0);
  double beta = cfg.get_double_or("beta", 1.5);
  int K = int(cfg.get_int_or("K", 8));
  require(K >= 1 && K <= 40, Err::InvalidParams, "K must lie in [1, 40]");
  constexpr double kHausTol = 1e-10;

  // metric x axiom maxima: metrics rho, chi_window, chi_box, hausdorff;
  // axioms symmetry, triangle, identity
  constexpr int kMetrics = 4, kAxioms = 3;
  std::vector<std::array<double, kMetrics * kAxioms>> slack(
      trials, std::array<double, kMetrics * kAxioms>{});

  Domain dom = Domain::scaled_ball(0, 0, 0, 1.0, mesh);
  run_trials(trials, workers, seed, [&](std::uint64_t t, RngStream& rng) {
    std::array<ParamCurve, 3> c;
    for (int j = 0; j < 3; ++j) {
      c[j] = rescale_to_curve(
          sample_lerw_to_exit({0, 0, 0}, dom, rng, mesh), beta);
    }
    auto record = [&](int metric, const auto& dist) {
      double ab = dist(c[0], c[1]), ba = dist(c[1], c[0]);
      double ac = dist(c[0], c[2]), ca = dist(c[2], c[0]);
      double bc = dist(c[1], c[2]), cb = dist(c[2], c[1]);
      double sym = std::max({std::abs(ab - ba), std::abs(ac - ca),
                             std::abs(bc - cb)});
      double tri = std::max({ab - (ac + cb), ac - (ab + bc),
                             bc - (ba + ac)});
      double idn = std::max({dist(c[0], c[0]), dist(c[1], c[1]),
                             dist(c[2], c[2])});
      slack[t][metric * kAxioms + 0] = sym;
      slack[t][metric * kAxioms + 1] = std::max(0.0, tri);
      slack[t][metric * kAxioms + 2] = idn;
    };
    record(0, [](const ParamCurve& a, const ParamCurve& b) {
      return rho_distance(a, b);
    });
    record(1, [K](const ParamCurve& a, const ParamCurve& b) {
      return chi_time_window(a, b, K).value;
    });
    record(2, [K](const ParamCurve& a, const ParamCurve& b) {
      return chi_box_truncated(a, b, K).value;
    });
    record(3, [](const ParamCurve& a, const ParamCurve& b) {
      return hausdorff_distance(a, b, kHausTol);
    });
  });

  static const char* metric_names[kMetrics] = {"rho", "chi_window", "chi_box",
                                               "hausdorff"};
  static const char* axiom_names[kAxioms] = {"symmetry", "triangle",
                                             "identity"};
  ExpResult r;
  r.header = "metric,axiom,max_slack,cases";
  double worst_exact = 0, worst_interpolated = 0;
  for (int mi = 0; mi < kMetrics; ++mi) {
    for (int ai = 0; ai < kAxioms; ++ai) {
      double mx = 0;
      for (std::uint64_t t = 0; t < trials; ++t) {
        mx = std::max(mx, slack[t][mi * kAxioms + ai]);
      }
      (mi == 3 ? worst_interpolated : worst_exact) =
          std::max(mi == 3 ? worst_interpolated : worst_exact, mx);
      r.rows.push_back(join_row(
          {metric_names[mi], axiom_names[ai], g17(mx), u64s(trials)}));
    }
  }
  r.summary["worst_exact_slack"] = worst_exact;
  r.summary["worst_interpolated_slack"] = worst_interpolated;
  r.trials_total = trials;
  return r;
}

ExpResult run_exit_increments(const Config& cfg, std::uint64_t seed,
                              int workers) {
  int mesh = int_levels(cfg, "mesh", {7}, 1, 19).at(0);
  double rr = cfg.get_double_or("r", 0.5);
  std::vector<double> deltas =
      cfg.get_double_list_or("deltas", {0.1, 0.05, 0.025});
  double threshold = cfg.get_double_or("threshold", 0.2);
  std::uint64_t trials = required_trials(cfg, 1000);
  double beta = cfg.get_double_or("beta", 1.5);
  int m = int(cfg.get_int_or("m", 8));

  std::vector<IncrementPoint> pts = increment_exceedance(
      mesh, rr, deltas, threshold, trials, beta, seed, workers, m);

  ExpResult r;
  r.header = "delta,exceedance,ci_lo,ci_hi,outside,trials";
  std::vector<double> ys;
  for (const IncrementPoint& p : pts) {
    ys.push_back(p.exceedance);
    r.rows.push_back(join_row({g17(p.delta), g17(p.exceedance), g17(p.ci.lo),
                               g17(p.ci.hi), u64s(p.outside), u64s(trials)}));
  }
  r.summary["nonincreasing_in_grid"] = nonincreasing(ys);
  r.summary["exceedance_first"] = ys.empty() ? 0.0 : ys.front();
  r.summary["exceedance_last"] = ys.empty() ? 0.0 : ys.back();
  r.trials_total = trials;
  return r;
}

ExpResult run_ilerw_trunc(const Config& cfg, std::uint64_t seed, int workers) {
  int mesh = int_levels(cfg, "mesh", {5}, 1, 19).at(0);
  double rr = cfg.get_double_or("r", 1.0);
  require(rr >= 1.0, Err::InvalidParams, "r must be >= 1");
  std::vector<std::int64_t> ms = cfg.get_int_list_or("m_values", {8, 16});
  std::uint64_t trials = required_trials(cfg, 10000);
  double beta = cfg.get_double_or("beta", 1.5);
  int bins = int(cfg.get_int_or("bins", 3));
  require(bins >= 1 && bins <= 64, Err::InvalidParams,
          "bins must lie in [1, 64]");
  for (std::int64_t m : ms) {
    require(m >= 2, Err::InvalidParams, "m_values entries must be >= 2");
    double lattice_radius = double(m) * rr * std::ldexp(1.0, mesh);
    require(lattice_radius < std::ldexp(1.0, 19), Err::InvalidParams,
            "m * r * 2^mesh exceeds the coordinate range");
  }

  std::vector<std::vector<CurveSummary>> sums(
      ms.size(), std::vector<CurveSummary>(trials));
  std::vector<std::vector<std::uint8_t>> faces(
      ms.size(), std::vector<std::uint8_t>(trials, 0));
  for (std::size_t mi = 0; mi < ms.size(); ++mi) {
    // same master seed for every m: ensembles share trial streams, so the
    // m-to-m comparison runs on common random numbers
    run_trials(trials, workers, seed, [&, mi](std::uint64_t t, RngStream& rng) {
      ParamCurve c =
          ilerw_truncated_sample(rr, mesh, beta, rng, int(ms[mi]));
      sums[mi][t] = {norm(c.points().back()), c.duration()};
      faces[mi][t] = std::uint8_t(exit_face(c, rr));
    });
  }

  ExpResult r;
  r.header =
      "m,trials,mean_endpoint_norm,mean_duration,"
      "face_px,face_nx,face_py,face_ny,face_pz,face_nz,face_uniform_p";
  std::vector<double> face_probs(6, 1.0 / 6.0);
  for (std::size_t mi = 0; mi < ms.size(); ++mi) {
    std::vector<std::uint64_t> fc(6, 0);
    double se = 0, sd = 0;
    for (std::uint64_t t = 0; t < trials; ++t) {
      fc[faces[mi][t]]++;
      se += sums[mi][t].endpoint_norm;
      sd += sums[mi][t].duration;
    }
    double p_face = chi_square_gof_pvalue(fc, face_probs);
    r.rows.push_back(join_row(
        {std::to_string(ms[mi]), u64s(trials), g17(se / double(trials)),
         g17(sd / double(trials)), u64s(fc[0]), u64s(fc[1]), u64s(fc[2]),
         u64s(fc[3]), u64s(fc[4]), u64s(fc[5]), g17(p_face)}));
  }
  double max_tv = 0;
  for (std::size_t mi = 0; mi + 1 < ms.size(); ++mi) {
    double tv = binned_tv(sums[mi], sums[mi + 1], bins);
    max_tv = std::max(max_tv, tv);
    r.summary["tv_m" + std::to_string(ms[mi]) + "_m" +
              std::to_string(ms[mi + 1])] = tv;
  }
  r.summary["max_consecutive_tv"] = max_tv;
  r.trials_total = ms.size() * trials;
  return r;
}

struct ExpSpec {
  Handler handler;
  std::vector<std::string> allowed_keys;
};

const std::map<std::string, ExpSpec>& experiment_table() {
  static const std::map<std::string, ExpSpec> table = {
      {"beta-length",
       {run_beta_length, {"levels", "trials", "synthetic_exponent"}}},
      {"beta-escape",
       {run_beta_escape, {"radius_exponents", "trials", "synthetic_exponent"}}},
      {"tails", {run_tails, {"mesh", "trials", "b_grid"}}},
      {"l2-approx",
       {run_l2_approx, {"levels", "k_values", "trials", "enlargement"}}},
      {"quasi-loops",
       {run_quasi_loops, {"mesh", "trials", "eps_grid", "s_exponent"}}},
      {"hittability",
       {run_hittability,
        {"mesh", "trials", "eps_grid", "probes", "candidate_cap"}}},
      {"one-point", {run_one_point, {"levels", "trials", "x", "y", "z"}}},
      {"ust-uniformity",
       {run_ust_uniformity, {"trials", "domain", "radius"}}},
      {"green-check",
       {run_green_check, {"radius", "walks", "fit_radii", "outer_factor"}}},
      {"metric-axioms",
       {run_metric_axioms, {"trials", "mesh", "beta", "K"}}},
      {"exit-increments",
       {run_exit_increments,
        {"mesh", "r", "deltas", "threshold", "trials", "beta", "m"}}},
      {"ilerw-trunc",
       {run_ilerw_trunc,
        {"mesh", "r", "m_values", "trials", "beta", "bins"}}},
  };
  return table;
}

void write_text_file(const std::filesystem::path& path,
                     const std::string& content) {
  std::ofstream os(path, std::ios::binary);
  require(os.good(), Err::IoFailure,
          "cannot open '" + path.string() + "' for writing");
  os << content;
  os.flush();
  require(os.good(), Err::IoFailure,
          "write to '" + path.string() + "' failed");
}

}  // namespace

std::vector<std::string> experiment_names() {
  std::vector<std::string> out;
  for (const auto& [name, spec] : experiment_table()) out.push_back(name);
  return out;
}

RunManifest run_experiment(const Config& cfg, const std::string& out_dir) {
  const auto& table = experiment_table();
  auto it = table.find(cfg.experiment());
  require(it != table.end(), Err::UnknownExperiment,
          "unknown experiment '" + cfg.experiment() + "'");
  const ExpSpec& spec = it->second;

  for (const auto& [key, values] : cfg.params()) {
    if (key == "seed" || key == "workers" || key == "out") continue;
    bool known = std::find(spec.allowed_keys.begin(), spec.allowed_keys.end(),
                           key) != spec.allowed_keys.end();
    require(known, Err::InvalidParams,
            "experiment '" + cfg.experiment() + "': unknown parameter '" +
                key + "'");
  }

  std::uint64_t seed = cfg.get_u64_or("seed", 1);
  std::int64_t workers64 = cfg.get_int_or("workers", 1);
  require(workers64 >= 1 && workers64 <= 256, Err::InvalidParams,
          "workers must lie in [1, 256]");
  int workers = int(workers64);

  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  require(!ec, Err::IoFailure,
          "cannot create output directory '" + out_dir + "': " + ec.message());

  auto t0 = std::chrono::steady_clock::now();
  ExpResult res = spec.handler(cfg, seed, workers);
  double wall =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
          .count();

  const std::string hex = hash_hex(cfg.hash());
  std::string csv = "# lerw3d " + std::string(kVersion) + "\n";
  csv += "# experiment=" + cfg.experiment() + "\n";
  csv += "# config_hash=" + hex + "\n";
  csv += res.header + "\n";
  for (const std::string& row : res.rows) csv += row + "\n";

  json summary;
  summary["experiment"] = cfg.experiment();
  summary["version"] = kVersion;
  summary["config_hash"] = hex;
  summary["metrics"] = res.summary;

  RunManifest man;
  man.experiment = cfg.experiment();
  man.version = kVersion;
  man.config_hash = cfg.hash();
  man.master_seed = seed;
  man.workers = workers;
  man.trials_total = res.trials_total;
  man.wall_seconds = wall;
  man.outputs = {"results.csv", "summary.json", "manifest.json"};

  json manifest;
  manifest["experiment"] = man.experiment;
  manifest["version"] = man.version;
  manifest["config_hash"] = hex;
  manifest["master_seed"] = man.master_seed;
  manifest["workers"] = man.workers;
  manifest["streams"] = {{"first", 0}, {"count", man.trials_total}};
  manifest["wall_seconds"] = man.wall_seconds;
  manifest["outputs"] = man.outputs;
  manifest["config"] = cfg.canonical();

  const std::filesystem::path dir(out_dir);
  write_text_file(dir / "results.csv", csv);
  write_text_file(dir / "summary.json", summary.dump(2) + "\n");
  write_text_file(dir / "manifest.json", manifest.dump(2) + "\n");
  return man;
}

namespace {

double cell_double(const std::vector<std::string>& cells, std::size_t i) {
  require(i < cells.size(), Err::SchemaMismatch,
          "results row has too few columns");
  errno = 0;
  char* end = nullptr;
  double v = std::strtod(cells[i].c_str(), &end);
  require(errno == 0 && end && *end == '\0', Err::SchemaMismatch,
          "malformed numeric cell '" + cells[i] + "'");
  return v;
}

// x, y, yerr extractors per experiment; log2 transforms where the analysis
// is a log-scale fit
struct PlotSpec {
  const char* header;
  std::array<double, 3> (*map)(const std::vector<std::string>&, std::size_t);
};

double log2_err(double value, double err) {
  return value > 0 ? err / (value * std::log(2.0)) : 0.0;
}

const std::map<std::string, PlotSpec>& plot_table() {
  static const std::map<std::string, PlotSpec> table = {
      {"beta-length",
       {"level,mean_length,std_error,trials",
        [](const std::vector<std::string>& c, std::size_t) {
          double v = cell_double(c, 1), e = cell_double(c, 2);
          return std::array<double, 3>{cell_double(c, 0), std::log2(v),
                                       log2_err(v, e)};
        }}},
      {"beta-escape",
       {"radius_exponent,escape_probability,std_error,trials",
        [](const std::vector<std::string>& c, std::size_t) {
          double v = cell_double(c, 1), e = cell_double(c, 2);
          return std::array<double, 3>{cell_double(c, 0), std::log2(v),
                                       log2_err(v, e)};
        }}},
      {"tails",
       {"b,exceedance,ci_lo,ci_hi,outside,trials",
        [](const std::vector<std::string>& c, std::size_t) {
          return std::array<double, 3>{
              cell_double(c, 0), cell_double(c, 1),
              (cell_double(c, 3) - cell_double(c, 2)) / 2.0};
        }}},
      {"l2-approx",
       {"mesh,k,q,ratio,alpha0,alpha0_std_error,conditioned,trials",
        [](const std::vector<std::string>& c, std::size_t) {
          return std::array<double, 3>{cell_double(c, 1), cell_double(c, 3),
                                       0.0};
        }}},
      {"quasi-loops",
       {"eps,s,r,prevalence,ci_lo,ci_hi,nonempty,trials",
        [](const std::vector<std::string>& c, std::size_t) {
          return std::array<double, 3>{
              cell_double(c, 0), cell_double(c, 3),
              (cell_double(c, 5) - cell_double(c, 4)) / 2.0};
        }}},
      {"hittability",
       {"eps,median_worst_escape,mean_worst_escape,trials",
        [](const std::vector<std::string>& c, std::size_t) {
          return std::array<double, 3>{cell_double(c, 0), cell_double(c, 1),
                                       0.0};
        }}},
      {"one-point",
       {"mesh,hit_probability,ci_lo,ci_hi,hits,trials",
        [](const std::vector<std::string>& c, std::size_t) {
          double p = cell_double(c, 1);
          double half = (cell_double(c, 3) - cell_double(c, 2)) / 2.0;
          return std::array<double, 3>{cell_double(c, 0), std::log2(p),
                                       log2_err(p, half)};
        }}},
      {"ust-uniformity",
       {"tree_index,expected_probability,count_lex,count_reversed",
        [](const std::vector<std::string>& c, std::size_t) {
          return std::array<double, 3>{cell_double(c, 0), cell_double(c, 2),
                                       std::sqrt(cell_double(c, 2))};
        }}},
      {"green-check",
       {"radius,g_value,g_times_r,inv_r",
        [](const std::vector<std::string>& c, std::size_t) {
          return std::array<double, 3>{cell_double(c, 3), cell_double(c, 2),
                                       0.0};
        }}},
      {"metric-axioms",
       {"metric,axiom,max_slack,cases",
        [](const std::vector<std::string>& c, std::size_t row) {
          return std::array<double, 3>{double(row), cell_double(c, 2), 0.0};
        }}},
      {"exit-increments",
       {"delta,exceedance,ci_lo,ci_hi,outside,trials",
        [](const std::vector<std::string>& c, std::size_t) {
          return std::array<double, 3>{
              cell_double(c, 0), cell_double(c, 1),
              (cell_double(c, 3) - cell_double(c, 2)) / 2.0};
        }}},
      {"ilerw-trunc",
       {"m,trials,mean_endpoint_norm,mean_duration,"
        "face_px,face_nx,face_py,face_ny,face_pz,face_nz,face_uniform_p",
        [](const std::vector<std::string>& c, std::size_t) {
          return std::array<double, 3>{cell_double(c, 0), cell_double(c, 3),
                                       0.0};
        }}},
  };
  return table;
}

}  // namespace

void plot_data(const std::string& results_csv, const std::string& kind,
               std::ostream& os) {
  const auto& table = plot_table();
  auto spec_it = table.find(kind);
  require(spec_it != table.end(), Err::SchemaMismatch,
          "unknown plot kind '" + kind + "'");
  const PlotSpec& spec = spec_it->second;

  std::ifstream is(results_csv, std::ios::binary);
  require(is.good(), Err::IoFailure, "cannot read '" + results_csv + "'");

  std::string line;
  std::string experiment, hash;
  std::string header;
  std::vector<std::vector<std::string>> rows;
  while (std::getline(is, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line[0] == '#') {
      std::string body = trim(line.substr(1));
      if (body.rfind("experiment=", 0) == 0) {
        experiment = body.substr(11);
      } else if (body.rfind("config_hash=", 0) == 0) {
        hash = body.substr(12);
      }
      continue;
    }
    if (header.empty()) {
      header = line;
    } else {
      rows.push_back(split(line, ','));
    }
  }
  require(!is.bad(), Err::IoFailure, "cannot read '" + results_csv + "'");
  require(!experiment.empty(), Err::SchemaMismatch,
          "no experiment tag in '" + results_csv + "'");
  require(!hash.empty(), Err::SchemaMismatch,
          "no config_hash tag in '" + results_csv + "'");
  require(experiment == kind, Err::SchemaMismatch,
          "file was produced by experiment '" + experiment +
              "', not by '" + kind + "'");
  require(header == spec.header, Err::SchemaMismatch,
          "column header does not match the '" + kind + "' schema");

  os << "# lerw3d " << kVersion << " plot\n";
  os << "# experiment=" << kind << "\n";
  os << "# config_hash=" << hash << "\n";
  os << "x,y,yerr\n";
  for (std::size_t i = 0; i < rows.size(); ++i) {
    std::array<double, 3> p = spec.map(rows[i], i);
    os << g17(p[0]) << ',' << g17(p[1]) << ',' << g17(p[2]) << "\n";
  }
  os.flush();
  require(os.good(), Err::IoFailure, "plot output write failed");
}

}  // namespace lerw
