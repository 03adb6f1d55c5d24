#include "lerw/stats.hpp"

#include <algorithm>
#include <cmath>

#include <boost/math/special_functions/gamma.hpp>

#include "lerw/errors.hpp"

namespace lerw {

double mean(const std::vector<double>& xs) {
  require(!xs.empty(), Err::InvalidParams, "mean of empty sample");
  double acc = 0.0;
  for (double x : xs) acc += x;
  return acc / double(xs.size());
}

double sample_stddev(const std::vector<double>& xs) {
  require(xs.size() >= 2, Err::InvalidParams, "stddev needs two points");
  double m = mean(xs);
  double acc = 0.0;
  for (double x : xs) acc += (x - m) * (x - m);
  return std::sqrt(acc / double(xs.size() - 1));
}

double stderr_of_mean(const std::vector<double>& xs) {
  return sample_stddev(xs) / std::sqrt(double(xs.size()));
}

double chi_square_pvalue(double stat, int dof) {
  require(dof >= 1, Err::InvalidParams, "chi-square needs dof >= 1");
  if (stat <= 0.0) return 1.0;
  return boost::math::gamma_q(double(dof) / 2.0, stat / 2.0);
}

double chi_square_gof_pvalue(const std::vector<std::uint64_t>& observed,
                             const std::vector<double>& expected_probs) {
  require(observed.size() == expected_probs.size() && observed.size() >= 2,
          Err::InvalidParams, "need matching cells, at least two");
  std::uint64_t n = 0;
  for (auto c : observed) n += c;
  require(n > 0, Err::InvalidParams, "no observations");
  double stat = 0.0;
  for (std::size_t i = 0; i < observed.size(); ++i) {
    double e = expected_probs[i] * double(n);
    require(e > 0.0, Err::InvalidParams, "expected count must be positive");
    double d = double(observed[i]) - e;
    stat += d * d / e;
  }
  return chi_square_pvalue(stat, int(observed.size()) - 1);
}

double chi_square_homogeneity_pvalue(const std::vector<std::uint64_t>& a,
                                     const std::vector<std::uint64_t>& b) {
  require(a.size() == b.size() && !a.empty(), Err::InvalidParams,
          "need matching cells");
  double na = 0, nb = 0;
  for (auto c : a) na += double(c);
  for (auto c : b) nb += double(c);
  require(na > 0 && nb > 0, Err::InvalidParams, "empty sample");
  double stat = 0.0;
  int cells = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    double tot = double(a[i]) + double(b[i]);
    if (tot == 0.0) continue;
    ++cells;
    double ea = tot * na / (na + nb);
    double eb = tot * nb / (na + nb);
    double da = double(a[i]) - ea;
    double db = double(b[i]) - eb;
    stat += da * da / ea + db * db / eb;
  }
  require(cells >= 2, Err::InvalidParams, "fewer than two occupied cells");
  return chi_square_pvalue(stat, cells - 1);
}

double ks_two_sample_pvalue(std::vector<double> a, std::vector<double> b) {
  require(!a.empty() && !b.empty(), Err::InvalidParams, "empty sample");
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  double na = double(a.size()), nb = double(b.size());
  double d = 0.0;
  std::size_t i = 0, j = 0;
  while (i < a.size() && j < b.size()) {
    double x = std::min(a[i], b[j]);
    while (i < a.size() && a[i] <= x) ++i;
    while (j < b.size() && b[j] <= x) ++j;
    d = std::max(d, std::abs(double(i) / na - double(j) / nb));
  }
  double ne = std::sqrt(na * nb / (na + nb));
  double lambda = (ne + 0.12 + 0.11 / ne) * d;
  // Q_KS(lambda) = 2 sum_{k>=1} (-1)^{k-1} exp(-2 k^2 lambda^2)
  double p = 0.0;
  double sign = 1.0;
  for (int k = 1; k <= 100; ++k) {
    double term = std::exp(-2.0 * double(k) * double(k) * lambda * lambda);
    p += sign * term;
    sign = -sign;
    if (term < 1e-12) break;
  }
  return std::clamp(2.0 * p, 0.0, 1.0);
}

Interval wilson_interval(std::uint64_t successes, std::uint64_t trials,
                         double z) {
  require(trials > 0 && successes <= trials, Err::InvalidParams,
          "bad binomial counts");
  double n = double(trials);
  double p = double(successes) / n;
  double z2 = z * z;
  double denom = 1.0 + z2 / n;
  double center = (p + z2 / (2 * n)) / denom;
  double half = z * std::sqrt(p * (1 - p) / n + z2 / (4 * n * n)) / denom;
  return {std::max(0.0, center - half), std::min(1.0, center + half)};
}

OlsFit ols_fit(const std::vector<double>& xs, const std::vector<double>& ys) {
  require(xs.size() == ys.size(), Err::InvalidParams, "length mismatch");
  require(xs.size() >= 2, Err::InsufficientLevels,
          "fit needs at least two points");
  double n = double(xs.size());
  double mx = mean(xs), my = mean(ys);
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxx += (xs[i] - mx) * (xs[i] - mx);
    sxy += (xs[i] - mx) * (ys[i] - my);
  }
  require(sxx > 0.0, Err::InvalidParams, "degenerate abscissae");
  OlsFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  fit.residuals.resize(xs.size());
  double rss = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    fit.residuals[i] = ys[i] - (fit.intercept + fit.slope * xs[i]);
    rss += fit.residuals[i] * fit.residuals[i];
  }
  // with two points the fit is exact and the residual variance undefined;
  // report zero errors
  double sigma2 = xs.size() > 2 ? rss / (n - 2.0) : 0.0;
  fit.slope_stderr = std::sqrt(sigma2 / sxx);
  fit.intercept_stderr = std::sqrt(sigma2 * (1.0 / n + mx * mx / sxx));
  return fit;
}

}  // namespace lerw
