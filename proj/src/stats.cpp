#include "biopsim/stats.hpp"

#include "biopsim/error.hpp"
#include "biopsim/special_functions.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace biopsim::stats {

namespace {

// Summed in ascending order so the result depends only on the multiset.
double mean_of(std::span<const double> xs) {
  std::vector<double> s(xs.begin(), xs.end());
  std::sort(s.begin(), s.end());
  return std::accumulate(s.begin(), s.end(), 0.0) / static_cast<double>(s.size());
}

double max_abs(std::span<const double> xs) {
  double m = 0.0;
  for (const double v : xs) m = std::max(m, std::abs(v));
  return m;
}

void finish(TestResult& r) {
  r.p_value = std::clamp(r.p_value, 0.0, 1.0);
  r.significant = r.p_value < kAlpha;
}

}  // namespace

double quantile_sorted(std::span<const double> sorted, double q) {
  if (sorted.empty()) throw Error(ErrorCode::EmptySample, "quantile of empty sample");
  const double h = (static_cast<double>(sorted.size()) - 1.0) * q;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

Descriptives describe(std::span<const double> xs) {
  if (xs.empty()) throw Error(ErrorCode::EmptySample, "describe needs at least one value");
  Descriptives d;
  d.n = xs.size();
  d.mean = mean_of(xs);
  if (d.n > 1) {
    double ss = 0.0;
    for (const double v : xs) ss += (v - d.mean) * (v - d.mean);
    d.sd = std::sqrt(ss / static_cast<double>(d.n - 1));
  }
  std::vector<double> s(xs.begin(), xs.end());
  std::sort(s.begin(), s.end());
  d.median = quantile_sorted(s, 0.5);
  d.q1 = quantile_sorted(s, 0.25);
  d.q3 = quantile_sorted(s, 0.75);
  d.iqr = d.q3 - d.q1;
  return d;
}

TestResult paired_t(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw Error(ErrorCode::LengthMismatch, "paired samples differ in length");
  if (x.size() < 2) throw Error(ErrorCode::DegenerateSample, "paired t needs n >= 2");
  const std::size_t n = x.size();
  std::vector<double> d(n);
  for (std::size_t i = 0; i < n; ++i) d[i] = y[i] - x[i];

  TestResult r;
  r.method = "paired_t";
  r.df1 = static_cast<double>(n - 1);

  const double scale = std::max({max_abs(x), max_abs(y), 1e-300});
  const double spread_tol = 1e-12 * scale;
  const auto [mn, mx] = std::minmax_element(d.begin(), d.end());
  if (*mx - *mn <= spread_tol) {
    if (max_abs(d) <= spread_tol) {
      r.statistic = 0.0;
      r.p_value = 1.0;
      finish(r);
      return r;
    }
    throw Error(ErrorCode::DegenerateSample, "all paired differences are identical and nonzero");
  }
  const Descriptives dd = describe(d);
  r.statistic = dd.mean / (dd.sd / std::sqrt(static_cast<double>(n)));
  r.p_value = special::student_t_two_sided(r.statistic, *r.df1);
  finish(r);
  return r;
}

std::vector<double> mann_whitney_null_pmf(std::size_t m, std::size_t n) {
  // f[j][u]: arrangements of i x-values and j y-values with U = u, built row by row
  // from f(i, j, u) = f(i - 1, j, u - j) + f(i, j - 1, u).
  const std::size_t umax = m * n;
  std::vector<std::vector<double>> f(n + 1, std::vector<double>(umax + 1, 0.0));
  for (std::size_t j = 0; j <= n; ++j) f[j][0] = 1.0;  // i = 0
  for (std::size_t i = 1; i <= m; ++i) {
    std::vector<std::vector<double>> g(n + 1, std::vector<double>(umax + 1, 0.0));
    g[0][0] = 1.0;
    for (std::size_t j = 1; j <= n; ++j) {
      for (std::size_t u = 0; u <= i * j; ++u) {
        double v = g[j - 1][u];
        if (u >= j) v += f[j][u - j];
        g[j][u] = v;
      }
    }
    f = std::move(g);
  }
  std::vector<double> pmf = f[n];
  const double total = std::accumulate(pmf.begin(), pmf.end(), 0.0);
  for (double& p : pmf) p /= total;
  return pmf;
}

TestResult mann_whitney_u(std::span<const double> x, std::span<const double> y, MwMethod method) {
  if (x.empty() || y.empty()) throw Error(ErrorCode::EmptySample, "Mann-Whitney needs two nonempty samples");
  const std::size_t nx = x.size(), ny = y.size(), n = nx + ny;

  std::vector<std::pair<double, int>> all;
  all.reserve(n);
  for (const double v : x) all.emplace_back(v, 0);
  for (const double v : y) all.emplace_back(v, 1);
  std::sort(all.begin(), all.end(), [](const auto& a, const auto& b) { return a.first < b.first; });

  double rank_sum_x = 0.0;
  double tie_term = 0.0;
  bool ties = false;
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j + 1 < n && all[j + 1].first == all[i].first) ++j;
    const double midrank = 0.5 * static_cast<double>(i + j) + 1.0;
    const double t = static_cast<double>(j - i + 1);
    if (t > 1.0) {
      ties = true;
      tie_term += t * t * t - t;
    }
    for (std::size_t k = i; k <= j; ++k) {
      if (all[k].second == 0) rank_sum_x += midrank;
    }
    i = j + 1;
  }

  TestResult r;
  const double dnx = static_cast<double>(nx), dny = static_cast<double>(ny);
  r.statistic = rank_sum_x - dnx * (dnx + 1.0) / 2.0;

  bool exact = false;
  switch (method) {
    case MwMethod::Auto: exact = !ties && nx * ny <= 400; break;
    case MwMethod::Exact:
      if (ties) throw Error(ErrorCode::InvalidArgument, "exact Mann-Whitney requires untied data");
      exact = true;
      break;
    case MwMethod::Normal: exact = false; break;
  }

  if (exact) {
    r.method = "mann_whitney_exact";
    const auto pmf = mann_whitney_null_pmf(nx, ny);
    const auto u = static_cast<std::size_t>(std::llround(r.statistic));
    double lower = 0.0, upper = 0.0;
    for (std::size_t k = 0; k < pmf.size(); ++k) {
      if (k <= u) lower += pmf[k];
      if (k >= u) upper += pmf[k];
    }
    r.p_value = std::min(1.0, 2.0 * std::min(lower, upper));
  } else {
    r.method = "mann_whitney_normal";
    const double dn = static_cast<double>(n);
    const double mu = dnx * dny / 2.0;
    const double var = dnx * dny / 12.0 * ((dn + 1.0) - tie_term / (dn * (dn - 1.0)));
    if (!(var > 0.0)) {
      r.p_value = 1.0;
    } else {
      const double z = std::max(0.0, std::abs(r.statistic - mu) - 0.5) / std::sqrt(var);
      r.p_value = special::normal_two_sided(z);
    }
  }
  finish(r);
  return r;
}

TestResult one_way_anova(const std::vector<std::vector<double>>& groups) {
  const std::size_t k = groups.size();
  if (k < 2) throw Error(ErrorCode::DegenerateSample, "ANOVA needs at least 2 groups");
  std::size_t total_n = 0;
  double scale = 0.0;
  for (const auto& g : groups) {
    if (g.size() < 2) throw Error(ErrorCode::DegenerateSample, "each ANOVA group needs n >= 2");
    total_n += g.size();
    scale = std::max(scale, max_abs(g));
  }
  if (total_n <= k) throw Error(ErrorCode::DegenerateSample, "ANOVA needs N > k");

  double grand = 0.0;
  for (const auto& g : groups) grand += std::accumulate(g.begin(), g.end(), 0.0);
  grand /= static_cast<double>(total_n);

  double ssb = 0.0, ssw = 0.0;
  for (const auto& g : groups) {
    const double m = mean_of(g);
    ssb += static_cast<double>(g.size()) * (m - grand) * (m - grand);
    for (const double v : g) ssw += (v - m) * (v - m);
  }

  TestResult r;
  r.method = "one_way_anova";
  r.df1 = static_cast<double>(k - 1);
  r.df2 = static_cast<double>(total_n - k);
  const double zero_tol = std::pow(1e-12 * std::max(scale, 1e-300), 2) * static_cast<double>(total_n);
  if (ssb + ssw <= zero_tol) {
    r.statistic = 0.0;
    r.p_value = 1.0;
  } else if (ssw <= zero_tol) {
    r.statistic = std::numeric_limits<double>::infinity();
    r.p_value = 0.0;
    r.degenerate = true;
  } else {
    r.statistic = (ssb / *r.df1) / (ssw / *r.df2);
    r.p_value = special::f_upper_tail(r.statistic, *r.df1, *r.df2);
  }
  finish(r);
  return r;
}

ReproducibilityResult reproducibility_test(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw Error(ErrorCode::LengthMismatch, "paired samples differ in length");
  if (x.size() < 2) throw Error(ErrorCode::DegenerateSample, "reproducibility test needs n >= 2");
  const double mx = mean_of(x), my = mean_of(y);
  std::vector<double> u(x.size()), v(y.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    u[i] = (x[i] - mx) * (x[i] - mx);
    v[i] = (y[i] - my) * (y[i] - my);
  }
  ReproducibilityResult out;
  out.x_sq_dev = describe(u);
  out.y_sq_dev = describe(v);
  out.test = paired_t(u, v);
  out.test.method = "reproducibility_paired_t";
  return out;
}

}  // namespace biopsim::stats
