#include "biopsim/error.hpp"
#include "biopsim/rng.hpp"
#include "biopsim/special_functions.hpp"
#include "biopsim/stats.hpp"
#include "oracles.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <vector>

using namespace biopsim;
using namespace biopsim::stats;
using biopsim::oracle::simpson;

namespace {

std::vector<double> normals(Rng& rng, std::size_t n, double mean, double sd) {
  std::vector<double> v(n);
  for (auto& x : v) x = rng.normal(mean, sd);
  return v;
}

}  // namespace

TEST_CASE("incomplete beta matches quadrature") {
  for (const auto& [a, b] : {std::pair{1.0, 1.0}, {2.0, 3.0}, {5.5, 1.5}, {10.0, 20.0}, {1.0, 7.0}}) {
    const double lb = std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b);
    for (double x : {0.05, 0.3, 0.5, 0.77, 0.99}) {
      const double q = simpson([&](double t) { return std::pow(t, a - 1) * std::pow(1 - t, b - 1) * std::exp(-lb); }, 0, x);
      CHECK(special::incomplete_beta(a, b, x) == doctest::Approx(q).epsilon(1e-7));
    }
  }
  CHECK(special::incomplete_beta(2, 3, 0) == 0.0);
  CHECK(special::incomplete_beta(2, 3, 1) == 1.0);
}

TEST_CASE("t and F tails match density quadrature") {
  for (double nu : {1.0, 2.0, 4.0, 13.0, 157.0})
    for (double t : {0.1, 1.0, 2.0, 4.2426406871})
      CHECK(special::student_t_two_sided(t, nu) == doctest::Approx(oracle::t_two_sided(t, nu)).epsilon(1e-6));
  CHECK(special::student_t_cdf(0.0, 5) == doctest::Approx(0.5));
  CHECK(special::student_t_cdf(-2.0, 5) + special::student_t_cdf(2.0, 5) == doctest::Approx(1.0));
  for (auto [d1, d2] : {std::pair{2.0, 6.0}, {3.0, 10.0}, {5.0, 163.0}})
    for (double f : {0.5, 1.0, 3.0, 6.0})
      CHECK(special::f_upper_tail(f, d1, d2) == doctest::Approx(oracle::f_upper(f, d1, d2)).epsilon(1e-6));
  CHECK(special::normal_cdf(1.959963984540054) == doctest::Approx(0.975).epsilon(1e-12));
  CHECK(special::normal_two_sided(0.0) == 1.0);
}

TEST_CASE("describe") {
  const std::vector<double> a{1, 2, 3, 4};
  const Descriptives d = describe(a);
  CHECK(d.mean == 2.5);
  CHECK(d.median == 2.5);
  CHECK(d.q1 == 1.75);
  CHECK(d.q3 == 3.25);
  CHECK(d.sd == doctest::Approx(std::sqrt(5.0 / 3.0)));
  const std::vector<double> c(7, 4.2);
  CHECK(describe(c).sd == 0.0);
  CHECK(describe(c).iqr == 0.0);
  const std::vector<double> one{3.0};
  CHECK(describe(one).sd == 0.0);
  CHECK_THROWS_AS(describe(std::vector<double>{}), Error);
}

TEST_CASE("describe mean concentrates at n = 158") {
  int inside = 0;
  for (std::uint64_t seed = 0; seed < 400; ++seed) {
    Rng rng(derive_seed(seed, {158}));
    const auto xs = normals(rng, 158, 6.79, 6.18);
    inside += std::abs(describe(xs).mean - 6.79) <= 3 * 6.18 / std::sqrt(158.0);
  }
  CHECK(inside >= 396);
}

TEST_CASE("paired t examples") {
  const std::vector<double> x{1, 2, 3, 4, 5}, y{2, 4, 6, 8, 10};
  const TestResult r = paired_t(x, y);
  CHECK(r.statistic == doctest::Approx(4.242640687).epsilon(1e-9));
  CHECK(*r.df1 == 4);
  CHECK(std::abs(r.p_value - 0.0132356) < 1e-6);
  CHECK(r.p_value == doctest::Approx(oracle::t_two_sided(r.statistic, 4)).epsilon(1e-6));
  CHECK(r.significant);

  const std::vector<double> a{1, 2, 3}, b{1, 2, 4};
  const TestResult s = paired_t(a, b);
  CHECK(s.statistic == doctest::Approx(1.0));
  CHECK(*s.df1 == 2);
  CHECK(s.p_value == doctest::Approx(0.4226497).epsilon(1e-6));

  const TestResult same = paired_t(x, x);
  CHECK(same.statistic == 0.0);
  CHECK(same.p_value == 1.0);
  CHECK_FALSE(same.significant);

  CHECK_THROWS_AS(paired_t(x, a), Error);
  CHECK_THROWS_AS(paired_t(std::vector<double>{1}, std::vector<double>{2}), Error);
  const std::vector<double> shifted{2, 3, 4, 5, 6};
  CHECK_THROWS_AS(paired_t(x, shifted), Error);
}

TEST_CASE("paired t invariances") {
  Rng rng(5);
  const auto x = normals(rng, 30, 5, 2), y = normals(rng, 30, 6, 2);
  const TestResult r = paired_t(x, y);
  std::vector<double> xs(x), ys(y);
  for (auto& v : xs) v = 3.0 * v + 11.0;
  for (auto& v : ys) v = 3.0 * v + 11.0;
  const TestResult s = paired_t(xs, ys);
  CHECK(s.statistic == doctest::Approx(r.statistic).epsilon(1e-10));
  CHECK(s.p_value == doctest::Approx(r.p_value).epsilon(1e-10));
  CHECK(paired_t(y, x).statistic == doctest::Approx(-r.statistic));
}

TEST_CASE("Mann-Whitney exact small cases") {
  const std::vector<double> x{1, 2}, y{3, 4};
  const TestResult r = mann_whitney_u(x, y);
  CHECK(r.statistic == 0.0);
  CHECK(r.p_value == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
  CHECK(r.p_value == doctest::Approx(oracle::mann_whitney_p(x, y)).epsilon(1e-12));
  CHECK(mann_whitney_u(y, x).statistic == 4.0);

  const auto pmf = mann_whitney_null_pmf(2, 2);
  CHECK(pmf.size() == 5);
  CHECK(pmf[0] == doctest::Approx(1.0 / 6));
  CHECK(pmf[2] == doctest::Approx(2.0 / 6));
  CHECK(std::accumulate(pmf.begin(), pmf.end(), 0.0) == doctest::Approx(1.0));
}

TEST_CASE("Mann-Whitney exact matches enumeration") {
  Rng rng(8);
  for (int trial = 0; trial < 30; ++trial) {
    const std::size_t m = 2 + rng.below(5), n = 2 + rng.below(6);
    const auto x = normals(rng, m, 0.3 * rng.normal(), 1), y = normals(rng, n, 0, 1);
    const TestResult r = mann_whitney_u(x, y, MwMethod::Exact);
    CHECK(r.p_value == doctest::Approx(oracle::mann_whitney_p(x, y)).epsilon(1e-12));
    CHECK(r.statistic + mann_whitney_u(y, x).statistic == doctest::Approx(double(m * n)));
  }
}

TEST_CASE("Mann-Whitney normal approximation tracks the exact p") {
  Rng rng(21);
  double worst = 0;
  for (int trial = 0; trial < 200; ++trial) {
    const auto x = normals(rng, 14, 0.8 * rng.uniform(), 1), y = normals(rng, 14, 0, 1);
    const double exact = mann_whitney_u(x, y, MwMethod::Exact).p_value;
    const double approx = mann_whitney_u(x, y, MwMethod::Normal).p_value;
    worst = std::max(worst, std::abs(exact - approx));
  }
  INFO("worst gap " << worst);
  CHECK(worst < 0.02);
}

TEST_CASE("Mann-Whitney ties and identical samples") {
  const std::vector<double> x{1, 2, 2, 3, 5, 8}, y{1, 2, 2, 3, 5, 8};
  const TestResult r = mann_whitney_u(x, y);
  CHECK(r.statistic == 18.0);
  CHECK(r.p_value >= 0.99);
  CHECK_THROWS_AS(mann_whitney_u(x, y, MwMethod::Exact), Error);
  CHECK_THROWS_AS(mann_whitney_u(std::vector<double>{}, y), Error);

  std::vector<double> a{1.5, 2.5, 3.5}, b{0.5, 1.5, 9.0, 10.0};
  const TestResult base = mann_whitney_u(a, b);
  for (auto& v : a) v += 100;
  for (auto& v : b) v += 100;
  CHECK(mann_whitney_u(a, b).p_value == base.p_value);
}

TEST_CASE("one-way ANOVA") {
  const TestResult r = one_way_anova({{1, 2, 3}, {2, 3, 4}, {3, 4, 5}});
  // SSB = 3·((2-3)² + 0 + (4-3)²) = 6, SSW = 6 → F = (6/2)/(6/6) = 3.
  CHECK(r.statistic == doctest::Approx(3.0));
  CHECK(*r.df1 == 2);
  CHECK(*r.df2 == 6);
  CHECK(r.p_value == doctest::Approx(0.125).epsilon(1e-9));
  CHECK(r.p_value == doctest::Approx(oracle::f_upper(3.0, 2, 6)).epsilon(1e-6));

  const TestResult c = one_way_anova({{2, 2}, {2, 2, 2}});
  CHECK(c.statistic == 0.0);
  CHECK(c.p_value == 1.0);
  const TestResult d = one_way_anova({{1, 1}, {2, 2}});
  CHECK(d.degenerate);
  CHECK(d.p_value == 0.0);
  CHECK_THROWS_AS(one_way_anova({{1, 2, 3}}), Error);
  CHECK_THROWS_AS(one_way_anova({{1, 2, 3}, {4}}), Error);

  Rng rng(3);
  std::vector<std::vector<double>> g{normals(rng, 8, 0, 1), normals(rng, 9, 0.5, 1), normals(rng, 7, 1, 1)};
  const TestResult base = one_way_anova(g);
  for (auto& grp : g)
    for (auto& v : grp) v = 4 * v - 2;
  CHECK(one_way_anova(g).statistic == doctest::Approx(base.statistic).epsilon(1e-10));
}

TEST_CASE("reproducibility test") {
  Rng rng(10);
  const auto x = normals(rng, 40, 6, 5);
  CHECK(reproducibility_test(x, x).test.p_value == 1.0);

  std::vector<double> shuffled(x);
  std::reverse(shuffled.begin(), shuffled.end());
  std::swap(shuffled[3], shuffled[17]);
  const ReproducibilityResult r = reproducibility_test(x, shuffled);
  CHECK(r.x_sq_dev.mean == r.y_sq_dev.mean);
}

TEST_CASE("reproducibility flags unequal spread") {
  int flagged = 0;
  double msd_x = 0, msd_y = 0;
  const int seeds = 200;
  for (int seed = 0; seed < seeds; ++seed) {
    Rng rng(derive_seed(99, {std::uint64_t(seed)}));
    const auto x = normals(rng, 158, 6.79, 6.18), y = normals(rng, 158, 5.1, 4.8);
    const ReproducibilityResult r = reproducibility_test(x, y);
    flagged += r.test.significant;
    msd_x += r.x_sq_dev.mean / seeds;
    msd_y += r.y_sq_dev.mean / seeds;
  }
  CHECK(msd_x == doctest::Approx(38.2).epsilon(0.05));
  CHECK(msd_y == doctest::Approx(23.0).epsilon(0.05));
  CHECK(flagged > seeds / 2);
}

TEST_CASE("p-values stay in range") {
  Rng rng(44);
  for (int i = 0; i < 100; ++i) {
    const auto x = normals(rng, 12, 0, 1), y = normals(rng, 12, rng.normal(), 1 + rng.uniform());
    for (double p : {paired_t(x, y).p_value, mann_whitney_u(x, y).p_value, one_way_anova({x, y}).p_value,
                     reproducibility_test(x, y).test.p_value}) {
      CHECK(p >= 0.0);
      CHECK(p <= 1.0);
    }
  }
}
