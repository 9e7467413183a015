#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

namespace biopsim::stats {

inline constexpr double kAlpha = 0.05;

struct Descriptives {
  std::size_t n = 0;
  double mean = 0.0;
  double sd = 0.0;  // sample (n - 1); 0 when n == 1
  double median = 0.0;
  double q1 = 0.0;
  double q3 = 0.0;
  double iqr = 0.0;
};

struct TestResult {
  std::string method;
  double statistic = 0.0;
  std::optional<double> df1;
  std::optional<double> df2;
  double p_value = 1.0;
  bool significant = false;
  /// Set when the statistic is infinite (zero within-group spread).
  bool degenerate = false;
};

/// Type-7 (linear interpolation) quantile of an ascending-sorted sample.
double quantile_sorted(std::span<const double> sorted, double q);

/// Throws EmptySample.
Descriptives describe(std::span<const double> xs);

/// Paired t-test on d = y − x, two-sided. All-zero differences give t = 0, p = 1.
/// Throws LengthMismatch, or DegenerateSample for n < 2 or constant nonzero differences.
TestResult paired_t(std::span<const double> x, std::span<const double> y);

enum class MwMethod { Auto, Exact, Normal };

/// Mann-Whitney U of x (pairs with x > y count 1, ties ½), two-sided.
/// Auto: exact null distribution when n_x·n_y <= 400 and there are no ties,
/// otherwise normal approximation with tie and continuity corrections.
/// Exact with ties throws InvalidArgument. Throws EmptySample.
TestResult mann_whitney_u(std::span<const double> x, std::span<const double> y,
                          MwMethod method = MwMethod::Auto);

/// Exact null pmf of U for sample sizes (m, n): pmf[u], u = 0..m·n.
std::vector<double> mann_whitney_null_pmf(std::size_t m, std::size_t n);

/// One-factor ANOVA. Constant data gives F = 0, p = 1; zero within-group spread with
/// distinct group means gives F = inf, p = 0 and degenerate = true.
/// Throws DegenerateSample for fewer than 2 groups, groups with n < 2, or N <= k.
TestResult one_way_anova(const std::vector<std::vector<double>>& groups);

struct ReproducibilityResult {
  Descriptives x_sq_dev;
  Descriptives y_sq_dev;
  TestResult test;
};

/// Paired t on squared deviations from each arm's own mean.
ReproducibilityResult reproducibility_test(std::span<const double> x, std::span<const double> y);

}  // namespace biopsim::stats
