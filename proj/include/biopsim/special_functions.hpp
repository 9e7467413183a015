#pragma once

namespace biopsim::special {

/// Regularised incomplete beta I_x(a, b), continued-fraction evaluation
/// (modified Lentz), absolute accuracy ~1e-14 for moderate a, b.
double incomplete_beta(double a, double b, double x);

/// Two-sided p-value P(|T| >= |t|) for Student's t with df degrees of freedom.
double student_t_two_sided(double t, double df);
double student_t_cdf(double t, double df);

/// Upper tail P(F >= f) for the F(d1, d2) distribution.
double f_upper_tail(double f, double d1, double d2);

double normal_cdf(double z);
/// P(|Z| >= |z|).
double normal_two_sided(double z);

}  // namespace biopsim::special
