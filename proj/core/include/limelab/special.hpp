#pragma once

namespace limelab {

/// Regularized lower incomplete gamma P(a, x) = γ(a, x) / Γ(a).
/// Series expansion for x < a + 1, Lentz continued fraction otherwise;
/// absolute accuracy around 1e-14 for a in the ranges used here.
double gamma_p(double a, double x);

/// Inverse of gamma_p in x: returns x with P(a, x) = p, by bisection to
/// 1e-12 relative width. Throws on non-convergence.
double gamma_p_inv(double a, double p);

}  // namespace limelab
