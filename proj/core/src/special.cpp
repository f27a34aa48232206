#include "limelab/special.hpp"

#include <cmath>
#include <limits>

#include "limelab/common.hpp"

namespace limelab {

namespace {

constexpr int kMaxIter = 500;
constexpr double kEps = 1e-16;

// Series representation, valid and fast for x < a + 1.
double gamma_p_series(double a, double x) {
  double ap = a;
  double sum = 1.0 / a;
  double del = sum;
  for (int i = 0; i < kMaxIter; ++i) {
    ap += 1.0;
    del *= x / ap;
    sum += del;
    if (std::fabs(del) < std::fabs(sum) * kEps) break;
  }
  return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

// Modified Lentz continued fraction for Q(a, x), valid for x >= a + 1.
double gamma_q_cf(double a, double x) {
  const double tiny = std::numeric_limits<double>::min() / kEps;
  double b = x + 1.0 - a;
  double c = 1.0 / tiny;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i <= kMaxIter; ++i) {
    const double an = -static_cast<double>(i) * (static_cast<double>(i) - a);
    b += 2.0;
    d = an * d + b;
    if (std::fabs(d) < tiny) d = tiny;
    c = b + an / c;
    if (std::fabs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double delta = d * c;
    h *= delta;
    if (std::fabs(delta - 1.0) < kEps) break;
  }
  return h * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

}  // namespace

double gamma_p(double a, double x) {
  if (!(a > 0.0)) throw Error("gamma_p: a must be positive");
  if (x <= 0.0) return 0.0;
  if (x < a + 1.0) return gamma_p_series(a, x);
  return 1.0 - gamma_q_cf(a, x);
}

double gamma_p_inv(double a, double p) {
  if (!(a > 0.0)) throw Error("gamma_p_inv: a must be positive");
  if (!(p > 0.0 && p < 1.0)) throw Error("gamma_p_inv: p must lie in (0, 1)");

  // Bracket the root, then bisect. P(a, .) is strictly increasing.
  double lo = 0.0;
  double hi = a + 1.0;
  int grow = 0;
  while (gamma_p(a, hi) < p) {
    hi *= 2.0;
    if (++grow > 300) throw Error("gamma_p_inv: failed to bracket root");
  }
  for (int i = 0; i < 2000; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (gamma_p(a, mid) < p)
      lo = mid;
    else
      hi = mid;
    if (hi - lo <= 1e-12 * hi) return 0.5 * (lo + hi);
  }
  throw Error("gamma_p_inv: bisection iteration limit exceeded");
}

}  // namespace limelab
