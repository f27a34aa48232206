#include "limelab/sampling.hpp"

#include <cmath>

#include "limelab/common.hpp"
#include "limelab/special.hpp"

namespace limelab {

double Kernel::weight(double d) const {
  return std::exp(-(d * d) / (sigma * sigma));
}

double kernel_weight(const Kernel& k, double d) {
  if (!(d >= 0.0) || !std::isfinite(d)) throw Error("kernel_weight: distance must be finite and >= 0");
  return k.weight(d);
}

std::string to_string(RadialLaw law) {
  return law == RadialLaw::uniform_ball ? "uniform" : "kernel-matched";
}

RadialLaw radial_law_from_string(const std::string& s) {
  if (s == "uniform" || s == "uniform-in-ball") return RadialLaw::uniform_ball;
  if (s == "kernel-matched" || s == "kernel_matched") return RadialLaw::kernel_matched;
  throw Error("unknown radial law '" + s + "' (expected 'uniform' or 'kernel-matched')");
}

double compute_rmax(const Kernel& k, double p_mass, int dim) {
  if (!(p_mass > 0.0 && p_mass < 1.0)) throw Error("compute_rmax: p_mass must lie in (0, 1)");
  if (dim < 1) throw Error("compute_rmax: dim must be >= 1");
  if (!(k.sigma > 0.0)) throw Error("compute_rmax: sigma must be positive");
  // With t = r^2 / sigma^2 the radial measure k(r) r^(dim-1) dr becomes a
  // Gamma(dim/2) density in t, so the quantile is an incomplete-gamma inverse.
  const double t = gamma_p_inv(0.5 * static_cast<double>(dim), p_mass);
  return k.sigma * std::sqrt(t);
}

namespace {

// Fills `dir` with a uniformly distributed unit vector.
void draw_unit_direction(Eigen::VectorXd& dir, RngStream& rng) {
  const int p = static_cast<int>(dir.size());
  for (int attempt = 0; attempt < 64; ++attempt) {
    for (int j = 0; j < p; ++j) dir[j] = rng.normal();
    const double norm = dir.norm();
    if (norm >= 1e-300) {
      dir /= norm;
      return;
    }
  }
  throw Error("sample_nball: degenerate direction vector after bounded retries");
}

// Inverse CDF of the radial law with density proportional to
// r^(p-1) exp(-r^2/sigma^2) truncated at r_max, evaluated at u in [0, 1).
// Bisection on t = r^2 / sigma^2 against the regularized incomplete gamma.
double kernel_matched_radius(double u, double a, double sigma, double t_max, double mass_max) {
  const double target = u * mass_max;
  double lo = 0.0;
  double hi = t_max;
  for (int i = 0; i < 80; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (gamma_p(a, mid) < target)
      lo = mid;
    else
      hi = mid;
  }
  return sigma * std::sqrt(0.5 * (lo + hi));
}

}  // namespace

SampleBatch sample_nball(const BallSpec& spec, const Kernel& k, int n, RngStream& rng) {
  if (n < 1) throw Error("sample_nball: n must be >= 1");
  if (!(spec.r_max > 0.0)) throw Error("sample_nball: r_max must be positive");
  const int p = static_cast<int>(spec.center.size());
  if (p < 1) throw Error("sample_nball: center must be non-empty");

  SampleBatch batch;
  batch.points.resize(n, p);
  batch.distances.resize(n);
  batch.weights.resize(n);

  const double a = 0.5 * static_cast<double>(p);
  const double t_max = (spec.r_max * spec.r_max) / (k.sigma * k.sigma);
  const double mass_max = (spec.law == RadialLaw::kernel_matched) ? gamma_p(a, t_max) : 0.0;

  Eigen::VectorXd dir(p);
  for (int i = 0; i < n; ++i) {
    draw_unit_direction(dir, rng);
    const double u = rng.uniform();
    double r;
    if (spec.law == RadialLaw::uniform_ball) {
      r = spec.r_max * std::pow(u, 1.0 / static_cast<double>(p));
    } else {
      r = kernel_matched_radius(u, a, k.sigma, t_max, mass_max);
    }
    batch.points.row(i) = (spec.center + r * dir).transpose();
    batch.distances[i] = r;
    batch.weights[i] = k.weight(r);
  }
  return batch;
}

SampleBatch sample_gaussian(const Eigen::VectorXd& center, int n, RngStream& rng,
                            const Kernel& k) {
  if (n < 1) throw Error("sample_gaussian: n must be >= 1");
  const int p = static_cast<int>(center.size());
  SampleBatch batch;
  batch.points.resize(n, p);
  batch.distances.resize(n);
  batch.weights.resize(n);
  for (int i = 0; i < n; ++i) {
    double sq = 0.0;
    for (int j = 0; j < p; ++j) {
      const double z = rng.normal();
      batch.points(i, j) = center[j] + z;
      sq += z * z;
    }
    batch.distances[i] = std::sqrt(sq);
    batch.weights[i] = k.weight(batch.distances[i]);
  }
  return batch;
}

Eigen::VectorXd stable_relative_weights(const Eigen::VectorXd& distances, const Kernel& k) {
  if (distances.size() == 0) return Eigen::VectorXd();
  const double min_sq = distances.array().square().minCoeff();
  const double inv_s2 = 1.0 / (k.sigma * k.sigma);
  return (-(distances.array().square() - min_sq) * inv_s2).exp().matrix();
}

}  // namespace limelab
