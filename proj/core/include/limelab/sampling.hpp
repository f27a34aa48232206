#pragma once

#include <Eigen/Dense>
#include <string>

#include "limelab/rng.hpp"

namespace limelab {

/// Distance kernel k(d) = exp(-d^2 / sigma^2). Weight is 1 at the
/// instance and strictly decreasing in distance.
struct Kernel {
  double sigma = 1.0;

  double weight(double d) const;
};

/// Radial law for ball sampling: uniform density over the ball, or radius
/// matched to the kernel-induced measure k(r) * r^(p-1) dr.
enum class RadialLaw { uniform_ball, kernel_matched };

std::string to_string(RadialLaw law);
RadialLaw radial_law_from_string(const std::string& s);

/// A sampling region: ball of radius r_max around a center point.
struct BallSpec {
  Eigen::VectorXd center;
  double r_max = 0.0;
  RadialLaw law = RadialLaw::kernel_matched;
};

/// A batch of perturbation samples with distances to the center and
/// kernel weights.
struct SampleBatch {
  Eigen::MatrixXd points;     // n x p
  Eigen::VectorXd distances;  // Euclidean distance to center
  Eigen::VectorXd weights;    // kernel weight of each distance
};

/// kernel_weight(d) for d >= 0; see Kernel.
double kernel_weight(const Kernel& k, double d);

/// Radius enclosing fraction p_mass of the kernel-induced radial measure
/// k(r) * r^(dim-1) dr. For the Gaussian kernel this is
/// sigma * sqrt(Ginv(dim/2, p_mass)) with Ginv the inverse regularized
/// lower incomplete gamma, found by bisection.
double compute_rmax(const Kernel& k, double p_mass, int dim);

/// Draws n points inside the ball: directions from normalized standard
/// normal vectors, radius from the declared radial law (uniform:
/// r_max * U^(1/p); kernel-matched: inverse CDF of the truncated
/// kernel-induced radial measure).
SampleBatch sample_nball(const BallSpec& spec, const Kernel& k, int n, RngStream& rng);

/// Draws n points from center + standard normal noise (unit variance per
/// coordinate in standardized space); weights from the kernel, no radius
/// truncation.
SampleBatch sample_gaussian(const Eigen::VectorXd& center, int n, RngStream& rng,
                            const Kernel& k);

/// Kernel weights rescaled by the largest one: exp(-(d_i^2 - min d^2) / sigma^2).
/// Identical to kernel weights up to a positive factor, but immune to
/// underflow when all distances are many sigma out. Weighted fits are
/// invariant under positive weight scaling, so these are safe drop-ins.
Eigen::VectorXd stable_relative_weights(const Eigen::VectorXd& distances, const Kernel& k);

}  // namespace limelab
