#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>

#include "limelab/blackbox.hpp"
#include "limelab/dataset.hpp"
#include "limelab/mars.hpp"
#include "limelab/sampling.hpp"
#include "limelab/surrogate.hpp"

namespace limelab {

enum class Method { lime, lemon, mlime };

std::string to_string(Method m);
Method method_from_string(const std::string& s);

struct ExplainerConfig {
  Method method = Method::mlime;
  double sigma = 1.0;
  int n_train_samples = 5000;
  double rmax_p = 0.999;
  RadialLaw train_radial_law = RadialLaw::kernel_matched;
  double ridge_lambda = 1e-3;                // linear methods
  std::optional<mars::FitConfig> mars_cfg;   // mlime; defaults_for(p) if unset
  std::uint64_t rng_seed = 0;
};

/// Result of explaining one instance: the fitted surrogate, the attribution
/// vector (linear coefficients, or the piecewise-linear model's gradient at
/// the instance), and the sampling geometry that produced it.
struct Explanation {
  Eigen::Index instance_index = 0;
  Method method = Method::lime;
  Eigen::VectorXd attribution;
  std::shared_ptr<Surrogate> surrogate;
  int target_class = 0;
  double r_max_used = 0.0;  // 0 for untruncated (gaussian) training sampling
  int n_samples_used = 0;
  std::uint64_t seed = 0;
};

/// Full pipeline for one instance: pick the target class (argmax probability
/// at the instance, lowest index on ties), draw training samples (gaussian +
/// kernel weights for lime; kernel-matched ball + unit weights for
/// lemon/mlime), label them with the black-box probability of the target
/// class, fit the surrogate, and read off the attribution.
Explanation explain_instance(const Dataset& ds, const BlackBoxModel& model,
                             Eigen::Index idx, const ExplainerConfig& cfg);

/// Gradient of the piecewise-linear model at x, using the right-derivative
/// convention at knots.
Eigen::VectorXd attribution_mars(const mars::MarsModel& m, const Eigen::VectorXd& x);

/// Text report: per-feature attributions with original names and units,
/// plus the term dump for piecewise-linear surrogates.
std::string render_report(const Dataset& ds, const Explanation& expl);

}  // namespace limelab
