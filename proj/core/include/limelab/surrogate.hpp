#pragma once

#include <Eigen/Dense>
#include <optional>
#include <string>

#include "limelab/mars.hpp"

namespace limelab {

/// Common surrogate contract: fit on weighted samples, predict reals,
/// report a per-feature attribution vector.
class Surrogate {
 public:
  virtual ~Surrogate() = default;
  virtual void fit(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                   const Eigen::VectorXd& w) = 0;
  virtual Eigen::VectorXd predict(const Eigen::MatrixXd& X) const = 0;
  virtual Eigen::VectorXd attribution(const Eigen::VectorXd& x) const = 0;
  virtual std::string name() const = 0;
};

/// Ridge-regularized weighted linear model. Weights are normalized to mean 1
/// before solving, so fits are invariant under positive weight rescaling;
/// the intercept is never penalized.
class LinearSurrogate final : public Surrogate {
 public:
  explicit LinearSurrogate(double lambda = 1e-3) : lambda_(lambda) {}

  void fit(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
           const Eigen::VectorXd& w) override;
  Eigen::VectorXd predict(const Eigen::MatrixXd& X) const override;
  Eigen::VectorXd attribution(const Eigen::VectorXd& x) const override;
  std::string name() const override { return "linear"; }

  double intercept() const { return intercept_; }
  const Eigen::VectorXd& coefficients() const { return coefficients_; }
  double lambda() const { return lambda_; }

 private:
  double lambda_;
  double intercept_ = 0.0;
  Eigen::VectorXd coefficients_;
  bool fitted_ = false;
};

/// Piecewise-linear surrogate backed by a fitted hinge-basis model; its
/// attribution is the model gradient at the query point.
class MarsSurrogate final : public Surrogate {
 public:
  explicit MarsSurrogate(mars::FitConfig cfg) : cfg_(cfg) {}

  void fit(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
           const Eigen::VectorXd& w) override;
  Eigen::VectorXd predict(const Eigen::MatrixXd& X) const override;
  Eigen::VectorXd attribution(const Eigen::VectorXd& x) const override;
  std::string name() const override { return "mars"; }

  const mars::MarsModel& model() const;

 private:
  mars::FitConfig cfg_;
  std::optional<mars::MarsModel> model_;
};

/// Minimizes sum_i w_i (y_i - b0 - b.x_i)^2 + lambda * |b|^2 by normal
/// equations (weights normalized to mean 1, intercept unpenalized).
LinearSurrogate fit_weighted_linear(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                                    const Eigen::VectorXd& w, double lambda);

/// The coefficient vector; independent of x for a linear model.
Eigen::VectorXd attribution_linear(const LinearSurrogate& s, const Eigen::VectorXd& x);

}  // namespace limelab
