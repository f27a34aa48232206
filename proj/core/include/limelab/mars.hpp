#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

namespace limelab {
namespace mars {

enum class HingeDir { plus, minus };

/// One hinge factor: (x_f - t)+ or (t - x_f)+.
struct Hinge {
  int feature = 0;
  double knot = 0.0;
  HingeDir dir = HingeDir::plus;

  double eval(double x) const {
    const double v = dir == HingeDir::plus ? x - knot : knot - x;
    return v > 0.0 ? v : 0.0;
  }

  /// Right-derivative with respect to x (the convention at the knot itself).
  double deriv_right(double x) const {
    if (dir == HingeDir::plus) return x >= knot ? 1.0 : 0.0;
    return x < knot ? -1.0 : 0.0;
  }

  bool operator==(const Hinge& o) const {
    return feature == o.feature && knot == o.knot && dir == o.dir;
  }
};

/// Product of hinge factors; an empty factor list is the intercept term.
/// Factors never repeat a feature and never exceed the configured degree.
struct BasisTerm {
  std::vector<Hinge> factors;

  int degree() const { return static_cast<int>(factors.size()); }
  bool is_intercept() const { return factors.empty(); }

  bool uses_feature(int j) const {
    for (const auto& h : factors)
      if (h.feature == j) return true;
    return false;
  }

  double eval(const Eigen::VectorXd& x) const {
    double v = 1.0;
    for (const auto& h : factors) v *= h.eval(x[h.feature]);
    return v;
  }

  double eval_row(const Eigen::MatrixXd& X, Eigen::Index i) const {
    double v = 1.0;
    for (const auto& h : factors) v *= h.eval(X(i, h.feature));
    return v;
  }
};

/// Evaluates a basis term at a point (intercept evaluates to 1).
double eval_basis(const BasisTerm& term, const Eigen::VectorXd& x);

/// Fit controls. knot_subsample == 0 uses every observed value as a knot
/// candidate; otherwise features with more observations than the budget
/// use an evenly spaced subsample of the sorted observed values.
struct FitConfig {
  int max_terms = 21;       // total basis terms including the intercept
  int max_degree = 2;       // max hinge factors per term
  double gcv_penalty = 3.0; // cost d per distinct hinge factor
  double min_rss_improvement = 1e-8;
  int knot_subsample = 1000;
  // Normal-equation diagonal floor, applied as ridge * max(1, largest Gram
  // diagonal) so it tracks the basis scale.
  double ridge = 1e-10;

  // Knot eligibility spans (Friedman's minspan/endspan rules): a knot needs
  // `endspan` parent-support observations strictly on each side, and
  // consecutive eligible knots are at least `minspan` support observations
  // apart. 0 disables a rule; -1 derives the value from the data
  // (alpha = 0.05). These suppress high-variance hinges anchored on a few
  // boundary points.
  int minspan = 0;
  int endspan = 0;

  /// Defaults scaled to dimensionality: max_terms = max(21, 2p + 1);
  /// penalty 3 at degree 2, 2 for additive (degree 1) models; automatic
  /// knot spans.
  static FitConfig defaults_for(int p, int degree = 2);
};

/// Fitted model: ordered terms (intercept first) with one coefficient each.
/// Weights are normalized to mean 1 before fitting, so the stored RSS and
/// GCV are invariant under positive rescaling of the weight vector.
struct MarsModel {
  std::vector<BasisTerm> terms;
  Eigen::VectorXd coefficients;
  double gcv = 0.0;
  double effective_params = 0.0;
  double rss = 0.0;
  int n_features = 0;
  Eigen::Index n_train = 0;

  // Training diagnostics.
  std::vector<double> forward_rss;  // RSS after each added pair (front = intercept-only)
  int terms_added = 0;
  int terms_pruned = 0;

  Eigen::VectorXd predict(const Eigen::MatrixXd& X) const;
  double predict_one(const Eigen::VectorXd& x) const;

  /// Human-readable dump, one full-precision line per term.
  std::string dump() const;
};

/// GCV = (rss/n) / (1 - effective_params/n)^2; +inf once the penalty
/// reaches n (such a candidate is never selected).
double gcv_score(double rss, Eigen::Index n, double effective_params);

/// effective_params = #terms + d * #distinct hinge factors across
/// non-intercept terms.
double effective_params_of(const std::vector<BasisTerm>& terms, double gcv_penalty);

/// Forward pass: greedily adds mirrored hinge pairs (both (x-t)+ and
/// (t-x)+ children of an existing parent term) minimizing weighted RSS,
/// refitting all coefficients by ridge-floored normal equations at each
/// step. Stops at max_terms or when the relative RSS improvement of the
/// best candidate falls below min_rss_improvement.
MarsModel fit_forward(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                      const Eigen::VectorXd& w, const FitConfig& cfg);

/// Backward pass: repeatedly deletes the non-intercept term whose removal
/// minimizes GCV (with coefficient refits), then returns the submodel with
/// the lowest GCV seen along the deletion path (the input model included).
MarsModel prune_backward(const MarsModel& model, const Eigen::MatrixXd& X,
                         const Eigen::VectorXd& y, const Eigen::VectorXd& w,
                         const FitConfig& cfg);

/// Forward pass followed by backward pruning.
MarsModel fit_mars(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                   const Eigen::VectorXd& w, const FitConfig& cfg);

}  // namespace mars
}  // namespace limelab
