#include <cmath>

#include "limelab/blackbox.hpp"
#include "limelab/common.hpp"

namespace limelab {

GnbModel fit_gnb(const Dataset& ds, double epsilon) {
  if (!(epsilon > 0.0)) throw Error("fit_gnb: epsilon must be positive");
  const Eigen::Index n = ds.n_rows();
  const Eigen::Index p = ds.p();
  const int n_classes = ds.n_classes;

  GnbModel model;
  model.priors_ = Eigen::VectorXd::Zero(n_classes);
  model.means_ = Eigen::MatrixXd::Zero(n_classes, p);
  model.vars_ = Eigen::MatrixXd::Zero(n_classes, p);

  std::vector<Eigen::Index> counts(static_cast<std::size_t>(n_classes), 0);
  for (Eigen::Index i = 0; i < n; ++i) {
    const int c = ds.labels[static_cast<std::size_t>(i)];
    ++counts[static_cast<std::size_t>(c)];
    model.means_.row(c) += ds.features.row(i);
  }
  for (int c = 0; c < n_classes; ++c) {
    if (counts[static_cast<std::size_t>(c)] == 0)
      throw Error("fit_gnb: class " + std::to_string(c) + " has no samples");
    model.means_.row(c) /= static_cast<double>(counts[static_cast<std::size_t>(c)]);
    model.priors_[c] =
        static_cast<double>(counts[static_cast<std::size_t>(c)]) / static_cast<double>(n);
  }
  for (Eigen::Index i = 0; i < n; ++i) {
    const int c = ds.labels[static_cast<std::size_t>(i)];
    model.vars_.row(c) +=
        (ds.features.row(i) - model.means_.row(c)).array().square().matrix();
  }
  for (int c = 0; c < n_classes; ++c)
    model.vars_.row(c) /= static_cast<double>(counts[static_cast<std::size_t>(c)]);

  // Smoothing floor: epsilon times the largest per-feature variance of the
  // whole training set (features are z-scores, so this is ~epsilon).
  double max_var = 0.0;
  for (Eigen::Index j = 0; j < p; ++j) {
    const double mean = ds.features.col(j).mean();
    const double var =
        (ds.features.col(j).array() - mean).square().sum() / static_cast<double>(n);
    max_var = std::max(max_var, var);
  }
  model.epsilon_ = std::max(epsilon * max_var, 1e-300);
  model.vars_ = model.vars_.cwiseMax(model.epsilon_);
  return model;
}

Eigen::MatrixXd GnbModel::predict_proba(const Eigen::MatrixXd& X) const {
  if (X.cols() != n_features())
    throw Error("GnbModel::predict_proba: expected " + std::to_string(n_features()) +
                " features, got " + std::to_string(X.cols()));
  const int C = n_classes();
  Eigen::MatrixXd out(X.rows(), C);
  Eigen::VectorXd log_post(C);
  for (Eigen::Index i = 0; i < X.rows(); ++i) {
    for (int c = 0; c < C; ++c) {
      double ll = std::log(priors_[c]);
      for (Eigen::Index j = 0; j < X.cols(); ++j) {
        const double d = X(i, j) - means_(c, j);
        ll -= 0.5 * (std::log(2.0 * M_PI * vars_(c, j)) + d * d / vars_(c, j));
      }
      log_post[c] = ll;
    }
    const double m = log_post.maxCoeff();
    const Eigen::VectorXd e = (log_post.array() - m).exp();
    out.row(i) = (e / e.sum()).transpose();
  }
  return out;
}

}  // namespace limelab
