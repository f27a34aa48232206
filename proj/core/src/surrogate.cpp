#include "limelab/surrogate.hpp"

#include "limelab/common.hpp"
#include "limelab/explain.hpp"

namespace limelab {

void LinearSurrogate::fit(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                          const Eigen::VectorXd& w) {
  if (X.rows() != y.size() || X.rows() != w.size())
    throw Error("LinearSurrogate::fit: X, y, w row counts disagree");
  if (X.rows() < 1) throw Error("LinearSurrogate::fit: empty input");
  if (!X.allFinite() || !y.allFinite() || !w.allFinite())
    throw Error("LinearSurrogate::fit: non-finite input");
  if (w.minCoeff() < 0.0) throw Error("LinearSurrogate::fit: negative weight");
  const double wsum = w.sum();
  if (wsum <= 0.0) throw Error("LinearSurrogate::fit: weights are all zero");

  const Eigen::Index n = X.rows();
  const Eigen::Index p = X.cols();
  const Eigen::VectorXd wn = w * (static_cast<double>(n) / wsum);

  // Augmented design [1 X]; ridge on every coordinate except the intercept.
  Eigen::MatrixXd A(p + 1, p + 1);
  Eigen::VectorXd b(p + 1);
  const Eigen::MatrixXd WX = wn.asDiagonal() * X;
  A(0, 0) = wn.sum();
  A.block(0, 1, 1, p) = WX.colwise().sum();
  A.block(1, 0, p, 1) = A.block(0, 1, 1, p).transpose();
  A.block(1, 1, p, p).noalias() = X.transpose() * WX;
  A.block(1, 1, p, p).diagonal().array() += lambda_;
  b[0] = (wn.array() * y.array()).sum();
  b.tail(p).noalias() = WX.transpose() * y;

  Eigen::LDLT<Eigen::MatrixXd> ldlt(A);
  const Eigen::VectorXd beta = ldlt.solve(b);
  if (!beta.allFinite())
    throw Error("LinearSurrogate::fit: singular normal equations (degenerate X at lambda 0)");
  intercept_ = beta[0];
  coefficients_ = beta.tail(p);
  fitted_ = true;
}

Eigen::VectorXd LinearSurrogate::predict(const Eigen::MatrixXd& X) const {
  if (!fitted_) throw Error("LinearSurrogate::predict: not fitted");
  if (X.cols() != coefficients_.size())
    throw Error("LinearSurrogate::predict: dimension mismatch");
  return (X * coefficients_).array() + intercept_;
}

Eigen::VectorXd LinearSurrogate::attribution(const Eigen::VectorXd&) const {
  if (!fitted_) throw Error("LinearSurrogate::attribution: not fitted");
  return coefficients_;
}

void MarsSurrogate::fit(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                        const Eigen::VectorXd& w) {
  model_ = mars::fit_mars(X, y, w, cfg_);
}

Eigen::VectorXd MarsSurrogate::predict(const Eigen::MatrixXd& X) const {
  if (!model_) throw Error("MarsSurrogate::predict: not fitted");
  return model_->predict(X);
}

Eigen::VectorXd MarsSurrogate::attribution(const Eigen::VectorXd& x) const {
  if (!model_) throw Error("MarsSurrogate::attribution: not fitted");
  return attribution_mars(*model_, x);
}

const mars::MarsModel& MarsSurrogate::model() const {
  if (!model_) throw Error("MarsSurrogate::model: not fitted");
  return *model_;
}

LinearSurrogate fit_weighted_linear(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                                    const Eigen::VectorXd& w, double lambda) {
  LinearSurrogate s(lambda);
  s.fit(X, y, w);
  return s;
}

Eigen::VectorXd attribution_linear(const LinearSurrogate& s, const Eigen::VectorXd& x) {
  return s.attribution(x);
}

}  // namespace limelab
