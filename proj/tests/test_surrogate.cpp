#include <doctest.h>

#include <cmath>
#include <limits>

#include "limelab/common.hpp"
#include "limelab/rng.hpp"
#include "limelab/surrogate.hpp"

using namespace limelab;

namespace {

// OLS oracle on the augmented design, solved by QR.
Eigen::VectorXd ols_oracle(const Eigen::MatrixXd& X, const Eigen::VectorXd& y) {
  Eigen::MatrixXd A(X.rows(), X.cols() + 1);
  A.col(0).setOnes();
  A.rightCols(X.cols()) = X;
  return A.colPivHouseholderQr().solve(y);
}

}  // namespace

TEST_SUITE("surrogate") {

TEST_CASE("noiseless line is recovered exactly") {
  Eigen::MatrixXd X(6, 1);
  X << -3, -1, 0, 1, 2, 5;
  const Eigen::VectorXd y = 2.0 * X.col(0).array() + 1.0;
  const LinearSurrogate s = fit_weighted_linear(X, y, Eigen::VectorXd::Ones(6), 0.0);
  CHECK(s.intercept() == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(s.coefficients()[0] == doctest::Approx(2.0).epsilon(1e-9));
  CHECK(s.predict(X)[5] == doctest::Approx(11.0).epsilon(1e-9));
}

TEST_CASE("intercept-only fit with all weight on one point") {
  Eigen::MatrixXd X(4, 0);
  Eigen::VectorXd y(4);
  y << 10, 0, 0, 0;
  Eigen::VectorXd w = Eigen::VectorXd::Zero(4);
  w[0] = 5.0;
  const LinearSurrogate s = fit_weighted_linear(X, y, w, 0.0);
  CHECK(s.intercept() == doctest::Approx(10.0).epsilon(1e-12));
  CHECK(s.coefficients().size() == 0);
}

TEST_CASE("equal weights match the OLS oracle") {
  RngStream rng(7);
  Eigen::MatrixXd X(40, 3);
  Eigen::VectorXd y(40);
  for (int i = 0; i < 40; ++i) {
    for (int j = 0; j < 3; ++j) X(i, j) = rng.normal();
    y[i] = 0.3 * X(i, 0) - 1.2 * X(i, 2) + 0.5 + 0.1 * rng.normal();
  }
  const LinearSurrogate s = fit_weighted_linear(X, y, Eigen::VectorXd::Constant(40, 2.0), 0.0);
  const Eigen::VectorXd beta = ols_oracle(X, y);
  CHECK(s.intercept() == doctest::Approx(beta[0]).epsilon(1e-9));
  for (int j = 0; j < 3; ++j)
    CHECK(s.coefficients()[j] == doctest::Approx(beta[j + 1]).epsilon(1e-9));
}

TEST_CASE("fits are invariant under positive weight rescaling") {
  RngStream rng(11);
  Eigen::MatrixXd X(30, 2);
  Eigen::VectorXd y(30), w(30);
  for (int i = 0; i < 30; ++i) {
    X(i, 0) = rng.normal();
    X(i, 1) = rng.normal();
    y[i] = X(i, 0) - 0.5 * X(i, 1) + 0.2 * rng.normal();
    w[i] = 0.1 + rng.uniform();
  }
  const LinearSurrogate a = fit_weighted_linear(X, y, w, 1e-3);
  const LinearSurrogate b = fit_weighted_linear(X, y, 1000.0 * w, 1e-3);
  CHECK(a.intercept() == doctest::Approx(b.intercept()).epsilon(1e-9));
  for (int j = 0; j < 2; ++j)
    CHECK(a.coefficients()[j] == doctest::Approx(b.coefficients()[j]).epsilon(1e-9));
}

TEST_CASE("increasing lambda never grows the coefficient norm") {
  RngStream rng(13);
  Eigen::MatrixXd X(50, 4);
  Eigen::VectorXd y(50);
  for (int i = 0; i < 50; ++i) {
    for (int j = 0; j < 4; ++j) X(i, j) = rng.normal();
    y[i] = X(i, 0) + 2.0 * X(i, 1) - X(i, 3) + 0.3 * rng.normal();
  }
  double prev = std::numeric_limits<double>::infinity();
  for (double lambda : {0.0, 1e-3, 1e-1, 1.0, 10.0, 100.0}) {
    const LinearSurrogate s = fit_weighted_linear(X, y, Eigen::VectorXd::Ones(50), lambda);
    const double norm = s.coefficients().norm();
    CHECK(norm <= prev + 1e-12);
    prev = norm;
  }
}

TEST_CASE("attribution is the coefficient vector") {
  RngStream rng(17);
  Eigen::MatrixXd X(60, 2);
  Eigen::VectorXd y(60);
  for (int i = 0; i < 60; ++i) {
    X(i, 0) = rng.normal();
    X(i, 1) = rng.normal();
    y[i] = 3.0 * X(i, 0) - X(i, 1);
  }
  const LinearSurrogate s = fit_weighted_linear(X, y, Eigen::VectorXd::Ones(60), 0.0);
  const Eigen::VectorXd attr = attribution_linear(s, Eigen::VectorXd::Zero(2));
  CHECK(attr[0] == doctest::Approx(3.0).epsilon(1e-9));
  CHECK(attr[1] == doctest::Approx(-1.0).epsilon(1e-9));
  // Independent of the query point.
  CHECK(attribution_linear(s, Eigen::VectorXd::Ones(2)) == attr);

  const LinearSurrogate zero = fit_weighted_linear(X, Eigen::VectorXd::Zero(60),
                                                   Eigen::VectorXd::Ones(60), 1e-3);
  CHECK(zero.attribution(Eigen::VectorXd::Zero(2)).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("error paths") {
  Eigen::MatrixXd X(3, 1);
  X << 1, 2, 3;
  Eigen::VectorXd y(3);
  y << 1, 2, 3;
  CHECK_THROWS_AS(fit_weighted_linear(X, y, Eigen::VectorXd::Zero(3), 0.0), Error);
  Eigen::VectorXd w(3);
  w << 1, 1, -2;
  CHECK_THROWS_AS(fit_weighted_linear(X, y, w, 0.0), Error);
  LinearSurrogate unfitted(0.0);
  CHECK_THROWS_AS(unfitted.predict(X), Error);
  CHECK_THROWS_AS(unfitted.attribution(Eigen::VectorXd::Zero(1)), Error);
}

}  // TEST_SUITE
