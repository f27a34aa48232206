#include <doctest.h>

#include <cmath>
#include <limits>
#include <vector>

#include "limelab/common.hpp"
#include "limelab/mars.hpp"
#include "limelab/rng.hpp"

using namespace limelab;
using namespace limelab::mars;

namespace {

// Oracle: ridge-floored weighted least squares on an explicit term basis,
// solved through a QR route independent of the fitter's Cholesky updates.
struct DirectFit {
  Eigen::VectorXd beta;
  double rss = 0.0;
};

DirectFit direct_refit(const std::vector<BasisTerm>& terms, const Eigen::MatrixXd& X,
                       const Eigen::VectorXd& y, const Eigen::VectorXd& w, double ridge) {
  const Eigen::Index n = X.rows();
  const Eigen::Index m = static_cast<Eigen::Index>(terms.size());
  const Eigen::VectorXd wn = w * (static_cast<double>(n) / w.sum());
  Eigen::MatrixXd B(n, m);
  for (Eigen::Index q = 0; q < m; ++q)
    for (Eigen::Index i = 0; i < n; ++i)
      B(i, q) = terms[static_cast<std::size_t>(q)].eval_row(X, i);
  // Scale-aware floor, as documented for FitConfig::ridge.
  const Eigen::MatrixXd WB = wn.asDiagonal() * B;
  const double lambda =
      ridge * std::max(1.0, (B.transpose() * WB).diagonal().maxCoeff());
  // Augmented least squares encodes the ridge exactly.
  Eigen::MatrixXd A(n + m, m);
  Eigen::VectorXd b = Eigen::VectorXd::Zero(n + m);
  A.topRows(n) = wn.cwiseSqrt().asDiagonal() * B;
  A.bottomRows(m) = std::sqrt(lambda) * Eigen::MatrixXd::Identity(m, m);
  b.head(n) = wn.cwiseSqrt().asDiagonal() * y;
  DirectFit fit;
  fit.beta = A.colPivHouseholderQr().solve(b);
  const Eigen::VectorXd resid = y - B * fit.beta;
  fit.rss = resid.dot((wn.array() * resid.array()).matrix());
  return fit;
}

Eigen::MatrixXd grid_1d(int n, double lo, double hi) {
  Eigen::MatrixXd X(n, 1);
  for (int i = 0; i < n; ++i)
    X(i, 0) = lo + (hi - lo) * static_cast<double>(i) / (n - 1.0);
  return X;
}

FitConfig plain_config(int max_terms, int degree = 1) {
  FitConfig cfg;
  cfg.max_terms = max_terms;
  cfg.max_degree = degree;
  cfg.knot_subsample = 0;
  return cfg;
}

}  // namespace

TEST_SUITE("mars") {

TEST_CASE("eval_basis hand cases") {
  Eigen::VectorXd x(2);
  x << 2.0, 0.25;

  BasisTerm plus;
  plus.factors.push_back(Hinge{0, 1.0, HingeDir::plus});
  CHECK(eval_basis(plus, (Eigen::VectorXd(2) << 2.0, 0.0).finished()) == 1.0);
  CHECK(eval_basis(plus, (Eigen::VectorXd(2) << 0.5, 0.0).finished()) == 0.0);

  BasisTerm minus;
  minus.factors.push_back(Hinge{0, 1.0, HingeDir::minus});
  CHECK(eval_basis(minus, (Eigen::VectorXd(2) << 0.5, 0.0).finished()) == 0.5);

  BasisTerm product;
  product.factors.push_back(Hinge{0, 0.0, HingeDir::plus});
  product.factors.push_back(Hinge{1, 1.0, HingeDir::minus});
  CHECK(eval_basis(product, x) == doctest::Approx(1.5).epsilon(1e-15));

  CHECK(eval_basis(BasisTerm{}, x) == 1.0);  // intercept

  Eigen::VectorXd bad(2);
  bad << 1.0, std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(eval_basis(plus, bad), Error);
}

TEST_CASE("forward pass recovers a single-hinge generator exactly") {
  const int n = 50;
  const Eigen::MatrixXd X = grid_1d(n, 0.0, 1.0);
  Eigen::VectorXd y(n);
  for (int i = 0; i < n; ++i) y[i] = 3.0 + 2.0 * std::max(X(i, 0) - 0.5, 0.0);

  const MarsModel model = fit_forward(X, y, Eigen::VectorXd::Ones(n), plain_config(5));
  CHECK((model.predict(X) - y).cwiseAbs().maxCoeff() <= 1e-6);

  // A knot within one grid step of the true kink.
  const double step = 1.0 / (n - 1.0);
  bool found = false;
  for (const auto& term : model.terms)
    for (const auto& h : term.factors)
      if (std::fabs(h.knot - 0.5) <= step + 1e-12) found = true;
  CHECK(found);
}

TEST_CASE("forward pass recovers |x| on a symmetric grid") {
  const int n = 41;
  const Eigen::MatrixXd X = grid_1d(n, -1.0, 1.0);
  const Eigen::VectorXd y = X.col(0).cwiseAbs();
  const MarsModel model = fit_forward(X, y, Eigen::VectorXd::Ones(n), plain_config(5));
  CHECK((model.predict(X) - y).cwiseAbs().maxCoeff() <= 1e-6);
  const double step = 2.0 / (n - 1.0);
  bool knot_near_zero = false;
  for (const auto& term : model.terms)
    for (const auto& h : term.factors)
      if (std::fabs(h.knot) <= step + 1e-12) knot_near_zero = true;
  CHECK(knot_near_zero);
}

TEST_CASE("constant response adds no pairs") {
  const int n = 30;
  const Eigen::MatrixXd X = grid_1d(n, 0.0, 1.0);
  const Eigen::VectorXd y = Eigen::VectorXd::Constant(n, 0.7);
  const MarsModel model = fit_forward(X, y, Eigen::VectorXd::Ones(n), plain_config(9));
  CHECK(model.terms_added == 0);
  CHECK(model.terms.size() == 1);
  CHECK(model.coefficients[0] == doctest::Approx(0.7).epsilon(1e-9));
}

TEST_CASE("gcv_score hand values") {
  CHECK(gcv_score(2.5, 10, 3.0) == doctest::Approx(0.25 / 0.49).epsilon(1e-12));
  CHECK(gcv_score(2.5, 10, 0.0) == doctest::Approx(0.25).epsilon(1e-15));
  CHECK(gcv_score(0.0, 10, 3.0) == 0.0);
  CHECK(std::isinf(gcv_score(1.0, 10, 10.0)));
  CHECK(std::isinf(gcv_score(1.0, 10, 12.0)));
  CHECK_THROWS_AS(gcv_score(-1.0, 10, 0.0), Error);
}

TEST_CASE("effective_params counts distinct hinge factors") {
  std::vector<BasisTerm> terms(1);  // intercept
  BasisTerm t1;
  t1.factors.push_back(Hinge{0, 0.5, HingeDir::plus});
  BasisTerm t2;
  t2.factors.push_back(Hinge{0, 0.5, HingeDir::minus});
  BasisTerm t3;
  t3.factors.push_back(Hinge{0, 0.5, HingeDir::plus});  // same hinge as t1
  t3.factors.push_back(Hinge{1, 1.0, HingeDir::plus});
  terms.insert(terms.end(), {t1, t2, t3});
  // 4 terms, distinct hinges: (0,0.5,+), (0,0.5,-), (1,1,+)
  CHECK(effective_params_of(terms, 3.0) == doctest::Approx(4.0 + 9.0));
}

TEST_CASE("backward pass never worsens GCV and prunes noise terms") {
  const int n = 60;
  const Eigen::MatrixXd X = grid_1d(n, 0.0, 1.0);
  RngStream rng(5);
  Eigen::VectorXd y(n);
  for (int i = 0; i < n; ++i)
    y[i] = 3.0 + 2.0 * std::max(X(i, 0) - 0.5, 0.0) + 0.01 * rng.normal();
  const Eigen::VectorXd w = Eigen::VectorXd::Ones(n);
  const FitConfig cfg = plain_config(11);
  const MarsModel forward = fit_forward(X, y, w, cfg);
  const MarsModel pruned = prune_backward(forward, X, y, w, cfg);
  CHECK(pruned.gcv <= forward.gcv + 1e-12);
  CHECK(pruned.terms.size() <= forward.terms.size());
}

TEST_CASE("backward pass on a constant response keeps only the intercept") {
  const int n = 20;
  const Eigen::MatrixXd X = grid_1d(n, 0.0, 1.0);
  const Eigen::VectorXd y = Eigen::VectorXd::Constant(n, 0.7);
  Eigen::VectorXd w(n);
  for (int i = 0; i < n; ++i) w[i] = 1.0 + (i % 3);
  const FitConfig cfg = plain_config(7);
  const MarsModel model = fit_mars(X, y, w, cfg);
  CHECK(model.terms.size() == 1);
  CHECK(model.coefficients[0] == doctest::Approx(0.7).epsilon(1e-9));
}

TEST_CASE("backward path optimum matches an independent enumeration") {
  // Small instance: replicate the greedy deletion path with direct QR
  // refits and check the returned submodel is the path GCV minimizer.
  const int n = 12;
  const Eigen::MatrixXd X = grid_1d(n, -1.0, 1.0);
  RngStream rng(17);
  Eigen::VectorXd y(n);
  for (int i = 0; i < n; ++i)
    y[i] = 1.0 + std::max(X(i, 0) - 0.2, 0.0) - 2.0 * std::max(-0.4 - X(i, 0), 0.0) +
           0.05 * rng.normal();
  const Eigen::VectorXd w = Eigen::VectorXd::Ones(n);
  const FitConfig cfg = plain_config(7);
  const MarsModel forward = fit_forward(X, y, w, cfg);
  REQUIRE(forward.terms.size() <= 7);

  auto gcv_of = [&](const std::vector<BasisTerm>& terms) {
    const DirectFit fit = direct_refit(terms, X, y, w, cfg.ridge);
    const double c = effective_params_of(terms, cfg.gcv_penalty);
    if (c >= n) return std::numeric_limits<double>::infinity();
    const double denom = 1.0 - c / n;
    return (fit.rss / n) / (denom * denom);
  };

  std::vector<BasisTerm> current = forward.terms;
  double best_gcv = gcv_of(current);
  std::size_t best_size = current.size();
  while (current.size() > 1) {
    double step_best = std::numeric_limits<double>::infinity();
    std::size_t drop = 1;
    for (std::size_t q = 1; q < current.size(); ++q) {
      std::vector<BasisTerm> trial;
      for (std::size_t r = 0; r < current.size(); ++r)
        if (r != q) trial.push_back(current[r]);
      const double g = gcv_of(trial);
      if (g < step_best) {
        step_best = g;
        drop = q;
      }
    }
    current.erase(current.begin() + static_cast<std::ptrdiff_t>(drop));
    if (step_best < best_gcv) {
      best_gcv = step_best;
      best_size = current.size();
    }
  }

  const MarsModel pruned = prune_backward(forward, X, y, w, cfg);
  CHECK(pruned.terms.size() == best_size);
  CHECK(pruned.gcv == doctest::Approx(best_gcv).epsilon(1e-9));
}

TEST_CASE("predict hand cases and empty batch") {
  MarsModel model;
  model.n_features = 1;
  model.terms.push_back(BasisTerm{});
  model.coefficients = Eigen::VectorXd::Constant(1, 0.7);
  Eigen::MatrixXd X(3, 1);
  X << -5.0, 0.0, 9.0;
  const Eigen::VectorXd out = model.predict(X);
  for (int i = 0; i < 3; ++i) CHECK(out[i] == 0.7);

  BasisTerm hinge;
  hinge.factors.push_back(Hinge{0, 0.5, HingeDir::plus});
  model.terms.push_back(hinge);
  model.coefficients = (Eigen::VectorXd(2) << 3.0, 2.0).finished();
  Eigen::MatrixXd x1(1, 1);
  x1 << 1.5;
  CHECK(model.predict(x1)[0] == doctest::Approx(5.0).epsilon(1e-15));

  const Eigen::MatrixXd empty(0, 1);
  CHECK(model.predict(empty).size() == 0);
  Eigen::MatrixXd wrong(1, 2);
  wrong << 1.0, 2.0;
  CHECK_THROWS_AS(model.predict(wrong), Error);
}

TEST_CASE("forward RSS trajectory is non-increasing") {
  const int n = 200;
  RngStream rng(23);
  Eigen::MatrixXd X(n, 3);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < 3; ++j) X(i, j) = rng.normal();
  Eigen::VectorXd y(n);
  for (int i = 0; i < n; ++i)
    y[i] = std::max(X(i, 0), 0.0) - 0.5 * std::max(0.3 - X(i, 1), 0.0) + 0.2 * rng.normal();
  FitConfig cfg = plain_config(13, 2);
  const MarsModel model = fit_forward(X, y, Eigen::VectorXd::Ones(n), cfg);
  for (std::size_t i = 1; i < model.forward_rss.size(); ++i)
    CHECK(model.forward_rss[i] <= model.forward_rss[i - 1] + 1e-9);
}

TEST_CASE("exact recovery of targets built from up to 5 hinge terms") {
  RngStream rng(31);
  for (int trial = 0; trial < 3; ++trial) {
    const int n = 120, p = 4;
    Eigen::MatrixXd X(n, p);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < p; ++j) X(i, j) = rng.normal();

    // 5 single-hinge terms at observed knots on varied features.
    std::vector<BasisTerm> gen_terms;
    Eigen::VectorXd gen_beta(5);
    for (int t = 0; t < 5; ++t) {
      BasisTerm term;
      const int feature = t % p;
      const auto row = static_cast<Eigen::Index>(rng.below(n));
      term.factors.push_back(Hinge{feature, X(row, feature),
                                   t % 2 ? HingeDir::minus : HingeDir::plus});
      gen_terms.push_back(term);
      gen_beta[t] = rng.normal();
    }
    Eigen::VectorXd y = Eigen::VectorXd::Constant(n, 1.5);
    for (int t = 0; t < 5; ++t)
      for (int i = 0; i < n; ++i) y[i] += gen_beta[t] * gen_terms[static_cast<std::size_t>(t)].eval_row(X, i);

    FitConfig cfg = plain_config(31, 1);
    const MarsModel model = fit_mars(X, y, Eigen::VectorXd::Ones(n), cfg);
    const double err = std::sqrt((model.predict(X) - y).squaredNorm() / n);
    CHECK(err <= 1e-6);
  }
}

TEST_CASE("uniform weights match the direct least-squares oracle") {
  const int n = 150;
  RngStream rng(41);
  Eigen::MatrixXd X(n, 2);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < 2; ++j) X(i, j) = rng.normal();
  Eigen::VectorXd y(n);
  for (int i = 0; i < n; ++i)
    y[i] = 0.4 * std::max(X(i, 0) + 0.3, 0.0) + 0.1 * X(i, 1) + 0.05 * rng.normal();

  const Eigen::VectorXd w = Eigen::VectorXd::Constant(n, 3.5);
  const FitConfig cfg = plain_config(9, 2);
  const MarsModel model = fit_mars(X, y, w, cfg);
  const DirectFit oracle = direct_refit(model.terms, X, y, w, cfg.ridge);
  CHECK((model.coefficients - oracle.beta).cwiseAbs().maxCoeff() <= 1e-8);
}

TEST_CASE("stored GCV is consistent with recomputed RSS") {
  const int n = 100;
  RngStream rng(43);
  Eigen::MatrixXd X(n, 2);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < 2; ++j) X(i, j) = rng.normal();
  Eigen::VectorXd y(n);
  for (int i = 0; i < n; ++i) y[i] = std::max(X(i, 0), 0.0) + 0.1 * rng.normal();
  Eigen::VectorXd w(n);
  for (int i = 0; i < n; ++i) w[i] = 0.5 + rng.uniform();

  const FitConfig cfg = plain_config(9, 2);
  const MarsModel model = fit_mars(X, y, w, cfg);
  const Eigen::VectorXd wn = w * (static_cast<double>(n) / w.sum());
  const Eigen::VectorXd resid = y - model.predict(X);
  const double rss = resid.dot((wn.array() * resid.array()).matrix());
  CHECK(model.rss == doctest::Approx(rss).epsilon(1e-9));
  CHECK(model.gcv ==
        doctest::Approx(gcv_score(rss, n, model.effective_params)).epsilon(1e-9));
  CHECK(model.effective_params ==
        doctest::Approx(effective_params_of(model.terms, cfg.gcv_penalty)).epsilon(1e-12));
}

TEST_CASE("degree cap and feature uniqueness hold on fitted terms") {
  const int n = 300;
  RngStream rng(47);
  Eigen::MatrixXd X(n, 5);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < 5; ++j) X(i, j) = rng.normal();
  Eigen::VectorXd y(n);
  for (int i = 0; i < n; ++i)
    y[i] = std::max(X(i, 0), 0.0) * std::max(0.5 - X(i, 1), 0.0) + 0.3 * X(i, 2) +
           0.1 * rng.normal();

  FitConfig cfg = plain_config(15, 2);
  const MarsModel model = fit_mars(X, y, Eigen::VectorXd::Ones(n), cfg);
  for (const auto& term : model.terms) {
    CHECK(term.degree() <= cfg.max_degree);
    for (std::size_t a = 0; a < term.factors.size(); ++a)
      for (std::size_t b = a + 1; b < term.factors.size(); ++b)
        CHECK(term.factors[a].feature != term.factors[b].feature);
  }
  CHECK(model.terms.front().is_intercept());
}

TEST_CASE("prediction is Lipschitz with the coefficient-bound constant") {
  const int n = 80;
  const Eigen::MatrixXd X = grid_1d(n, -2.0, 2.0);
  RngStream rng(53);
  Eigen::VectorXd y(n);
  for (int i = 0; i < n; ++i) y[i] = std::sin(2.0 * X(i, 0)) + 0.05 * rng.normal();
  const FitConfig cfg = plain_config(13, 1);
  const MarsModel model = fit_mars(X, y, Eigen::VectorXd::Ones(n), cfg);

  // Degree-1 terms on one feature: slope magnitude is at most sum |beta|.
  double lip = 0.0;
  for (Eigen::Index q = 0; q < model.coefficients.size(); ++q)
    if (!model.terms[static_cast<std::size_t>(q)].is_intercept())
      lip += std::fabs(model.coefficients[q]);

  const double h = 1e-4;
  for (double x = -2.0; x <= 2.0; x += 7e-3) {
    Eigen::VectorXd a(1), b(1);
    a << x;
    b << x + h;
    const double df = std::fabs(model.predict_one(b) - model.predict_one(a));
    CHECK(df <= lip * h * (1.0 + 1e-9) + 1e-12);
  }
}

TEST_CASE("input validation") {
  Eigen::MatrixXd X(3, 1);
  X << 1, 2, 3;
  Eigen::VectorXd y(3);
  y << 1, 2, 3;
  CHECK_THROWS_AS(fit_forward(X, y, Eigen::VectorXd::Zero(3), plain_config(5)), Error);
  Eigen::VectorXd w(3);
  w << 1, -1, 1;
  CHECK_THROWS_AS(fit_forward(X, y, w, plain_config(5)), Error);
  Eigen::VectorXd ybad(3);
  ybad << 1, std::numeric_limits<double>::infinity(), 3;
  CHECK_THROWS_AS(fit_forward(X, ybad, Eigen::VectorXd::Ones(3), plain_config(5)), Error);
  Eigen::MatrixXd X1(1, 1);
  X1 << 1;
  CHECK_THROWS_AS(
      fit_forward(X1, Eigen::VectorXd::Ones(1), Eigen::VectorXd::Ones(1), plain_config(5)),
      Error);
}

}  // TEST_SUITE
