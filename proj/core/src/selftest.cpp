#include <cmath>
#include <functional>
#include <ostream>
#include <sstream>
#include <vector>

#include "limelab/common.hpp"
#include "limelab/dataset.hpp"
#include "limelab/fidelity.hpp"
#include "limelab/mars.hpp"
#include "limelab/rng.hpp"
#include "limelab/runner.hpp"
#include "limelab/sampling.hpp"
#include "limelab/surrogate.hpp"

namespace limelab {

namespace {

struct Check {
  std::string name;
  std::function<bool(std::string&)> run;
};

bool near(double a, double b, double tol) { return std::fabs(a - b) <= tol; }

std::vector<Check> build_checks() {
  std::vector<Check> checks;

  checks.push_back({"hinge_plus_cases", [](std::string& d) {
    const mars::Hinge h{0, 1.0, mars::HingeDir::plus};
    d = "(x-1)+ at 2 and 0.5";
    return h.eval(2.0) == 1.0 && h.eval(0.5) == 0.0;
  }});

  checks.push_back({"hinge_minus_cases", [](std::string& d) {
    const mars::Hinge h{0, 1.0, mars::HingeDir::minus};
    d = "(1-x)+ at 0.5";
    return h.eval(0.5) == 0.5 && h.eval(2.0) == 0.0;
  }});

  checks.push_back({"hinge_product", [](std::string& d) {
    mars::BasisTerm term;
    term.factors.push_back(mars::Hinge{0, 0.0, mars::HingeDir::plus});
    term.factors.push_back(mars::Hinge{1, 1.0, mars::HingeDir::minus});
    Eigen::VectorXd x(2);
    x << 2.0, 0.25;
    d = "product basis at (2, 0.25)";
    return near(mars::eval_basis(term, x), 1.5, 1e-15);
  }});

  checks.push_back({"gcv_hand_value", [](std::string& d) {
    const double g = mars::gcv_score(2.5, 10, 3.0);
    d = "gcv(2.5, 10, 3) = " + format_double(g);
    return near(g, 0.25 / 0.49, 1e-9);
  }});

  checks.push_back({"gcv_no_penalty", [](std::string& d) {
    d = "gcv(2.5, 10, 0) = rss/n";
    return near(mars::gcv_score(2.5, 10, 0.0), 0.25, 1e-15) &&
           mars::gcv_score(0.0, 10, 3.0) == 0.0;
  }});

  checks.push_back({"rmse_hand_values", [](std::string& d) {
    Eigen::VectorXd a(2), b(2);
    a << 1, 0;
    b << 0, 1;
    Eigen::VectorXd c(1), e(1);
    c << 0.2;
    e << 0.5;
    d = "rmse([1,0],[0,1]) and rmse([0.2],[0.5])";
    return near(rmse(a, b), 1.0, 1e-12) && near(rmse(c, e), 0.3, 1e-12);
  }});

  checks.push_back({"rmse_zero_on_equal", [](std::string& d) {
    Eigen::VectorXd a(3);
    a << 0.1, 0.7, -2.0;
    d = "identical vectors";
    return rmse(a, a) == 0.0;
  }});

  checks.push_back({"rmax_dim2_closed_form", [](std::string& d) {
    const double r = compute_rmax(Kernel{1.0}, 0.999, 2);
    d = "rmax(sigma=1, p=0.999, dim=2) = " + format_double(r);
    return near(r, std::sqrt(std::log(1000.0)), 1e-6);
  }});

  checks.push_back({"rmax_sigma_scaling", [](std::string& d) {
    const double r1 = compute_rmax(Kernel{1.0}, 0.999, 2);
    const double r2 = compute_rmax(Kernel{2.0}, 0.999, 2);
    d = "rmax scales linearly in sigma";
    return near(r2, 2.0 * r1, 1e-9 * r2);
  }});

  checks.push_back({"kernel_values", [](std::string& d) {
    const Kernel k{2.0};
    d = "k(0), k(sigma), k(3 sigma)";
    return k.weight(0.0) == 1.0 && near(k.weight(2.0), std::exp(-1.0), 1e-15) &&
           near(k.weight(6.0), std::exp(-9.0), 1e-18);
  }});

  checks.push_back({"ball_containment", [](std::string& d) {
    const Kernel k{1.0};
    BallSpec spec;
    spec.center = Eigen::VectorXd::Zero(5);
    spec.r_max = compute_rmax(k, 0.999, 5);
    spec.law = RadialLaw::kernel_matched;
    RngStream rng(20240001);
    const SampleBatch batch = sample_nball(spec, k, 10000, rng);
    d = "10000 draws in a 5-ball";
    for (Eigen::Index i = 0; i < batch.points.rows(); ++i) {
      const double dist = (batch.points.row(i).transpose() - spec.center).norm();
      if (dist > spec.r_max + 1e-9) return false;
      if (std::fabs(dist - batch.distances[i]) > 1e-9) return false;
    }
    return true;
  }});

  checks.push_back({"standardize_hand_value", [](std::string& d) {
    RawTable raw;
    raw.column_names = {"a", "y"};
    raw.values.resize(3, 2);
    raw.values << 1, 0, 2, 1, 3, 0;
    raw.source_stem = "selftest";
    const Dataset ds = standardize(raw);
    const double z = 1.0 / std::sqrt(2.0 / 3.0);
    d = "column [1,2,3] standardizes to [-1.2247, 0, 1.2247]";
    return near(ds.features(0, 0), -z, 1e-12) && near(ds.features(1, 0), 0.0, 1e-12) &&
           near(ds.features(2, 0), z, 1e-12);
  }});

  checks.push_back({"linear_recovery", [](std::string& d) {
    Eigen::MatrixXd X(5, 1);
    X << -2, -1, 0, 1, 2;
    const Eigen::VectorXd y = 2.0 * X.col(0).array() + 1.0;
    const auto s = fit_weighted_linear(X, y, Eigen::VectorXd::Ones(5), 0.0);
    d = "y = 2x + 1 recovered";
    return near(s.intercept(), 1.0, 1e-9) && near(s.coefficients()[0], 2.0, 1e-9);
  }});

  checks.push_back({"mars_exact_recovery", [](std::string& d) {
    const int n = 50;
    Eigen::MatrixXd X(n, 1);
    for (int i = 0; i < n; ++i) X(i, 0) = -1.0 + 2.0 * i / (n - 1.0);
    Eigen::VectorXd y(n);
    for (int i = 0; i < n; ++i) y[i] = 3.0 + 2.0 * std::max(X(i, 0) - 0.5, 0.0);
    mars::FitConfig cfg;
    cfg.max_terms = 7;
    cfg.max_degree = 1;
    cfg.knot_subsample = 0;
    const auto model = mars::fit_mars(X, y, Eigen::VectorXd::Ones(n), cfg);
    const double err = (model.predict(X) - y).cwiseAbs().maxCoeff();
    d = "max train error " + format_double(err);
    return err <= 1e-6;
  }});

  return checks;
}

}  // namespace

int cmd_selftest(std::ostream& log) {
  int failures = 0;
  for (const auto& check : build_checks()) {
    std::string detail;
    bool ok = false;
    try {
      ok = check.run(detail);
    } catch (const std::exception& e) {
      detail = std::string("exception: ") + e.what();
    }
    log << (ok ? "[PASS] " : "[FAIL] ") << check.name;
    if (!detail.empty()) log << " — " << detail;
    log << "\n";
    if (!ok) ++failures;
  }
  log << (failures == 0 ? "selftest: all checks passed\n"
                        : "selftest: " + std::to_string(failures) + " check(s) failed\n");
  return failures == 0 ? 0 : 1;
}

}  // namespace limelab
