#include <doctest.h>

#include <cmath>
#include <functional>

#include "limelab/common.hpp"
#include "limelab/fidelity.hpp"
#include "limelab/rng.hpp"

using namespace limelab;

namespace {

class FunctionModel final : public BlackBoxModel {
 public:
  FunctionModel(int p, std::function<double(const Eigen::VectorXd&)> f)
      : p_(p), f_(std::move(f)) {}
  Eigen::MatrixXd predict_proba(const Eigen::MatrixXd& X) const override {
    Eigen::MatrixXd out(X.rows(), 2);
    for (Eigen::Index i = 0; i < X.rows(); ++i) {
      const double s = f_(X.row(i).transpose());
      out(i, 0) = 1.0 - s;
      out(i, 1) = s;
    }
    return out;
  }
  int n_classes() const override { return 2; }
  int n_features() const override { return p_; }
  std::string model_name() const override { return "function"; }

 private:
  int p_;
  std::function<double(const Eigen::VectorXd&)> f_;
};

// Surrogate that defers to a black-box model's target-class probability.
class WrapSurrogate final : public Surrogate {
 public:
  WrapSurrogate(const BlackBoxModel& model, int target) : model_(model), target_(target) {}
  void fit(const Eigen::MatrixXd&, const Eigen::VectorXd&, const Eigen::VectorXd&) override {}
  Eigen::VectorXd predict(const Eigen::MatrixXd& X) const override {
    return model_.predict_proba(X).col(target_);
  }
  Eigen::VectorXd attribution(const Eigen::VectorXd& x) const override {
    return Eigen::VectorXd::Zero(x.size());
  }
  std::string name() const override { return "wrap"; }

 private:
  const BlackBoxModel& model_;
  int target_;
};

class ConstantSurrogate final : public Surrogate {
 public:
  explicit ConstantSurrogate(double v) : v_(v) {}
  void fit(const Eigen::MatrixXd&, const Eigen::VectorXd&, const Eigen::VectorXd&) override {}
  Eigen::VectorXd predict(const Eigen::MatrixXd& X) const override {
    return Eigen::VectorXd::Constant(X.rows(), v_);
  }
  Eigen::VectorXd attribution(const Eigen::VectorXd& x) const override {
    return Eigen::VectorXd::Zero(x.size());
  }
  std::string name() const override { return "constant"; }

 private:
  double v_;
};

Dataset tiny_dataset(int p) {
  Dataset ds;
  ds.features = Eigen::MatrixXd::Zero(4, p);
  ds.features(1, 0) = 1.0;
  ds.features(2, 0) = -1.0;
  ds.features(3, p - 1) = 0.5;
  ds.labels = {0, 1, 0, 1};
  ds.n_classes = 2;
  ds.feature_means = Eigen::VectorXd::Zero(p);
  ds.feature_stds = Eigen::VectorXd::Ones(p);
  for (int j = 0; j < p; ++j) ds.feature_names.push_back("x" + std::to_string(j));
  ds.name = "tiny";
  return ds;
}

FidelityRecord make_record(const std::string& dataset, const std::string& model, Method method,
                           double sigma, Eigen::Index instance, double value) {
  FidelityRecord rec;
  rec.dataset = dataset;
  rec.model = model;
  rec.method = method;
  rec.sigma = sigma;
  rec.instance = instance;
  rec.rmse = value;
  rec.m = 1;
  return rec;
}

}  // namespace

TEST_SUITE("fidelity") {

TEST_CASE("rmse hand values") {
  Eigen::VectorXd a(2), b(2);
  a << 1, 0;
  b << 0, 1;
  CHECK(rmse(a, b) == doctest::Approx(1.0).epsilon(1e-15));
  Eigen::VectorXd c(1), d(1);
  c << 0.2;
  d << 0.5;
  CHECK(rmse(c, d) == doctest::Approx(0.3).epsilon(1e-12));
  CHECK(rmse(a, a) == 0.0);
}

TEST_CASE("rmse properties over random vectors") {
  RngStream rng(7);
  for (int trial = 0; trial < 50; ++trial) {
    const int n = 1 + static_cast<int>(rng.below(40));
    Eigen::VectorXd a(n), b(n);
    for (int i = 0; i < n; ++i) {
      a[i] = rng.normal();
      b[i] = rng.normal();
    }
    const double r = rmse(a, b);
    CHECK(r >= 0.0);
    CHECK(rmse(b, a) == r);  // symmetry
    const double c = 0.25 + 3.0 * rng.uniform();
    CHECK(rmse(c * a, c * b) == doctest::Approx(c * r).epsilon(1e-12));
    if (r == 0.0) CHECK(a == b);
  }
  Eigen::VectorXd short_v(1), long_v(2);
  short_v << 1;
  long_v << 1, 2;
  CHECK_THROWS_AS(rmse(short_v, long_v), Error);
  Eigen::VectorXd nan_v(1);
  nan_v << std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(rmse(short_v, nan_v), Error);
}

TEST_CASE("white-box surrogate scores zero") {
  const int p = 2;
  const FunctionModel model(p, [](const Eigen::VectorXd& x) {
    return 1.0 / (1.0 + std::exp(-x[0] + 0.5 * x[1]));
  });
  const Dataset ds = tiny_dataset(p);

  Explanation expl;
  expl.instance_index = 0;
  expl.method = Method::lime;
  expl.target_class = 1;
  expl.surrogate = std::make_shared<WrapSurrogate>(model, 1);

  EvalSpec spec;
  spec.m = 3000;
  spec.sigma = 1.0;
  spec.seed = 9;
  const FidelityRecord rec = evaluate_fidelity(ds, model, expl, spec);
  CHECK(rec.rmse == 0.0);
  CHECK(rec.m == 3000);
  CHECK(rec.r_max == doctest::Approx(compute_rmax(Kernel{1.0}, 0.999, p)).epsilon(1e-12));
}

TEST_CASE("constant surrogate vs constant model has rmse 0.5") {
  const int p = 2;
  const FunctionModel model(p, [](const Eigen::VectorXd&) { return 1.0; });
  const Dataset ds = tiny_dataset(p);
  Explanation expl;
  expl.instance_index = 0;
  expl.method = Method::lemon;
  expl.target_class = 1;
  expl.surrogate = std::make_shared<ConstantSurrogate>(0.5);
  for (int m : {1, 17, 400}) {
    EvalSpec spec;
    spec.m = m;
    spec.sigma = 1.0;
    spec.seed = 5;
    CHECK(evaluate_fidelity(ds, model, expl, spec).rmse ==
          doctest::Approx(0.5).epsilon(1e-12));
  }
}

TEST_CASE("rmse estimates at m and 4m agree within sampling noise") {
  const int p = 2;
  const FunctionModel model(p, [](const Eigen::VectorXd& x) {
    return std::min(std::max(std::fabs(x[0]), 0.0), 1.0);
  });
  const Dataset ds = tiny_dataset(p);
  Explanation expl;
  expl.instance_index = 0;
  expl.method = Method::lemon;
  expl.target_class = 0;
  expl.surrogate = std::make_shared<ConstantSurrogate>(0.6);

  const int m = 4000;
  EvalSpec small_spec;
  small_spec.m = m;
  small_spec.sigma = 1.0;
  small_spec.seed = 31;
  EvalSpec big_spec = small_spec;
  big_spec.m = 4 * m;
  big_spec.seed = 32;
  const double r1 = evaluate_fidelity(ds, model, expl, small_spec).rmse;
  const double r2 = evaluate_fidelity(ds, model, expl, big_spec).rmse;

  // Standard error of the mean squared residual, from a fresh draw.
  const Kernel kernel{1.0};
  BallSpec ball;
  ball.center = ds.instance(0);
  ball.r_max = compute_rmax(kernel, 0.999, p);
  RngStream rng(33);
  const SampleBatch probe = sample_nball(ball, kernel, 4 * m, rng);
  const Eigen::VectorXd yr = model.predict_proba(probe.points).col(0);
  const Eigen::ArrayXd sq = (yr.array() - 0.6).square();
  const double var_sq = (sq - sq.mean()).square().sum() / (sq.size() - 1.0);
  const double se = std::sqrt(var_sq * (1.0 / m + 1.0 / (4.0 * m)));
  CHECK(std::fabs(r1 * r1 - r2 * r2) <= 3.0 * se);
}

TEST_CASE("single-cell grid produces exactly one canonical record") {
  GridSpec grid;
  grid.datasets.push_back(tiny_dataset(2));
  ModelSpec ms;
  ms.kind = "gnb";
  grid.models.push_back(ms);
  grid.methods = {Method::lime};
  grid.sigmas = {SigmaSpec::literal(1.0)};
  grid.instances_per_dataset = 1;
  grid.explainer.n_train_samples = 200;

  EvalSpec eval;
  eval.m = 300;
  const auto records = run_grid(grid, eval, 7, 1);
  REQUIRE(records.size() == 1);
  CHECK(records[0].error.empty());
  CHECK(records[0].dataset == "tiny_p2");
  CHECK(records[0].model == "gnb");
  CHECK(records[0].m == 300);
  CHECK(records[0].rmse >= 0.0);
}

TEST_CASE("grid reruns with one master seed are identical") {
  GridSpec grid;
  grid.datasets.push_back(tiny_dataset(3));
  ModelSpec gnb;
  gnb.kind = "gnb";
  ModelSpec forest;
  forest.kind = "forest";
  forest.n_trees = 10;
  grid.models = {gnb, forest};
  grid.methods = {Method::lime, Method::lemon, Method::mlime};
  grid.sigmas = {SigmaSpec::literal(0.5), SigmaSpec::dataset_default()};
  grid.instances_per_dataset = 2;
  grid.explainer.n_train_samples = 300;

  EvalSpec eval;
  eval.m = 200;
  const auto a = run_grid(grid, eval, 99, 2);
  const auto b = run_grid(grid, eval, 99, 1);
  REQUIRE(a.size() == b.size());
  REQUIRE(a.size() == 2u * 2u * 3u * 2u);
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].rmse == b[i].rmse);
    CHECK(a[i].seed == b[i].seed);
    CHECK(a[i].dataset == b[i].dataset);
    CHECK(a[i].method == b[i].method);
    CHECK(a[i].instance == b[i].instance);
  }
  const auto c = run_grid(grid, eval, 100, 2);
  bool any_different = false;
  for (std::size_t i = 0; i < a.size(); ++i) any_different |= a[i].rmse != c[i].rmse;
  CHECK(any_different);
}

TEST_CASE("model failures become error records without aborting") {
  GridSpec grid;
  grid.datasets.push_back(tiny_dataset(2));
  ModelSpec bad;
  bad.kind = "external";
  bad.command = "false";
  ModelSpec good;
  good.kind = "gnb";
  grid.models = {bad, good};
  grid.methods = {Method::lime};
  grid.sigmas = {SigmaSpec::literal(1.0)};
  grid.instances_per_dataset = 2;
  grid.explainer.n_train_samples = 100;

  EvalSpec eval;
  eval.m = 100;
  const auto records = run_grid(grid, eval, 3, 2);
  REQUIRE(records.size() == 4);
  int errors = 0, ok = 0;
  for (const auto& rec : records) {
    if (rec.error.empty())
      ++ok;
    else
      ++errors;
  }
  CHECK(errors == 2);
  CHECK(ok == 2);
}

TEST_CASE("summarize averages cells and reductions") {
  std::vector<FidelityRecord> records;
  // Two sigma groups; reductions 60% and 80% for mlime.
  records.push_back(make_record("d", "m", Method::lime, 0.5, 0, 1.0));
  records.push_back(make_record("d", "m", Method::mlime, 0.5, 0, 0.4));
  records.push_back(make_record("d", "m", Method::lime, 1.0, 0, 1.0));
  records.push_back(make_record("d", "m", Method::mlime, 1.0, 0, 0.2));
  const Summary summary = summarize(records);
  CHECK(summary.mean_reduction_vs_lime.at(Method::mlime) == doctest::Approx(0.7).epsilon(1e-12));
  CHECK(summary.ratio_of_means_reduction.at(Method::mlime) ==
        doctest::Approx(0.7).epsilon(1e-12));

  // Instance averaging inside one cell.
  std::vector<FidelityRecord> multi;
  multi.push_back(make_record("d", "m", Method::lime, 0.5, 0, 0.2));
  multi.push_back(make_record("d", "m", Method::lime, 0.5, 1, 0.4));
  const Summary s2 = summarize(multi);
  REQUIRE(s2.cells.size() == 1);
  CHECK(s2.cells[0].mean_rmse == doctest::Approx(0.3).epsilon(1e-12));
  CHECK(s2.cells[0].n_instances == 2);

  // Identical methods give zero reduction.
  std::vector<FidelityRecord> same;
  same.push_back(make_record("d", "m", Method::lime, 0.5, 0, 0.3));
  same.push_back(make_record("d", "m", Method::lemon, 0.5, 0, 0.3));
  CHECK(summarize(same).mean_reduction_vs_lime.at(Method::lemon) ==
        doctest::Approx(0.0).epsilon(1e-12));

  // Near-zero lime cells are excluded and counted.
  std::vector<FidelityRecord> zero;
  zero.push_back(make_record("d", "m", Method::lime, 0.5, 0, 1e-15));
  zero.push_back(make_record("d", "m", Method::mlime, 0.5, 0, 0.1));
  const Summary s3 = summarize(zero);
  CHECK(s3.cells_excluded_from_reduction == 1);
  CHECK(s3.mean_reduction_vs_lime.count(Method::mlime) == 0);

  // Error records are dropped and counted.
  std::vector<FidelityRecord> err;
  err.push_back(make_record("d", "m", Method::lime, 0.5, 0, 0.5));
  FidelityRecord broken = make_record("d", "m", Method::lime, 0.5, 1, 0.0);
  broken.error = "boom";
  err.push_back(broken);
  const Summary s4 = summarize(err);
  CHECK(s4.error_records == 1);
  REQUIRE(s4.cells.size() == 1);
  CHECK(s4.cells[0].n_instances == 1);
}

TEST_CASE("markdown summary bolds the best method per group") {
  std::vector<FidelityRecord> records;
  records.push_back(make_record("d", "m", Method::lime, 0.5, 0, 0.5));
  records.push_back(make_record("d", "m", Method::lemon, 0.5, 0, 0.3));
  records.push_back(make_record("d", "m", Method::mlime, 0.5, 0, 0.1));
  const std::string md = summarize(records).to_markdown();
  CHECK(md.find("**0.1**") != std::string::npos);
  CHECK(md.find("| d |") != std::string::npos);
  CHECK(md.find("m/lime") != std::string::npos);
}

TEST_CASE("evaluate_fidelity validates m") {
  const FunctionModel model(2, [](const Eigen::VectorXd&) { return 0.5; });
  const Dataset ds = tiny_dataset(2);
  Explanation expl;
  expl.instance_index = 0;
  expl.surrogate = std::make_shared<ConstantSurrogate>(0.5);
  EvalSpec spec;
  spec.m = 0;
  CHECK_THROWS_AS(evaluate_fidelity(ds, model, expl, spec), Error);
}

}  // TEST_SUITE
