#include "limelab/explain.hpp"

#include <cmath>
#include <sstream>

#include "limelab/common.hpp"
#include "limelab/rng.hpp"

namespace limelab {

std::string to_string(Method m) {
  switch (m) {
    case Method::lime: return "lime";
    case Method::lemon: return "lemon";
    case Method::mlime: return "mlime";
  }
  return "?";
}

Method method_from_string(const std::string& s) {
  if (s == "lime") return Method::lime;
  if (s == "lemon") return Method::lemon;
  if (s == "mlime") return Method::mlime;
  throw Error("unknown method '" + s + "' (expected lime, lemon, or mlime)");
}

Explanation explain_instance(const Dataset& ds, const BlackBoxModel& model,
                             Eigen::Index idx, const ExplainerConfig& cfg) {
  if (!(cfg.sigma > 0.0)) throw Error("explain_instance: sigma must be positive");
  if (cfg.n_train_samples < 1) throw Error("explain_instance: n_train_samples must be >= 1");
  const Eigen::VectorXd x = ds.instance(idx);
  const int p = static_cast<int>(ds.p());
  const Kernel kernel{cfg.sigma};

  // Target class: argmax probability at the instance, lowest index on ties.
  const Eigen::MatrixXd probs_at_x = model.predict_proba(x.transpose());
  int target = 0;
  for (int c = 1; c < model.n_classes(); ++c)
    if (probs_at_x(0, c) > probs_at_x(0, target)) target = c;

  Explanation expl;
  expl.instance_index = idx;
  expl.method = cfg.method;
  expl.target_class = target;
  expl.seed = cfg.rng_seed;
  expl.n_samples_used = cfg.n_train_samples;

  RngStream rng(derive_seed(cfg.rng_seed, {0x747261696eu /* "train" */}));
  SampleBatch batch;
  Eigen::VectorXd fit_weights;
  if (cfg.method == Method::lime) {
    batch = sample_gaussian(x, cfg.n_train_samples, rng, kernel);
    // Kernel weights up to a positive factor; immune to underflow far from x.
    fit_weights = stable_relative_weights(batch.distances, kernel);
    expl.r_max_used = 0.0;
  } else {
    BallSpec spec;
    spec.center = x;
    spec.r_max = compute_rmax(kernel, cfg.rmax_p, p);
    spec.law = cfg.train_radial_law;
    batch = sample_nball(spec, kernel, cfg.n_train_samples, rng);
    fit_weights = Eigen::VectorXd::Ones(cfg.n_train_samples);
    expl.r_max_used = spec.r_max;
  }

  const Eigen::MatrixXd proba = model.predict_proba(batch.points);
  if (!proba.allFinite()) {
    for (Eigen::Index i = 0; i < proba.rows(); ++i)
      if (!proba.row(i).allFinite())
        throw Error("explain_instance: non-finite black-box output at sample " +
                    std::to_string(i));
  }
  const Eigen::VectorXd y = proba.col(target);

  std::shared_ptr<Surrogate> surrogate;
  if (cfg.method == Method::mlime) {
    const mars::FitConfig mcfg = cfg.mars_cfg ? *cfg.mars_cfg : mars::FitConfig::defaults_for(p);
    surrogate = std::make_shared<MarsSurrogate>(mcfg);
  } else {
    surrogate = std::make_shared<LinearSurrogate>(cfg.ridge_lambda);
  }
  surrogate->fit(batch.points, y, fit_weights);
  expl.attribution = surrogate->attribution(x);
  expl.surrogate = std::move(surrogate);
  return expl;
}

Eigen::VectorXd attribution_mars(const mars::MarsModel& m, const Eigen::VectorXd& x) {
  if (x.size() != m.n_features) throw Error("attribution_mars: dimension mismatch");
  Eigen::VectorXd grad = Eigen::VectorXd::Zero(m.n_features);
  for (std::size_t q = 0; q < m.terms.size(); ++q) {
    const auto& term = m.terms[q];
    const double beta = m.coefficients[static_cast<Eigen::Index>(q)];
    for (std::size_t f = 0; f < term.factors.size(); ++f) {
      const auto& h = term.factors[f];
      double others = 1.0;
      for (std::size_t g = 0; g < term.factors.size(); ++g)
        if (g != f) others *= term.factors[g].eval(x[term.factors[g].feature]);
      grad[h.feature] += beta * h.deriv_right(x[h.feature]) * others;
    }
  }
  return grad;
}

std::string render_report(const Dataset& ds, const Explanation& expl) {
  std::ostringstream os;
  const Eigen::VectorXd x = ds.instance(expl.instance_index);
  const Eigen::VectorXd x_orig = ds.destandardize(x);

  os << "instance " << expl.instance_index << " of " << ds.id() << "\n";
  os << "method: " << to_string(expl.method) << ", target class: " << expl.target_class
     << ", samples: " << expl.n_samples_used;
  if (expl.r_max_used > 0.0) os << ", r_max: " << format_double(expl.r_max_used);
  os << "\n\n";

  os << "attribution (d prediction / d feature, standardized units):\n";
  for (Eigen::Index j = 0; j < x.size(); ++j) {
    const std::string name = j < static_cast<Eigen::Index>(ds.feature_names.size())
                                 ? ds.feature_names[static_cast<std::size_t>(j)]
                                 : "x" + std::to_string(j);
    os << "  " << name << " = " << format_double(x_orig[j]) << ": "
       << format_double(expl.attribution[j]) << "  (per original unit: "
       << format_double(expl.attribution[j] / ds.feature_stds[j]) << ")\n";
  }

  if (const auto* msur = dynamic_cast<const MarsSurrogate*>(expl.surrogate.get())) {
    os << "\nsurrogate terms (standardized feature space):\n";
    std::istringstream dump(msur->model().dump());
    std::string line;
    while (std::getline(dump, line)) os << "  " << line << "\n";
  }
  return os.str();
}

}  // namespace limelab
