#include <cmath>

#include "limelab/blackbox.hpp"
#include "limelab/common.hpp"
#include "limelab/rng.hpp"

namespace limelab {

namespace {

// Row-wise softmax of a logit matrix, computed stably.
Eigen::MatrixXd softmax_rows(const Eigen::MatrixXd& Z) {
  Eigen::MatrixXd P(Z.rows(), Z.cols());
  for (Eigen::Index i = 0; i < Z.rows(); ++i) {
    const double m = Z.row(i).maxCoeff();
    const Eigen::RowVectorXd e = (Z.row(i).array() - m).exp();
    P.row(i) = e / e.sum();
  }
  return P;
}

}  // namespace

MlpModel::MlpModel(int n_features, const std::vector<int>& hidden, int n_classes,
                   std::uint64_t rng_seed)
    : n_features_(n_features), n_classes_(n_classes) {
  config_.hidden = hidden;
  config_.rng_seed = rng_seed;
  std::vector<int> sizes;
  sizes.push_back(n_features);
  for (int h : hidden) sizes.push_back(h);
  sizes.push_back(n_classes);

  RngStream rng(derive_seed(rng_seed, {0x6d6c70u /* "mlp" */}));
  for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
    const int fan_in = sizes[l];
    const int fan_out = sizes[l + 1];
    const double scale = 1.0 / std::sqrt(static_cast<double>(fan_in));
    Eigen::MatrixXd W(fan_in, fan_out);
    for (Eigen::Index r = 0; r < W.rows(); ++r)
      for (Eigen::Index c = 0; c < W.cols(); ++c)
        W(r, c) = (2.0 * rng.uniform() - 1.0) * scale;
    weights_.push_back(std::move(W));
    biases_.push_back(Eigen::VectorXd::Zero(fan_out));
  }
}

Eigen::MatrixXd MlpModel::forward_logits(const Eigen::MatrixXd& X) const {
  Eigen::MatrixXd A = X;
  for (std::size_t l = 0; l < weights_.size(); ++l) {
    Eigen::MatrixXd Z = (A * weights_[l]).rowwise() + biases_[l].transpose();
    if (l + 1 < weights_.size()) Z = Z.cwiseMax(0.0);
    A = std::move(Z);
  }
  return A;
}

Eigen::MatrixXd MlpModel::predict_proba(const Eigen::MatrixXd& X) const {
  if (X.cols() != n_features_)
    throw Error("MlpModel::predict_proba: expected " + std::to_string(n_features_) +
                " features, got " + std::to_string(X.cols()));
  if (X.rows() == 0) return Eigen::MatrixXd(0, n_classes_);
  return softmax_rows(forward_logits(X));
}

double MlpModel::loss(const Eigen::MatrixXd& X, const std::vector<int>& y) const {
  const Eigen::MatrixXd P = softmax_rows(forward_logits(X));
  double total = 0.0;
  for (Eigen::Index i = 0; i < X.rows(); ++i)
    total -= std::log(std::max(P(i, y[static_cast<std::size_t>(i)]), 1e-300));
  return total / static_cast<double>(X.rows());
}

std::pair<std::vector<Eigen::MatrixXd>, std::vector<Eigen::VectorXd>> MlpModel::gradients(
    const Eigen::MatrixXd& X, const std::vector<int>& y) const {
  const std::size_t n_layers = weights_.size();
  std::vector<Eigen::MatrixXd> activations;  // inputs to each layer
  activations.reserve(n_layers + 1);
  activations.push_back(X);
  for (std::size_t l = 0; l < n_layers; ++l) {
    Eigen::MatrixXd Z = (activations.back() * weights_[l]).rowwise() + biases_[l].transpose();
    if (l + 1 < n_layers) Z = Z.cwiseMax(0.0);
    activations.push_back(std::move(Z));
  }

  const double inv_n = 1.0 / static_cast<double>(X.rows());
  Eigen::MatrixXd delta = softmax_rows(activations.back());
  for (Eigen::Index i = 0; i < X.rows(); ++i) delta(i, y[static_cast<std::size_t>(i)]) -= 1.0;
  delta *= inv_n;

  std::vector<Eigen::MatrixXd> grad_w(n_layers);
  std::vector<Eigen::VectorXd> grad_b(n_layers);
  for (std::size_t l = n_layers; l-- > 0;) {
    grad_w[l] = activations[l].transpose() * delta;
    grad_b[l] = delta.colwise().sum().transpose();
    if (l > 0) {
      delta = delta * weights_[l].transpose();
      // Rectifier gate: activations[l] holds max(z, 0), zero where inactive.
      delta = ((activations[l].array() > 0.0).cast<double>() * delta.array()).matrix();
    }
  }
  return {std::move(grad_w), std::move(grad_b)};
}

MlpModel fit_mlp(const Dataset& ds, const MlpConfig& cfg) {
  if (cfg.epochs < 1) throw Error("fit_mlp: epochs must be >= 1");
  if (cfg.batch_size < 1) throw Error("fit_mlp: batch_size must be >= 1");
  MlpModel model(static_cast<int>(ds.p()), cfg.hidden, ds.n_classes, cfg.rng_seed);
  model.config_ = cfg;

  RngStream shuffle_rng(derive_seed(cfg.rng_seed, {0x73687566u /* "shuf" */}));
  const Eigen::Index n = ds.n_rows();
  std::vector<int> order(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) order[static_cast<std::size_t>(i)] = static_cast<int>(i);

  std::vector<Eigen::MatrixXd> vel_w;
  std::vector<Eigen::VectorXd> vel_b;
  for (std::size_t l = 0; l < model.weights_.size(); ++l) {
    vel_w.push_back(Eigen::MatrixXd::Zero(model.weights_[l].rows(), model.weights_[l].cols()));
    vel_b.push_back(Eigen::VectorXd::Zero(model.biases_[l].size()));
  }

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    shuffle_rng.shuffle(order);
    int batch_no = 0;
    for (Eigen::Index start = 0; start < n; start += cfg.batch_size, ++batch_no) {
      const Eigen::Index bs = std::min<Eigen::Index>(cfg.batch_size, n - start);
      Eigen::MatrixXd Xb(bs, ds.p());
      std::vector<int> yb(static_cast<std::size_t>(bs));
      for (Eigen::Index r = 0; r < bs; ++r) {
        const int i = order[static_cast<std::size_t>(start + r)];
        Xb.row(r) = ds.features.row(i);
        yb[static_cast<std::size_t>(r)] = ds.labels[static_cast<std::size_t>(i)];
      }
      auto [gw, gb] = model.gradients(Xb, yb);
      bool finite = true;
      for (std::size_t l = 0; l < gw.size(); ++l) {
        vel_w[l] = cfg.momentum * vel_w[l] - cfg.learning_rate * gw[l];
        vel_b[l] = cfg.momentum * vel_b[l] - cfg.learning_rate * gb[l];
        model.weights_[l] += vel_w[l];
        model.biases_[l] += vel_b[l];
        finite = finite && model.weights_[l].allFinite() && model.biases_[l].allFinite();
      }
      if (!finite)
        throw Error("fit_mlp: non-finite parameters at epoch " + std::to_string(epoch) +
                    ", batch " + std::to_string(batch_no));
    }
  }
  return model;
}

}  // namespace limelab
