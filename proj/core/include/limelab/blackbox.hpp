#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include "limelab/dataset.hpp"

namespace limelab {

/// Probability predictor to be explained. Implementations are immutable
/// after fitting and safe to share across threads; every output row sums
/// to 1 within 1e-6.
class BlackBoxModel {
 public:
  virtual ~BlackBoxModel() = default;

  /// Batch of class-probability rows, one per input row; batch order is
  /// preserved and an empty batch yields an empty output.
  virtual Eigen::MatrixXd predict_proba(const Eigen::MatrixXd& X) const = 0;

  virtual int n_classes() const = 0;
  virtual int n_features() const = 0;
  virtual std::string model_name() const = 0;
};

// ---------------------------------------------------------------------------
// Gaussian naive Bayes

class GnbModel final : public BlackBoxModel {
 public:
  Eigen::MatrixXd predict_proba(const Eigen::MatrixXd& X) const override;
  int n_classes() const override { return static_cast<int>(priors_.size()); }
  int n_features() const override { return static_cast<int>(means_.cols()); }
  std::string model_name() const override { return "gnb"; }

  const Eigen::VectorXd& priors() const { return priors_; }
  const Eigen::MatrixXd& means() const { return means_; }      // class x feature
  const Eigen::MatrixXd& variances() const { return vars_; }   // class x feature
  double epsilon() const { return epsilon_; }

  friend GnbModel fit_gnb(const Dataset& ds, double epsilon);

 private:
  Eigen::VectorXd priors_;
  Eigen::MatrixXd means_;
  Eigen::MatrixXd vars_;
  double epsilon_ = 0.0;
};

/// Class-conditional Gaussians per feature; variances floored at
/// epsilon * (largest per-feature variance). Every class needs a sample.
GnbModel fit_gnb(const Dataset& ds, double epsilon = 1e-9);

// ---------------------------------------------------------------------------
// Random forest (CART, Gini impurity, soft voting)

class ForestModel final : public BlackBoxModel {
 public:
  struct Node {
    int feature = -1;  // -1 marks a leaf
    double threshold = 0.0;
    int left = -1;
    int right = -1;
    Eigen::VectorXd leaf_proba;  // class distribution, sums to 1
  };
  struct Tree {
    std::vector<Node> nodes;  // node 0 is the root
  };

  Eigen::MatrixXd predict_proba(const Eigen::MatrixXd& X) const override;
  int n_classes() const override { return n_classes_; }
  int n_features() const override { return n_features_; }
  std::string model_name() const override { return "forest"; }

  const std::vector<Tree>& trees() const { return trees_; }
  std::uint64_t seed() const { return seed_; }

  friend ForestModel fit_forest(const Dataset& ds, int n_trees, std::uint64_t rng_seed);

 private:
  std::vector<Tree> trees_;
  int n_classes_ = 0;
  int n_features_ = 0;
  std::uint64_t seed_ = 0;
};

/// Bootstrap-resampled CART trees with Gini splits, ceil(sqrt(p)) candidate
/// features per split, grown to purity (min leaf size 1, no depth cap).
/// Deterministic for a fixed seed.
ForestModel fit_forest(const Dataset& ds, int n_trees = 200, std::uint64_t rng_seed = 0);

// ---------------------------------------------------------------------------
// Multilayer perceptron (rectifier hidden layers, softmax output)

struct MlpConfig {
  std::vector<int> hidden = {100, 100, 100};
  int epochs = 200;
  int batch_size = 32;
  double learning_rate = 1e-3;
  double momentum = 0.9;
  std::uint64_t rng_seed = 0;
};

class MlpModel final : public BlackBoxModel {
 public:
  /// Randomly initialized network (uniform, scaled by 1/sqrt(fan_in)).
  MlpModel(int n_features, const std::vector<int>& hidden, int n_classes,
           std::uint64_t rng_seed);

  Eigen::MatrixXd predict_proba(const Eigen::MatrixXd& X) const override;
  int n_classes() const override { return n_classes_; }
  int n_features() const override { return n_features_; }
  std::string model_name() const override { return "mlp"; }

  /// Mean cross-entropy of the batch.
  double loss(const Eigen::MatrixXd& X, const std::vector<int>& y) const;

  /// Analytic parameter gradients of loss(); same shapes as weights/biases.
  std::pair<std::vector<Eigen::MatrixXd>, std::vector<Eigen::VectorXd>> gradients(
      const Eigen::MatrixXd& X, const std::vector<int>& y) const;

  std::vector<Eigen::MatrixXd>& weights() { return weights_; }
  std::vector<Eigen::VectorXd>& biases() { return biases_; }
  const std::vector<Eigen::MatrixXd>& weights() const { return weights_; }
  const std::vector<Eigen::VectorXd>& biases() const { return biases_; }

  const MlpConfig& train_config() const { return config_; }

  friend MlpModel fit_mlp(const Dataset& ds, const MlpConfig& cfg);

 private:
  Eigen::MatrixXd forward_logits(const Eigen::MatrixXd& X) const;

  int n_features_ = 0;
  int n_classes_ = 0;
  std::vector<Eigen::MatrixXd> weights_;  // layer l: fan_in x fan_out
  std::vector<Eigen::VectorXd> biases_;
  MlpConfig config_;
};

/// Cross-entropy minimization by mini-batch gradient descent with momentum;
/// deterministic for a fixed seed. Throws with (epoch, batch) diagnostics if
/// the loss turns non-finite.
MlpModel fit_mlp(const Dataset& ds, const MlpConfig& cfg);

// ---------------------------------------------------------------------------
// External predictor over a child process

/// Adapter for a predictor running as a child process, speaking the
/// line protocol documented in the README (HELLO/OK handshake, BATCH
/// exchanges of CSV rows, BYE to finish). Batches are serialized; one
/// request is in flight at a time.
class ExternalModel final : public BlackBoxModel {
 public:
  ExternalModel(std::string command, int n_features, int n_classes);
  ~ExternalModel() override;

  Eigen::MatrixXd predict_proba(const Eigen::MatrixXd& X) const override;
  int n_classes() const override { return n_classes_; }
  int n_features() const override { return n_features_; }
  std::string model_name() const override { return "external"; }

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
  std::string command_;
  int n_features_ = 0;
  int n_classes_ = 0;
  mutable std::mutex mutex_;
};

}  // namespace limelab
