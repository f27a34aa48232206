#include <algorithm>
#include <cmath>
#include <numeric>

#include "limelab/blackbox.hpp"
#include "limelab/common.hpp"
#include "limelab/rng.hpp"

namespace limelab {

namespace {

struct TreeBuilder {
  const Eigen::MatrixXd& X;
  const std::vector<int>& y;
  int n_classes;
  int mtry;
  RngStream& rng;
  ForestModel::Tree tree;

  Eigen::VectorXd class_counts(const std::vector<int>& idx) const {
    Eigen::VectorXd counts = Eigen::VectorXd::Zero(n_classes);
    for (int i : idx) counts[y[static_cast<std::size_t>(i)]] += 1.0;
    return counts;
  }

  static double gini(const Eigen::VectorXd& counts, double total) {
    if (total <= 0.0) return 0.0;
    return 1.0 - (counts / total).array().square().sum();
  }

  int build(std::vector<int>& idx) {
    const int node_id = static_cast<int>(tree.nodes.size());
    tree.nodes.emplace_back();

    const Eigen::VectorXd counts = class_counts(idx);
    const double total = static_cast<double>(idx.size());
    const double node_gini = gini(counts, total);

    if (node_gini <= 0.0 || idx.size() < 2) {
      tree.nodes[static_cast<std::size_t>(node_id)].leaf_proba = counts / total;
      return node_id;
    }

    // ceil(sqrt(p)) distinct candidate features, scanned in ascending order.
    auto feats = rng.sample_without_replacement(static_cast<std::size_t>(X.cols()),
                                                static_cast<std::size_t>(mtry));
    std::sort(feats.begin(), feats.end());

    double best_gain = 0.0;
    int best_feature = -1;
    double best_threshold = 0.0;

    std::vector<int> sorted = idx;
    Eigen::VectorXd left_counts(n_classes);
    for (std::size_t f : feats) {
      const int j = static_cast<int>(f);
      std::sort(sorted.begin(), sorted.end(), [&](int a, int b) {
        if (X(a, j) != X(b, j)) return X(a, j) < X(b, j);
        return a < b;
      });
      left_counts.setZero();
      for (std::size_t k = 0; k + 1 < sorted.size(); ++k) {
        left_counts[y[static_cast<std::size_t>(sorted[k])]] += 1.0;
        const double xa = X(sorted[k], j);
        const double xb = X(sorted[k + 1], j);
        if (xa == xb) continue;
        const double nl = static_cast<double>(k + 1);
        const double nr = total - nl;
        const double gain = node_gini - (nl / total) * gini(left_counts, nl) -
                            (nr / total) * gini(counts - left_counts, nr);
        if (gain > best_gain + 1e-12) {
          best_gain = gain;
          best_feature = j;
          best_threshold = 0.5 * (xa + xb);
        }
      }
    }

    if (best_feature < 0) {
      // No candidate feature separates the node; emit a leaf.
      tree.nodes[static_cast<std::size_t>(node_id)].leaf_proba = counts / total;
      return node_id;
    }

    std::vector<int> left_idx, right_idx;
    left_idx.reserve(idx.size());
    right_idx.reserve(idx.size());
    for (int i : idx) {
      if (X(i, best_feature) <= best_threshold)
        left_idx.push_back(i);
      else
        right_idx.push_back(i);
    }

    tree.nodes[static_cast<std::size_t>(node_id)].feature = best_feature;
    tree.nodes[static_cast<std::size_t>(node_id)].threshold = best_threshold;
    const int left = build(left_idx);
    tree.nodes[static_cast<std::size_t>(node_id)].left = left;
    const int right = build(right_idx);
    tree.nodes[static_cast<std::size_t>(node_id)].right = right;
    return node_id;
  }
};

}  // namespace

ForestModel fit_forest(const Dataset& ds, int n_trees, std::uint64_t rng_seed) {
  if (n_trees < 1) throw Error("fit_forest: n_trees must be >= 1");
  const Eigen::Index n = ds.n_rows();
  const int p = static_cast<int>(ds.p());
  const int mtry = static_cast<int>(std::ceil(std::sqrt(static_cast<double>(p))));

  ForestModel model;
  model.n_classes_ = ds.n_classes;
  model.n_features_ = p;
  model.seed_ = rng_seed;
  model.trees_.reserve(static_cast<std::size_t>(n_trees));

  for (int t = 0; t < n_trees; ++t) {
    RngStream rng(derive_seed(rng_seed, {0x666f7265u /* "fore" */, static_cast<std::uint64_t>(t)}));
    std::vector<int> idx(static_cast<std::size_t>(n));
    for (auto& i : idx) i = static_cast<int>(rng.below(static_cast<std::uint64_t>(n)));
    TreeBuilder builder{ds.features, ds.labels, ds.n_classes, mtry, rng, {}};
    builder.build(idx);
    model.trees_.push_back(std::move(builder.tree));
  }
  return model;
}

Eigen::MatrixXd ForestModel::predict_proba(const Eigen::MatrixXd& X) const {
  if (X.cols() != n_features_)
    throw Error("ForestModel::predict_proba: expected " + std::to_string(n_features_) +
                " features, got " + std::to_string(X.cols()));
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(X.rows(), n_classes_);
  for (const Tree& tree : trees_) {
    for (Eigen::Index i = 0; i < X.rows(); ++i) {
      int node = 0;
      while (tree.nodes[static_cast<std::size_t>(node)].feature >= 0) {
        const auto& nd = tree.nodes[static_cast<std::size_t>(node)];
        node = X(i, nd.feature) <= nd.threshold ? nd.left : nd.right;
      }
      out.row(i) += tree.nodes[static_cast<std::size_t>(node)].leaf_proba.transpose();
    }
  }
  out /= static_cast<double>(trees_.size());
  return out;
}

}  // namespace limelab
