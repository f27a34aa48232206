#include <sstream>

#include "limelab/blackbox.hpp"
#include "limelab/common.hpp"
#include "limelab/subprocess.hpp"

namespace limelab {

struct ExternalModel::Impl {
  ChildProcess child;
  explicit Impl(const std::string& command) : child(command) {}
};

ExternalModel::ExternalModel(std::string command, int n_features, int n_classes)
    : command_(std::move(command)), n_features_(n_features), n_classes_(n_classes) {
  if (n_features < 1 || n_classes < 1)
    throw Error("ExternalModel: n_features and n_classes must be positive");
  impl_ = std::make_unique<Impl>(command_);
  impl_->child.write_line("HELLO " + std::to_string(n_features) + " " +
                          std::to_string(n_classes));
  const std::string reply = impl_->child.read_line();
  if (reply != "OK")
    throw Error("ExternalModel: handshake failed, child replied '" + reply + "'");
}

ExternalModel::~ExternalModel() {
  try {
    if (impl_) {
      impl_->child.write_line("BYE");
      impl_->child.finish();
    }
  } catch (...) {
    // Child already gone; nothing to clean up.
  }
}

Eigen::MatrixXd ExternalModel::predict_proba(const Eigen::MatrixXd& X) const {
  if (X.cols() != n_features_)
    throw Error("ExternalModel::predict_proba: expected " + std::to_string(n_features_) +
                " features, got " + std::to_string(X.cols()));
  Eigen::MatrixXd out(X.rows(), n_classes_);
  if (X.rows() == 0) return out;

  std::lock_guard<std::mutex> lock(mutex_);
  impl_->child.write_line("BATCH " + std::to_string(X.rows()));
  for (Eigen::Index i = 0; i < X.rows(); ++i) {
    std::string row;
    for (Eigen::Index j = 0; j < X.cols(); ++j) {
      if (j) row.push_back(',');
      row += format_double(X(i, j));
    }
    impl_->child.write_line(row);
  }
  for (Eigen::Index i = 0; i < X.rows(); ++i) {
    const std::string line = impl_->child.read_line();
    std::stringstream ss(line);
    std::string cell;
    Eigen::Index j = 0;
    while (std::getline(ss, cell, ',')) {
      if (j >= n_classes_)
        throw Error("ExternalModel: row " + std::to_string(i) + " has too many cells: " + line);
      double v = 0.0;
      if (!parse_double(cell, v))
        throw Error("ExternalModel: bad probability '" + cell + "' in row " + std::to_string(i));
      out(i, j++) = v;
    }
    if (j != n_classes_)
      throw Error("ExternalModel: row " + std::to_string(i) + " has " + std::to_string(j) +
                  " cells, expected " + std::to_string(n_classes_));
  }
  return out;
}

}  // namespace limelab
