#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

namespace limelab {

/// Parsed CSV table. The label column has been moved to the last position;
/// all values are finite and labels are non-negative integers.
struct RawTable {
  std::vector<std::string> column_names;  // label name last
  Eigen::MatrixXd values;                 // n_rows x n_cols, label last
  std::string source_stem;                // file stem, for dataset identity

  Eigen::Index n_rows() const { return values.rows(); }
  Eigen::Index n_cols() const { return values.cols(); }
};

/// Standardized tabular dataset: features are per-column z-scores
/// (population convention), labels are dense class indices.
class Dataset {
 public:
  Eigen::MatrixXd features;       // n_rows x p
  std::vector<int> labels;        // length n_rows, in [0, n_classes)
  Eigen::VectorXd feature_means;  // length p
  Eigen::VectorXd feature_stds;   // length p, all > 0
  int n_classes = 0;
  std::vector<std::string> feature_names;
  std::string name;  // file stem

  Eigen::Index n_rows() const { return features.rows(); }
  Eigen::Index p() const { return features.cols(); }

  /// Standardized feature row; throws on out-of-range index.
  Eigen::VectorXd instance(Eigen::Index idx) const;

  /// Maps a standardized vector back to original units.
  Eigen::VectorXd destandardize(const Eigen::VectorXd& z) const;

  /// Identity string used in result records: "<stem>_p<p>".
  std::string id() const { return name + "_p" + std::to_string(p()); }
};

/// Loads a CSV file of numeric columns. A single header row is auto-detected
/// (any non-numeric cell makes the first row a header). label_column selects
/// the class column by index; -1 means the last column. The label column is
/// moved to the last position, row order preserved.
///
/// Throws Error with row/column locations on I/O failure, non-numeric
/// feature cells, ragged rows, missing values, non-integer or negative
/// labels, or an empty file.
RawTable load_csv(const std::string& path, int label_column = -1);

/// Standardizes each feature column to mean 0, population std 1. Constant
/// columns are centered only (std stored as 1.0), never dropped.
Dataset standardize(const RawTable& raw);

}  // namespace limelab
