#include "limelab/dataset.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "limelab/common.hpp"

namespace limelab {

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cur;
  for (char ch : line) {
    if (ch == ',') {
      cells.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(ch);
    }
  }
  cells.push_back(cur);
  return cells;
}

bool is_blank(const std::string& s) {
  for (char ch : s)
    if (ch != ' ' && ch != '\t' && ch != '\r') return false;
  return true;
}

}  // namespace

RawTable load_csv(const std::string& path, int label_column) {
  std::ifstream file(path, std::ios::binary);
  if (!file) throw Error("load_csv: cannot open '" + path + "'");

  std::vector<std::vector<double>> rows;
  std::vector<std::string> header;
  std::string line;
  std::size_t line_no = 0;
  std::size_t n_cols = 0;
  bool first_content_row = true;

  while (std::getline(file, line)) {
    ++line_no;
    if (line_no == 1 && line.size() >= 3 && static_cast<unsigned char>(line[0]) == 0xEF &&
        static_cast<unsigned char>(line[1]) == 0xBB && static_cast<unsigned char>(line[2]) == 0xBF)
      line.erase(0, 3);  // UTF-8 BOM
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (is_blank(line)) continue;

    const auto cells = split_csv_line(line);
    std::vector<double> row(cells.size());
    bool numeric = true;
    std::size_t bad_col = 0;
    for (std::size_t c = 0; c < cells.size(); ++c) {
      if (is_blank(cells[c])) {
        throw Error("load_csv: missing value at row " + std::to_string(line_no) + ", column " +
                    std::to_string(c + 1) + " in '" + path + "'");
      }
      if (!parse_double(cells[c], row[c])) {
        numeric = false;
        bad_col = c;
        break;
      }
    }

    if (first_content_row) {
      if (!numeric) {
        header.assign(cells.begin(), cells.end());
        first_content_row = false;
        continue;
      }
      n_cols = cells.size();
      first_content_row = false;
    } else if (rows.empty() && n_cols == 0) {
      // First data row after a header line.
      n_cols = cells.size();
    }

    if (!numeric) {
      throw Error("load_csv: non-numeric cell '" + cells[bad_col] + "' at row " +
                  std::to_string(line_no) + ", column " + std::to_string(bad_col + 1) + " in '" +
                  path + "'");
    }
    if (cells.size() != n_cols) {
      throw Error("load_csv: ragged row " + std::to_string(line_no) + " has " +
                  std::to_string(cells.size()) + " cells, expected " + std::to_string(n_cols) +
                  " in '" + path + "'");
    }
    for (double v : row) {
      if (!std::isfinite(v))
        throw Error("load_csv: non-finite value at row " + std::to_string(line_no) + " in '" +
                    path + "'");
    }
    rows.push_back(std::move(row));
  }

  if (rows.empty()) throw Error("load_csv: no data rows in '" + path + "'");
  if (rows.size() < 2) throw Error("load_csv: need at least 2 rows, got 1 in '" + path + "'");
  if (n_cols < 2) throw Error("load_csv: need at least one feature column and a label column");

  std::size_t label_idx;
  if (label_column < 0) {
    label_idx = n_cols - 1;
  } else {
    label_idx = static_cast<std::size_t>(label_column);
    if (label_idx >= n_cols)
      throw Error("load_csv: label column " + std::to_string(label_column) +
                  " out of range for " + std::to_string(n_cols) + " columns");
  }

  if (header.empty()) {
    for (std::size_t c = 0; c < n_cols; ++c) header.push_back("x" + std::to_string(c));
  } else if (header.size() != n_cols) {
    throw Error("load_csv: header has " + std::to_string(header.size()) + " cells but rows have " +
                std::to_string(n_cols));
  }

  RawTable table;
  table.values.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(n_cols));
  // Column order: features in original order, label last.
  std::vector<std::size_t> order;
  for (std::size_t c = 0; c < n_cols; ++c)
    if (c != label_idx) order.push_back(c);
  order.push_back(label_idx);

  for (std::size_t c = 0; c < n_cols; ++c) table.column_names.push_back(header[order[c]]);
  for (std::size_t r = 0; r < rows.size(); ++r)
    for (std::size_t c = 0; c < n_cols; ++c)
      table.values(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][order[c]];

  // Validate labels: non-negative integers.
  const Eigen::Index lab = table.n_cols() - 1;
  for (Eigen::Index r = 0; r < table.n_rows(); ++r) {
    const double v = table.values(r, lab);
    if (v < 0.0 || std::fabs(v - std::round(v)) > 1e-9)
      throw Error("load_csv: label at row " + std::to_string(r + 1) + " is " + format_double(v) +
                  "; labels must be non-negative integers");
  }

  table.source_stem = std::filesystem::path(path).stem().string();
  return table;
}

Dataset standardize(const RawTable& raw) {
  const Eigen::Index n = raw.n_rows();
  const Eigen::Index p = raw.n_cols() - 1;
  Dataset ds;
  ds.features = raw.values.leftCols(p);
  ds.feature_means.resize(p);
  ds.feature_stds.resize(p);
  ds.name = raw.source_stem;
  const bool have_names = raw.column_names.size() == static_cast<std::size_t>(raw.n_cols());
  for (Eigen::Index c = 0; c + 1 < raw.n_cols(); ++c)
    ds.feature_names.push_back(have_names ? raw.column_names[static_cast<std::size_t>(c)]
                                          : "x" + std::to_string(c));

  for (Eigen::Index j = 0; j < p; ++j) {
    const double mean = ds.features.col(j).mean();
    const double var = (ds.features.col(j).array() - mean).square().sum() / static_cast<double>(n);
    double std_dev = std::sqrt(var);
    if (std_dev <= 0.0) std_dev = 1.0;  // constant column: center only
    ds.feature_means[j] = mean;
    ds.feature_stds[j] = std_dev;
    ds.features.col(j) = (ds.features.col(j).array() - mean) / std_dev;
  }

  ds.labels.resize(static_cast<std::size_t>(n));
  int max_label = 0;
  for (Eigen::Index r = 0; r < n; ++r) {
    const int lab = static_cast<int>(std::llround(raw.values(r, p)));
    ds.labels[static_cast<std::size_t>(r)] = lab;
    max_label = std::max(max_label, lab);
  }
  ds.n_classes = max_label + 1;
  return ds;
}

Eigen::VectorXd Dataset::instance(Eigen::Index idx) const {
  if (idx < 0 || idx >= n_rows())
    throw Error("Dataset::instance: index " + std::to_string(idx) + " out of range [0, " +
                std::to_string(n_rows()) + ")");
  return features.row(idx).transpose();
}

Eigen::VectorXd Dataset::destandardize(const Eigen::VectorXd& z) const {
  return (z.array() * feature_stds.array() + feature_means.array()).matrix();
}

}  // namespace limelab
