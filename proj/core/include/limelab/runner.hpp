#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>

#include "limelab/config.hpp"

namespace limelab {

/// Runs the configured experiment grid and writes records.csv, errors.csv
/// (when cells fail), timings.csv, summary.md, and resolved_config.json
/// into the output directory. Returns 0 on success, 2 when any cell
/// produced an error record.
int cmd_benchmark(const RunConfig& cfg, std::ostream& log);

struct ExplainArgs {
  std::string dataset_path;
  int label_column = -1;
  std::string model = "gnb";  // gnb | forest | mlp | external:<command>
  std::string method = "mlime";
  double sigma = 1.0;
  Eigen::Index instance = 0;
  std::uint64_t seed = 0;
  int n_train_samples = 5000;
  int eval_m = 10000;
  std::string output_path;  // empty = log stream
};

/// Explains a single instance and reports attributions plus the fidelity
/// of this one explanation. Returns 0 on success.
int cmd_explain(const ExplainArgs& args, std::ostream& log);

/// Runs the built-in analytic check suite, printing one pass/fail line per
/// check. Returns 0 when every check passes.
int cmd_selftest(std::ostream& log);

}  // namespace limelab
