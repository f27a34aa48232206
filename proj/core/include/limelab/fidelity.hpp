#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "limelab/blackbox.hpp"
#include "limelab/dataset.hpp"
#include "limelab/explain.hpp"
#include "limelab/sampling.hpp"

namespace limelab {

/// Root mean squared error between two equal-length prediction vectors.
double rmse(const Eigen::VectorXd& yr, const Eigen::VectorXd& ys);

/// Evaluation protocol: fresh samples in the r_max ball around the
/// explained instance, reference vs surrogate predictions compared by RMSE.
struct EvalSpec {
  int m = 50000;
  double sigma = 1.0;
  double rmax_p = 0.999;
  RadialLaw law = RadialLaw::kernel_matched;
  std::uint64_t seed = 0;
};

/// One fidelity measurement. `error` is empty on success; error rows are
/// excluded from summaries.
struct FidelityRecord {
  std::string dataset;
  std::string model;
  Method method = Method::lime;
  double sigma = 0.0;
  Eigen::Index instance = 0;
  double rmse = 0.0;
  int m = 0;
  double r_max = 0.0;
  std::uint64_t seed = 0;
  double wall_ms = 0.0;
  std::string error;
};

/// Draws spec.m evaluation samples around the explained instance (RNG
/// stream independent of training), labels them with the black-box
/// probability of the explanation's target class, and scores the surrogate.
/// Surrogate outputs are compared as-is, never clamped to [0, 1].
FidelityRecord evaluate_fidelity(const Dataset& ds, const BlackBoxModel& model,
                                 const Explanation& expl, const EvalSpec& spec);

/// Black-box factory description for grid runs.
struct ModelSpec {
  std::string kind;  // gnb | forest | mlp | external
  int n_trees = 200;
  std::vector<int> hidden = {100, 100, 100};
  int epochs = 200;
  int batch_size = 32;
  double learning_rate = 1e-3;
  double momentum = 0.9;
  double gnb_epsilon = 1e-9;
  std::string command;  // external only

  std::string display_name() const { return kind; }
};

/// Fits (or wraps) the described model on a dataset.
std::shared_ptr<BlackBoxModel> fit_model(const ModelSpec& spec, const Dataset& ds,
                                         std::uint64_t seed);

/// Kernel width entry: a literal value, or the per-dataset default
/// (3/4) * sqrt(p) when `value` is unset.
struct SigmaSpec {
  std::optional<double> value;

  double resolve(int p) const;
  static SigmaSpec literal(double v) { return SigmaSpec{v}; }
  static SigmaSpec dataset_default() { return SigmaSpec{std::nullopt}; }
};

/// The experiment grid: every (dataset, model, sigma, method, instance)
/// combination yields one record.
struct GridSpec {
  std::vector<Dataset> datasets;
  std::vector<ModelSpec> models;
  std::vector<Method> methods;
  std::vector<SigmaSpec> sigmas;
  int instances_per_dataset = 20;  // 0 = every row
  ExplainerConfig explainer;       // defaults; method/sigma/seed set per cell
};

/// Runs the grid. Models are fitted once per dataset; all cell seeds derive
/// from the master seed, so results are independent of `jobs` (the number
/// of worker threads; 0 = hardware concurrency). Individual cell failures
/// become error records and never abort the run. Records come back in
/// canonical order (dataset, model, sigma, method, instance).
std::vector<FidelityRecord> run_grid(const GridSpec& grid, const EvalSpec& eval_spec,
                                     std::uint64_t master_seed, int jobs = 0);

/// Summary over a set of records sharing a grid.
struct Summary {
  struct Cell {
    std::string dataset;
    std::string model;
    double sigma = 0.0;
    Method method = Method::lime;
    double mean_rmse = 0.0;
    int n_instances = 0;
  };

  std::vector<Cell> cells;  // canonical order
  /// Mean over cells of (1 - rmse_method / rmse_lime), per method.
  std::map<Method, double> mean_reduction_vs_lime;
  /// 1 - (sum rmse_method) / (sum rmse_lime) over the same cells.
  std::map<Method, double> ratio_of_means_reduction;
  int cells_excluded_from_reduction = 0;  // lime rmse below 1e-12
  int error_records = 0;

  const Cell* find(const std::string& dataset, const std::string& model, double sigma,
                   Method method) const;

  /// Markdown table: dataset x sigma rows, model x method columns, best
  /// value per (dataset, sigma, model) group in bold.
  std::string to_markdown() const;
};

Summary summarize(const std::vector<FidelityRecord>& records);

}  // namespace limelab
